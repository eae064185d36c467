//! Dense SVD-based helpers (faer kernels): nullspaces, least squares and numerical rank.

use faer::{c64, Mat};
use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::scalar::{cnorm, Cx, Scalar};

/// Full SVD computed by faer in double precision. Singular values are
/// sorted in decreasing order and padded with zeros up to the column count.
pub struct Svd<T: Scalar> {
    pub singular: Vec<T>,
    /// Columns are right singular vectors, ordered like `singular`.
    pub v: DMatrix<Cx<T>>,
    /// Columns are left singular vectors.
    pub u: DMatrix<Cx<T>>,
}

pub fn svd<T: Scalar>(a: &DMatrix<Cx<T>>) -> Svd<T> {
    let (m, n) = a.shape();
    let fm = Mat::<c64>::from_fn(m, n, |i, j| c64::new(a[(i, j)].re.to_f64_lossy(), a[(i, j)].im.to_f64_lossy()));
    let s = fm.svd().expect("svd of a finite matrix");
    let sv = s.S().column_vector();
    let k = m.min(n);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].re.partial_cmp(&sv[i].re).unwrap_or(std::cmp::Ordering::Equal));
    order.extend(k..n);
    let back = |z: c64| Cx::new(T::of(z.re), T::of(z.im));
    let singular = order.iter().map(|&c| if c < k { T::of(sv[c].re) } else { T::zero() }).collect();
    let (fu, fv) = (s.U(), s.V());
    let v = DMatrix::from_fn(n, n, |r, c| back(fv[(r, order[c])]));
    let ucols: Vec<usize> = order.iter().copied().filter(|&c| c < m).chain(k..m).collect();
    let u = DMatrix::from_fn(m, m, |r, c| back(fu[(r, ucols[c])]));
    Svd { singular, v, u }
}

/// Nullspace from singular-value thresholding.
pub struct Nullspace<T: Scalar> {
    /// Orthonormal columns spanning the nullspace.
    pub basis: DMatrix<Cx<T>>,
    /// Singular values divided by the largest one.
    pub relative_singular: Vec<T>,
    /// Ratio of the smallest retained to the largest discarded singular value.
    pub gap: Option<T>,
}

pub fn nullspace<T: Scalar>(a: &DMatrix<Cx<T>>, rel_tol: T) -> Nullspace<T> {
    let n = a.ncols();
    if n == 0 {
        return Nullspace { basis: DMatrix::zeros(0, 0), relative_singular: vec![], gap: None };
    }
    let s = svd(a);
    let smax = s.singular.first().copied().unwrap_or(T::zero());
    let rel: Vec<T> = if smax > T::zero() {
        s.singular.iter().map(|&x| x / smax).collect()
    } else {
        vec![T::zero(); s.singular.len()]
    };
    let rank = rel.iter().filter(|&&x| x >= rel_tol).count();
    let gap = if rank > 0 && rank < rel.len() {
        let below = rel[rank];
        Some(if below > T::zero() { rel[rank - 1] / below } else { T::infinity() })
    } else {
        None
    };
    let basis = s.v.columns(rank, n - rank).into_owned();
    Nullspace { basis, relative_singular: rel, gap }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankDeficient {
    /// Columns participating in the (approximate) linear dependency.
    pub columns: Vec<usize>,
}

/// Least-squares solution of `a x ≈ b`; fails when `a` has dependent columns.
pub fn lstsq<T: Scalar>(a: &DMatrix<Cx<T>>, b: &DVector<Cx<T>>, rel_tol: T) -> Result<DVector<Cx<T>>, RankDeficient> {
    let n = a.ncols();
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    let s = svd(a);
    let smax = s.singular[0];
    if let Some(k) = s.singular.iter().position(|&x| x <= rel_tol * smax) {
        let v = s.v.column(k);
        let big = v.iter().map(|z| cnorm(*z)).fold(T::zero(), Float::max);
        let columns = (0..n).filter(|&j| cnorm(v[j]) > T::of(1e-3) * big).collect();
        return Err(RankDeficient { columns });
    }
    let bp = b;
    let mut x = DVector::zeros(n);
    for k in 0..n {
        let uk = s.u.column(k);
        let coef = uk.dotc(bp) / Cx::from(s.singular[k]);
        x += s.v.column(k) * coef;
    }
    Ok(x)
}

fn real_singular<T: Scalar>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let (r, c) = m.shape();
    let fm = Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)].to_f64_lossy());
    let s = fm.thin_svd().expect("svd of a finite matrix");
    let sv = s.S().column_vector();
    let u = s.U();
    (
        (0..r.min(c)).map(|k| T::of(sv[k])).collect(),
        DMatrix::from_fn(r, r.min(c), |i, j| T::of(u[(i, j)])),
    )
}

/// Numerical rank of a real matrix relative to its largest singular value.
pub fn rank_real<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> usize {
    column_span_real(m, rel_tol).ncols()
}

/// Orthonormal basis (columns) of the column span of a real matrix.
pub fn column_span_real<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (sv, u) = real_singular(m);
    let smax = sv.iter().copied().fold(T::zero(), Float::max);
    let keep: Vec<usize> = (0..sv.len()).filter(|&k| smax > T::zero() && sv[k] > rel_tol * smax).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Nullspace of a real matrix from its thin SVD (evaluated in f64).
/// Returns the basis as columns, the singular values relative to the largest
/// and the gap ratio at the threshold, as for [`nullspace`].
pub fn nullspace_real<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> (DMatrix<T>, Vec<T>, Option<T>) {
    let n = m.ncols();
    if n == 0 {
        return (DMatrix::zeros(0, 0), vec![], None);
    }
    let rows = m.nrows().max(n);
    let fm = Mat::<f64>::from_fn(rows, n, |i, j| if i < m.nrows() { m[(i, j)].to_f64_lossy() } else { 0.0 });
    let s = fm.thin_svd().expect("svd of a finite matrix");
    let sv = s.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(std::cmp::Ordering::Equal));
    let smax = sv[order[0]];
    let rel: Vec<T> = order.iter().map(|&k| if smax > 0.0 { T::of(sv[k] / smax) } else { T::zero() }).collect();
    let rank = rel.iter().filter(|&&x| x >= rel_tol).count();
    let gap = if rank > 0 && rank < n {
        let below = rel[rank];
        Some(if below > T::zero() { rel[rank - 1] / below } else { T::infinity() })
    } else {
        None
    };
    let v = s.V();
    let basis = DMatrix::from_fn(n, n - rank, |r, c| T::of(v[(r, order[rank + c])]));
    (basis, rel, gap)
}

/// Reduced row echelon form in place with partial pivoting; returns pivot columns.
pub fn rref_real<T: Scalar>(m: &mut DMatrix<T>, tol: T) -> Vec<usize> {
    let (rows, cols) = m.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows).map(|i| (i, Float::abs(m[(i, c)]))).fold((r, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        m.swap_rows(r, p);
        let inv = T::one() / m[(r, c)];
        for j in 0..cols {
            m[(r, j)] *= inv;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if !f.is_zero() {
                    for j in 0..cols {
                        let v = m[(r, j)];
                        m[(i, j)] -= f * v;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Cx<f64>;

    #[test]
    fn nullspace_of_rank_one() {
        let a = DMatrix::from_row_slice(2, 3, &[C::new(1.0, 0.0), C::new(2.0, 0.0), C::new(0.0, 1.0), C::new(2.0, 0.0), C::new(4.0, 0.0), C::new(0.0, 2.0)]);
        let ns = nullspace(&a, 1e-10);
        assert_eq!(ns.basis.ncols(), 2);
        let prod = &a * &ns.basis;
        assert!(prod.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn least_squares_recovers_combination() {
        let a = DMatrix::from_fn(6, 2, |r, c| C::new((r + 1) as f64, (c * r) as f64));
        let x = DVector::from_vec(vec![C::new(1.0, 0.0), C::new(0.0, 2.0)]);
        let b = &a * &x;
        let got = lstsq(&a, &b, 1e-10).unwrap();
        assert!((got - x).norm() < 1e-12);
    }

    #[test]
    fn dependent_columns_are_named() {
        let a = DMatrix::from_fn(5, 3, |r, c| C::new(if c == 2 { 2.0 * r as f64 } else if c == 0 { r as f64 } else { 1.0 }, 0.0));
        let b = DVector::zeros(5);
        let err = lstsq(&a, &b, 1e-10).unwrap_err();
        assert_eq!(err.columns, vec![0, 2]);
    }

    #[test]
    fn rref_identifies_pivots() {
        let mut m = DMatrix::from_row_slice(2, 3, &[2.0, 4.0, 1.0, 1.0, 2.0, 3.0]);
        let piv = rref_real(&mut m, 1e-12);
        assert_eq!(piv, vec![0, 2]);
        assert!(f64::abs(m[(0, 1)] - 2.0) < 1e-12);
    }
}
