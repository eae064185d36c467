use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use thiserror::Error;

use super::{DiffOp, Multi};
use crate::expr::{EvalError, Instantiation, Sampler};
use crate::linalg::lstsq;
use crate::scalar::{cnorm, Cx, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("basis is rank deficient; dependent members {0:?}")]
    RankDeficient(Vec<usize>),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T: Scalar> {
    pub coeffs: Vec<Cx<T>>,
    /// Largest absolute mismatch over all pooled coefficient values.
    pub residual: T,
    /// Largest absolute pooled coefficient value of the projected operator.
    pub scale: T,
}

/// Least-squares coefficients of `op` in the span of `basis`, fitted on
/// pooled coefficient values at `n` sample points.
pub fn project<T: Scalar>(
    op: &DiffOp,
    basis: &[DiffOp],
    sampler: &mut Sampler,
    inst: &Arc<Instantiation<T>>,
    n: usize,
    retries: usize,
) -> Result<Projection<T>, ProjectionError> {
    let mut slots: BTreeSet<Multi> = op.terms.keys().copied().collect();
    for b in basis {
        slots.extend(b.terms.keys().copied());
    }
    let slots: Vec<Multi> = slots.into_iter().collect();
    let rows_per_point = slots.len() * 4;
    let pts = sampler.collect(inst, n, retries, |p| {
        let target = op.eval(p)?;
        let cols = basis.iter().map(|b| b.eval(p)).collect::<Result<Vec<_>, _>>()?;
        Ok((target, cols))
    })?;
    let m = rows_per_point * pts.len();
    let mut a = DMatrix::<Cx<T>>::zeros(m, basis.len());
    let mut rhs = DVector::<Cx<T>>::zeros(m);
    for (pi, (_, (target, cols))) in pts.iter().enumerate() {
        for (si, slot) in slots.iter().enumerate() {
            for c in 0..4 {
                let row = pi * rows_per_point + si * 4 + c;
                if let Some(v) = target.get(slot) {
                    rhs[row] = v.0[c];
                }
                for (k, col) in cols.iter().enumerate() {
                    if let Some(v) = col.get(slot) {
                        a[(row, k)] = v.0[c];
                    }
                }
            }
        }
    }
    let scale = rhs.iter().map(|z| cnorm(*z)).fold(T::zero(), Float::max);
    if basis.is_empty() {
        return Ok(Projection { coeffs: vec![], residual: scale, scale });
    }
    let norms: Vec<T> = (0..basis.len()).map(|k| a.column(k).norm()).collect();
    if let Some(k) = norms.iter().position(|x| x.is_zero()) {
        return Err(ProjectionError::RankDeficient(vec![k]));
    }
    let mut an = a.clone();
    for (k, nk) in norms.iter().enumerate() {
        an.column_mut(k).unscale_mut(*nk);
    }
    let x = lstsq(&an, &rhs, T::of(1e-10)).map_err(|e| ProjectionError::RankDeficient(e.columns))?;
    let coeffs: Vec<Cx<T>> = x.iter().zip(&norms).map(|(c, nk)| *c / *nk).collect();
    let fit = &a * DVector::from_vec(coeffs.clone());
    let residual = (fit - &rhs).iter().map(|z| cnorm(*z)).fold(T::zero(), Float::max);
    Ok(Projection { coeffs, residual, scale })
}
