//! Structure constants, invariant fingerprints and label matching for the
//! symmetry algebras.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_traits::Float;
use std::sync::LazyLock;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::diffop::{commutator, parse_generator, project, DiffOpError, NamedGenerator, ProjectionError};
use crate::expr::{ParamTable, Sampler, Scope};
use crate::scalar::{cnorm, Cx, Scalar};

/// Relative rank threshold used by every invariant.
pub const RANK_TOL: f64 = 1e-8;

fn floor<T: Scalar>(t: f64) -> T {
    Float::max(T::of(t), T::epsilon() * T::of(100.0))
}
/// Largest acceptable relative projection residual of a commutator.
pub const CLOSURE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("[{0}, {1}] is not in the span of the basis (relative residual {2:.2e})")]
    NotClosed(String, String, f64),
    #[error("basis members {0:?} are linearly dependent")]
    Dependent(Vec<String>),
    #[error(transparent)]
    Order(#[from] DiffOpError),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

/// `[e_i, e_j] = Σ_k c[i][j][k] e_k` for the basis `e_k = i·Q_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants<T: Scalar> {
    pub dim: usize,
    pub labels: Vec<String>,
    c: Vec<Cx<T>>,
    /// Largest relative projection residual met while building the table.
    pub closure_residual: T,
}

impl<T: Scalar> StructureConstants<T> {
    pub fn zeros(labels: Vec<String>) -> Self {
        let dim = labels.len();
        StructureConstants { dim, labels, c: vec![Cx::new(T::zero(), T::zero()); dim * dim * dim], closure_residual: T::zero() }
    }

    /// Builds real constants from `(i, j, k, value)` with `i < j`; antisymmetry is implied.
    pub fn from_real(labels: &[&str], entries: &[(usize, usize, usize, f64)]) -> Self {
        let mut sc = Self::zeros(labels.iter().map(|s| s.to_string()).collect());
        for &(i, j, k, v) in entries {
            sc.set(i, j, k, Cx::new(T::of(v), T::zero()));
            sc.set(j, i, k, Cx::new(T::of(-v), T::zero()));
        }
        sc
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Cx<T> {
        self.c[self.idx(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Cx<T>) {
        let n = self.idx(i, j, k);
        self.c[n] = v;
    }

    pub fn re(&self, i: usize, j: usize, k: usize) -> T {
        self.get(i, j, k).re
    }

    /// Largest imaginary part over all entries.
    pub fn max_imag(&self) -> T {
        self.c.iter().map(|z| Float::abs(z.im)).fold(T::zero(), Float::max)
    }

    pub fn max_abs(&self) -> T {
        self.c.iter().map(|z| cnorm(*z)).fold(T::zero(), Float::max)
    }

    /// `max |[[e_i,e_j],e_k] + cyclic|`.
    pub fn jacobi_residual(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = Cx::new(T::zero(), T::zero());
                        for m in 0..d {
                            s += self.get(i, j, m) * self.get(m, k, l)
                                + self.get(j, k, m) * self.get(m, i, l)
                                + self.get(k, i, m) * self.get(m, j, l);
                        }
                        worst = Float::max(worst, cnorm(s));
                    }
                }
            }
        }
        worst
    }

    pub fn antisymmetry_residual(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = Float::max(worst, cnorm(self.get(i, j, k) + self.get(j, i, k)));
                }
            }
        }
        worst
    }

    /// Constants in the basis `f_a = Σ_i p[(i, a)] e_i`; `p` must be invertible.
    pub fn change_basis(&self, p: &DMatrix<T>) -> Option<Self> {
        let d = self.dim;
        let q = p.clone().try_inverse()?;
        let mut out = Self::zeros(self.labels.clone());
        for a in 0..d {
            for b in 0..d {
                let mut br = vec![Cx::new(T::zero(), T::zero()); d];
                for i in 0..d {
                    for j in 0..d {
                        let w = p[(i, a)] * p[(j, b)];
                        if w == T::zero() {
                            continue;
                        }
                        for (k, slot) in br.iter_mut().enumerate() {
                            *slot += self.get(i, j, k) * w;
                        }
                    }
                }
                for c in 0..d {
                    let mut v = Cx::new(T::zero(), T::zero());
                    for (k, x) in br.iter().enumerate() {
                        v += *x * q[(c, k)];
                    }
                    out.set(a, b, c, v);
                }
            }
        }
        out.closure_residual = self.closure_residual;
        Some(out)
    }

    /// Direct sum with another algebra.
    pub fn direct_sum(&self, o: &Self) -> Self {
        let mut labels = self.labels.clone();
        labels.extend(o.labels.iter().cloned());
        let mut out = Self::zeros(labels);
        let (d1, d2) = (self.dim, o.dim);
        for i in 0..d1 {
            for j in 0..d1 {
                for k in 0..d1 {
                    out.set(i, j, k, self.get(i, j, k));
                }
            }
        }
        for i in 0..d2 {
            for j in 0..d2 {
                for k in 0..d2 {
                    out.set(d1 + i, d1 + j, d1 + k, o.get(i, j, k));
                }
            }
        }
        out
    }

    /// Sparse JSON form `{dim, labels, c: [[i, j, k, re, im], ...]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let tol = T::of(1e-12) * Float::max(T::one(), self.max_abs());
        let mut entries = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let z = self.get(i, j, k);
                    if cnorm(z) > tol {
                        entries.push(serde_json::json!([i, j, k, z.re.to_f64_lossy(), z.im.to_f64_lossy()]));
                    }
                }
            }
        }
        serde_json::json!({ "dim": self.dim, "labels": self.labels, "c": entries })
    }
}

fn lie_eval(e: ProjectionError, names: &[String]) -> LieError {
    match e {
        ProjectionError::RankDeficient(cols) => LieError::Dependent(cols.iter().map(|&k| names[k].clone()).collect()),
        ProjectionError::Eval(e) => LieError::Eval(e.to_string()),
    }
}

/// Structure constants of the span of `basis` by projecting every commutator
/// back onto the basis at sample points.
pub fn structure_constants<T: Scalar>(basis: &[NamedGenerator], scope: &Scope, seed: u64) -> Result<StructureConstants<T>, LieError> {
    let names: Vec<String> = basis.iter().map(|g| g.name.clone()).collect();
    let ops: Vec<_> = basis.iter().map(|g| g.op.clone()).collect();
    let mut sampler = Sampler::new(seed);
    let inst = sampler.instantiate::<T>(scope);
    let mut sc = StructureConstants::zeros(names.clone());
    let d = ops.len();
    let i_unit = Cx::new(T::zero(), T::one());
    for i in 0..d {
        for j in (i + 1)..d {
            let c = commutator(&ops[i], &ops[j])?;
            if c.is_zero() {
                continue;
            }
            let p = project(&c, &ops, &mut sampler, &inst, 8, crate::expr::sample::DEFAULT_RETRIES)
                .map_err(|e| lie_eval(e, &names))?;
            let rel = p.residual / (T::one() + p.scale);
            sc.closure_residual = Float::max(sc.closure_residual, rel);
            if rel >= floor::<T>(CLOSURE_TOL) {
                return Err(LieError::NotClosed(names[i].clone(), names[j].clone(), rel.to_f64_lossy()));
            }
            for (k, coef) in p.coeffs.iter().enumerate() {
                sc.set(i, j, k, i_unit * *coef);
                sc.set(j, i, k, -(i_unit * *coef));
            }
        }
    }
    Ok(sc)
}

/// Isomorphism invariants used for label matching.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Fingerprint {
    pub dim: usize,
    pub derived_series: Vec<usize>,
    pub lower_central_series: Vec<usize>,
    pub center: usize,
    pub abelianization: usize,
    pub killing_rank: usize,
    /// Positive and negative eigenvalue counts of the Killing form.
    pub killing_signature: (usize, usize),
    pub solvable: bool,
    pub nilpotent: bool,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dim {} derived {:?} lcs {:?} center {} killing ({},{})",
            self.dim, self.derived_series, self.lower_central_series, self.center, self.killing_signature.0, self.killing_signature.1
        )
    }
}

/// Orthonormal basis (columns) of the span of the columns of `m`, by
/// column-pivoted QR with diagonal threshold `tol`.
fn span<T: Scalar>(m: &DMatrix<T>, tol: T) -> DMatrix<T> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let rank = (0..rows.min(cols)).take_while(|&k| Float::abs(r[(k, k)]) > tol).count();
    qr.q().columns(0, rank).into_owned()
}

fn rank<T: Scalar>(m: &DMatrix<T>, tol: T) -> usize {
    span(m, tol).ncols()
}

struct Real<T: Scalar> {
    d: usize,
    c: Vec<T>,
    tol: T,
}

impl<T: Scalar> Real<T> {
    fn new(sc: &StructureConstants<T>) -> Self {
        let scale = Float::max(T::one(), sc.max_abs());
        Real { d: sc.dim, c: sc.c.iter().map(|z| z.re).collect(), tol: floor::<T>(RANK_TOL) * scale }
    }

    fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.c[(i * self.d + j) * self.d + k]
    }

    fn bracket(&self, a: &[T], b: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.d];
        for i in 0..self.d {
            if a[i] == T::zero() {
                continue;
            }
            for j in 0..self.d {
                let w = a[i] * b[j];
                if w == T::zero() {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.at(i, j, k);
                }
            }
        }
        out
    }

    fn bracket_span(&self, a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
        let mut cols = Vec::new();
        for x in a.column_iter() {
            let xv: Vec<T> = x.iter().copied().collect();
            for y in b.column_iter() {
                let yv: Vec<T> = y.iter().copied().collect();
                cols.push(self.bracket(&xv, &yv));
            }
        }
        let m = DMatrix::from_fn(self.d, cols.len(), |r, c| cols[c][r]);
        span(&m, self.tol)
    }
}

fn series<T: Scalar>(r: &Real<T>, lower: bool) -> Vec<usize> {
    let full = DMatrix::<T>::identity(r.d, r.d);
    let mut cur = full.clone();
    let mut dims = vec![r.d];
    loop {
        let next = if lower { r.bracket_span(&full, &cur) } else { r.bracket_span(&cur, &cur) };
        let n = next.ncols();
        if n == *dims.last().expect("nonempty") {
            break;
        }
        dims.push(n);
        if n == 0 {
            break;
        }
        cur = next;
    }
    dims
}

pub fn fingerprint<T: Scalar>(sc: &StructureConstants<T>) -> Fingerprint {
    let r = Real::new(sc);
    let d = r.d;
    let derived = series(&r, false);
    let lower = series(&r, true);
    let mut z = DMatrix::<T>::zeros(d * d, d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                z[(j * d + k, i)] = r.at(i, j, k);
            }
        }
    }
    let rank_z = rank(&z, r.tol);
    let mut killing = DMatrix::<T>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = T::zero();
            for k in 0..d {
                for l in 0..d {
                    s += r.at(i, k, l) * r.at(j, l, k);
                }
            }
            killing[(i, j)] = s;
        }
    }
    let (mut pos, mut neg) = (0, 0);
    if d > 0 {
        let eig = killing.symmetric_eigen().eigenvalues;
        let big = eig.iter().map(|x| Float::abs(*x)).fold(T::zero(), Float::max);
        let tol = floor::<T>(RANK_TOL) * Float::max(T::one(), big);
        for x in eig.iter() {
            if *x > tol {
                pos += 1;
            } else if *x < -tol {
                neg += 1;
            }
        }
    }
    let commutator_dim = derived.get(1).copied().unwrap_or(derived[0]);
    Fingerprint {
        dim: d,
        solvable: *derived.last().expect("nonempty") == 0,
        nilpotent: *lower.last().expect("nonempty") == 0,
        abelianization: d - commutator_dim,
        derived_series: derived,
        lower_central_series: lower,
        center: d - rank_z,
        killing_rank: pos + neg,
        killing_signature: (pos, neg),
    }
}

/// Label with formal index (dimension ≥ 7, `s6,n`) or left blank (`-`).
pub fn is_formal(label: &str) -> bool {
    let l = label.trim();
    l.is_empty()
        || l == "-"
        || l.split('⊕').any(|part| {
            let p = part.trim();
            ["s7,", "s8,", "s9,"].iter().any(|s| p.starts_with(s)) || p == "s6,n"
        })
}

/// Direct summands sorted, so `so(3)⊕s2,1` and `s2,1⊕so(3)` compare equal.
pub fn canonical_label(label: &str) -> String {
    let mut parts: Vec<&str> = label.split('⊕').map(str::trim).collect();
    parts.sort_unstable();
    parts.join("⊕")
}

/// Outcome of matching a fingerprint against the catalog.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub fingerprint: Fingerprint,
    /// Catalog labels with an identical fingerprint.
    pub candidates: Vec<String>,
}

impl Classification {
    pub fn unique(&self) -> Option<&str> {
        match self.candidates.as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }

    /// True when `expected` is formal or among the matching labels.
    pub fn accepts(&self, expected: &str) -> bool {
        let want = canonical_label(expected);
        is_formal(expected) || self.candidates.iter().any(|c| canonical_label(c) == want)
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.candidates.len() {
            0 => write!(f, "unmatched ({})", self.fingerprint),
            1 => write!(f, "{}", self.candidates[0]),
            _ => write!(f, "tie {{{}}}", self.candidates.join(", ")),
        }
    }
}

impl Serialize for Classification {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            label: Option<&'a str>,
            candidates: &'a [String],
            fingerprint: &'a Fingerprint,
        }
        Out { label: self.unique(), candidates: &self.candidates, fingerprint: &self.fingerprint }.serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub label: String,
    pub generators: Vec<String>,
    pub values: BTreeMap<String, f64>,
    pub source: String,
    pub fingerprint: Fingerprint,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogDataError {
    #[error("catalog line {0}: {1}")]
    Syntax(usize, String),
    #[error("catalog entry `{0}`: {1}")]
    Build(String, String),
}

const CATALOG_TEXT: &str = include_str!("../corpus/algebras.txt");

fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>, CatalogDataError> {
    struct Raw {
        label: String,
        generators: Vec<String>,
        values: BTreeMap<String, f64>,
        source: String,
    }
    let mut raws: Vec<Raw> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| CatalogDataError::Syntax(k + 1, s.to_string()))?;
        let value = value.trim();
        match key.trim() {
            "label" => raws.push(Raw { label: value.to_string(), generators: vec![], values: BTreeMap::new(), source: String::new() }),
            field => {
                let raw = raws.last_mut().ok_or_else(|| CatalogDataError::Syntax(k + 1, "field before label".into()))?;
                match field {
                    "generators" => raw.generators = value.split(';').map(|g| g.trim().to_string()).collect(),
                    "source" => raw.source = value.to_string(),
                    "values" => {
                        for kv in value.split(',') {
                            let (n, v) = kv.split_once('=').ok_or_else(|| CatalogDataError::Syntax(k + 1, kv.to_string()))?;
                            let v: f64 = v.trim().parse().map_err(|_| CatalogDataError::Syntax(k + 1, kv.to_string()))?;
                            raw.values.insert(n.trim().to_string(), v);
                        }
                    }
                    other => return Err(CatalogDataError::Syntax(k + 1, format!("unknown field `{other}`"))),
                }
            }
        }
    }
    raws.into_iter()
        .map(|r| {
            let fail = |m: String| CatalogDataError::Build(r.label.clone(), m);
            let mut params = ParamTable::reserved();
            for (n, v) in &r.values {
                params.set(n, *v).map_err(|e| fail(e.to_string()))?;
            }
            let scope = Scope::new(params);
            let basis = r
                .generators
                .iter()
                .map(|g| parse_generator(g, &scope).map(|op| NamedGenerator::new(g.clone(), op)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(e.to_string()))?;
            let sc = structure_constants::<f64>(&basis, &scope, 7).map_err(|e| fail(e.to_string()))?;
            Ok(CatalogEntry { label: r.label, generators: r.generators, values: r.values, source: r.source, fingerprint: fingerprint(&sc) })
        })
        .collect()
}

static CATALOG: LazyLock<Result<Vec<CatalogEntry>, CatalogDataError>> = LazyLock::new(|| parse_catalog(CATALOG_TEXT));

/// Reference algebras built from the generator lists of the tables.
pub fn catalog() -> Result<&'static [CatalogEntry], CatalogDataError> {
    CATALOG.as_ref().map(|v| v.as_slice()).map_err(Clone::clone)
}

/// Groups of catalog labels sharing one fingerprint.
pub fn tie_groups() -> Vec<Vec<String>> {
    let mut by: BTreeMap<&Fingerprint, Vec<String>> = BTreeMap::new();
    for e in catalog().unwrap_or(&[]) {
        by.entry(&e.fingerprint).or_default().push(e.label.clone());
    }
    by.into_values().filter(|v| v.len() > 1).collect()
}

pub fn classify<T: Scalar>(sc: &StructureConstants<T>) -> Classification {
    let fp = fingerprint(sc);
    let candidates = catalog()
        .unwrap_or(&[])
        .iter()
        .filter(|e| e.fingerprint == fp)
        .map(|e| e.label.clone())
        .collect();
    Classification { fingerprint: fp, candidates }
}

#[cfg(test)]
mod tests;
