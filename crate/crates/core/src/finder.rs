//! Discovery of the full symmetry algebra of a concrete potential by
//! nullspace extraction over a finite candidate basis.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::detsys::{check_consequences, symmetry_residual, DetError, ProfileKind};
use crate::diffop::{boost, make_basis_generator, project, time_family, DiffOp, Multi, NamedGenerator, ProjectionError};
use crate::expr::sample::DEFAULT_RETRIES;
use crate::expr::{EvalError, Expr, Instantiation, Number, Sampler, Scope};
use crate::liealg::{self, LieError, StructureConstants};
use crate::linalg::{nullspace_real, rref_real};
use crate::pauli::MatExpr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinderError {
    #[error(transparent)]
    Det(#[from] DetError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("ill-conditioned system: singular-value gap {gap:.3e} at the threshold; increase samples")]
    IllConditioned { gap: f64 },
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinderConfig {
    pub seed: u64,
    pub samples: usize,
    /// Singular values below `rel_tol · σ_max` count as zero.
    pub rel_tol: f64,
    /// Minimum ratio between the singular values on either side of the threshold.
    pub min_gap: f64,
    pub retries: usize,
}

impl Default for FinderConfig {
    fn default() -> Self {
        FinderConfig { seed: 42, samples: 40, rel_tol: 1e-7, min_gap: 10.0, retries: DEFAULT_RETRIES }
    }
}

/// Ordered candidate generators plus notes on how the basis was chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateBasis {
    pub members: Vec<NamedGenerator>,
    /// Scalar frequencies found from the Hessian of `V⁰`.
    pub frequencies: Vec<(ProfileKind, f64)>,
    /// `2‖V_vec‖` when the vector part is constant and nonzero.
    pub matrix_frequency: Option<f64>,
    pub warnings: Vec<String>,
}

fn fmt_num(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        let s = format!("{x:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn wt(w: f64) -> Expr {
    Expr::float(w).mul(&Expr::t())
}

/// Profile pairs `(label, p(t))` for a frequency of the given kind.
fn profiles(kind: ProfileKind, w: f64) -> Vec<(String, Expr)> {
    let f = fmt_num(w);
    match kind {
        ProfileKind::Linear => vec![],
        ProfileKind::Trigonometric => vec![(format!("sin({f}t)"), Expr::sin(wt(w))), (format!("cos({f}t)"), Expr::cos(wt(w)))],
        ProfileKind::Hyperbolic => vec![(format!("exp({f}t)"), Expr::exp(wt(w))), (format!("exp(-{f}t)"), Expr::exp(wt(-w)))],
    }
}

fn push_unique(v: &mut Vec<(ProfileKind, f64)>, k: ProfileKind, w: f64) {
    if !v.iter().any(|(k2, w2)| *k2 == k && (w - w2).abs() <= 1e-9 * (1.0 + w)) {
        v.push((k, w));
    }
}

/// Vector part of `V` at a few points: largest norm and whether it is constant.
fn vector_part_profile(v: &MatExpr, inst: &Arc<Instantiation<f64>>, seed: u64) -> Result<(f64, bool), EvalError> {
    let mut sampler = Sampler::new(seed ^ 0x5eed);
    let vec = v.vector_part();
    let pts = sampler.collect(inst, 8, DEFAULT_RETRIES, |p| vec.eval(p))?;
    let norms: Vec<[num_complex::Complex<f64>; 3]> = pts.iter().map(|(_, m)| [m.0[1], m.0[2], m.0[3]]).collect();
    let big = norms.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-10 * (1.0 + big);
    let constant = norms.iter().all(|n| (0..3).all(|b| (n[b] - norms[0][b]).norm() <= tol));
    Ok((big, constant))
}

/// Candidate generators for `V` under one instantiation of its placeholders.
pub fn build_candidates(v: &MatExpr, inst: &Arc<Instantiation<f64>>, seed: u64) -> Result<CandidateBasis, FinderError> {
    let mut members = Vec::new();
    for name in ["P0", "I", "P1", "P2", "P3", "G1", "G2", "G3", "L1", "L2", "L3", "D", "A"] {
        members.push(make_basis_generator(name, &[]).expect("catalog name"));
    }
    members.push(NamedGenerator::new("tI", DiffOp::scalar(Expr::t())));
    members.push(NamedGenerator::new("t^2I", DiffOp::scalar(Expr::t().powi(2))));

    let report = check_consequences(v, inst, seed)?;
    let mut freqs = Vec::new();
    for (a, axis) in report.axes.iter().enumerate() {
        let Some(p) = axis else { continue };
        if p.kind == ProfileKind::Linear {
            continue;
        }
        push_unique(&mut freqs, p.kind, p.omega);
        for (label, prof) in profiles(p.kind, p.omega) {
            members.push(NamedGenerator::new(format!("B{}[{label}]", a + 1), boost(a + 1, &prof)));
        }
    }
    let mut scalar_profiles: Vec<(ProfileKind, f64)> = Vec::new();
    for &(k, w) in &freqs {
        push_unique(&mut scalar_profiles, k, w);
        push_unique(&mut scalar_profiles, k, 2.0 * w);
        for (label, prof) in profiles(k, 2.0 * w) {
            members.push(NamedGenerator::new(format!("T[{label}]"), time_family(&prof)));
        }
    }
    for &(k, w) in &scalar_profiles {
        for (label, prof) in profiles(k, w) {
            members.push(NamedGenerator::new(format!("{label}I"), DiffOp::scalar(prof)));
        }
    }

    let mut warnings = Vec::new();
    let (vec_norm, vec_const) = vector_part_profile(v, inst, seed)?;
    let mut matrix_frequency = None;
    if vec_norm > 1e-12 {
        let mut mprof: Vec<(String, Expr)> = vec![("".into(), Expr::one()), ("*t".into(), Expr::t())];
        let mut mfreqs = scalar_profiles.clone();
        if vec_const {
            let mut sampler = Sampler::new(seed ^ 0x5eed);
            let vec = v.vector_part();
            let (_, m) = sampler.collect(inst, 1, DEFAULT_RETRIES, |p| vec.eval(p))?.remove(0);
            let w = 2.0 * (1..4).map(|b| m.0[b].norm_sqr()).sum::<f64>().sqrt();
            matrix_frequency = Some(w);
            push_unique(&mut mfreqs, ProfileKind::Trigonometric, w);
        } else {
            warnings.push("vector part of V is not constant; matrix time profiles limited to {1, t} and scalar frequencies".into());
        }
        for &(k, w) in &mfreqs {
            mprof.extend(profiles(k, w).into_iter().map(|(l, e)| (format!("*{l}"), e)));
        }
        for b in 1..=3 {
            for (label, prof) in &mprof {
                members.push(NamedGenerator::new(format!("s{b}{label}"), DiffOp::mult(MatExpr::sigma(b).scale(prof))));
            }
        }
    }
    Ok(CandidateBasis { members, frequencies: freqs, matrix_frequency, warnings })
}

/// Residual operator of one candidate, `[Q, L] + (∂t c_t)·L`, as its three
/// uncancelled parts.
fn residual_parts(v: &MatExpr, q: &DiffOp) -> Result<[DiffOp; 3], DetError> {
    symmetry_residual(v, q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoundGenerator {
    pub name: String,
    /// Nonzero coefficients on candidate members.
    pub coefficients: Vec<(String, f64)>,
}

#[derive(Clone, Debug)]
pub struct SymmetryAlgebra {
    pub dimension: usize,
    pub candidates: CandidateBasis,
    /// Candidate-by-generator coefficient matrix in reduced echelon form.
    pub coefficients: DMatrix<f64>,
    pub generators: Vec<NamedGenerator>,
    pub relative_singular: Vec<f64>,
    pub gap: Option<f64>,
    scope: Scope,
    inst: Arc<Instantiation<f64>>,
    seed: u64,
}

impl SymmetryAlgebra {
    pub fn found(&self) -> Vec<FoundGenerator> {
        self.generators
            .iter()
            .enumerate()
            .map(|(j, g)| FoundGenerator {
                name: g.name.clone(),
                coefficients: self
                    .candidates
                    .members
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| self.coefficients[(*k, j)] != 0.0)
                    .map(|(k, m)| (m.name.clone(), self.coefficients[(k, j)]))
                    .collect(),
            })
            .collect()
    }

    pub fn warnings(&self) -> &[String] {
        &self.candidates.warnings
    }

    pub fn structure_constants(&self) -> Result<StructureConstants<f64>, LieError> {
        liealg::structure_constants::<f64>(&self.generators, &self.scope, self.seed)
    }

    /// Relative residual of projecting `op` onto the span of the found generators.
    pub fn projection_residual(&self, op: &DiffOp) -> Result<f64, FinderError> {
        let ops: Vec<DiffOp> = self.generators.iter().map(|g| g.op.clone()).collect();
        let mut sampler = Sampler::new(self.seed ^ 0xc0de);
        let p = project::<f64>(op, &ops, &mut sampler, &self.inst, 12, DEFAULT_RETRIES)?;
        Ok(p.residual / (1.0 + p.scale))
    }

    pub fn contains(&self, op: &DiffOp, tol: f64) -> bool {
        self.projection_residual(op).map(|r| r < tol).unwrap_or(false)
    }
}

impl Serialize for SymmetryAlgebra {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SymmetryAlgebra", 3)?;
        st.serialize_field("dimension", &self.dimension)?;
        st.serialize_field("generators", &self.found())?;
        st.serialize_field("warnings", &self.candidates.warnings)?;
        st.end()
    }
}

fn combination_name(coeffs: &[(String, f64)]) -> String {
    let mut out = String::new();
    for (k, (name, c)) in coeffs.iter().enumerate() {
        let mag = c.abs();
        if k == 0 {
            if *c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if *c < 0.0 { " - " } else { " + " });
        }
        if (mag - 1.0).abs() > 1e-12 {
            out.push_str(&fmt_num(mag));
            out.push('*');
        }
        out.push_str(name);
    }
    out
}

/// Symmetry algebra of `V` within the candidate basis.
pub fn find_symmetries(v: &MatExpr, scope: &Scope, cfg: &FinderConfig) -> Result<SymmetryAlgebra, FinderError> {
    let mut sampler = Sampler::new(cfg.seed);
    let inst = sampler.instantiate::<f64>(scope);
    let candidates = build_candidates(v, &inst, cfg.seed)?;
    let residuals: Vec<[DiffOp; 3]> =
        candidates.members.par_iter().map(|m| residual_parts(v, &m.op)).collect::<Result<_, _>>()?;
    let slots: Vec<Multi> =
        residuals.iter().flatten().flat_map(|r| r.terms().map(|(m, _)| *m)).collect::<BTreeSet<_>>().into_iter().collect();
    let pts = sampler.collect(&inst, cfg.samples, cfg.retries, |p| {
        residuals
            .par_iter()
            .map(|parts| parts.iter().map(|r| r.eval(p)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
    })?;
    let k = residuals.len();
    let rows_per_point = slots.len() * 8;
    let mut m = DMatrix::<f64>::zeros(rows_per_point * pts.len(), k);
    // column scale: norm of the uncancelled parts, so numerical cancellation stays small
    let mut norms = vec![0.0f64; k];
    for (pi, (_, cols)) in pts.iter().enumerate() {
        for (si, slot) in slots.iter().enumerate() {
            for (j, parts) in cols.iter().enumerate() {
                for part in parts {
                    if let Some(val) = part.get(slot) {
                        for c in 0..4 {
                            let row = pi * rows_per_point + si * 8 + 2 * c;
                            m[(row, j)] += val.0[c].re;
                            m[(row + 1, j)] += val.0[c].im;
                            norms[j] += val.0[c].norm_sqr();
                        }
                    }
                }
            }
        }
    }
    let norms: Vec<f64> = norms.into_iter().map(f64::sqrt).collect();
    for (j, n) in norms.iter().enumerate() {
        if *n > 0.0 {
            m.column_mut(j).unscale_mut(*n);
        }
    }
    let (ns, rel, gap) = nullspace_real(&m, cfg.rel_tol);
    if let Some(g) = gap {
        if g < cfg.min_gap {
            return Err(FinderError::IllConditioned { gap: g });
        }
    }
    let dim = ns.ncols();
    let mut coeffs = ns.clone();
    for (j, n) in norms.iter().enumerate() {
        if *n > 0.0 {
            coeffs.row_mut(j).unscale_mut(*n);
        }
    }
    let mut rt = coeffs.transpose();
    rref_real(&mut rt, 1e-9);
    rt.iter_mut().for_each(|x| {
        if x.abs() < 1e-10 {
            *x = 0.0
        }
    });
    let coefficients = rt.transpose();
    let generators = (0..dim)
        .map(|j| {
            let terms: Vec<(String, f64)> = (0..k)
                .filter(|&i| coefficients[(i, j)] != 0.0)
                .map(|i| (candidates.members[i].name.clone(), coefficients[(i, j)]))
                .collect();
            let mut op = DiffOp::zero();
            for i in 0..k {
                let c = coefficients[(i, j)];
                if c != 0.0 {
                    op = op.add(&candidates.members[i].op.scale_num(&Number::float(c, 0.0)));
                }
            }
            NamedGenerator::new(combination_name(&terms), op.simplify())
        })
        .collect();
    Ok(SymmetryAlgebra {
        dimension: dim,
        candidates,
        coefficients,
        generators,
        relative_singular: rel,
        gap,
        scope: scope.clone(),
        inst,
        seed: cfg.seed,
    })
}

/// True when `op` lies in the span of the algebra's generators.
pub fn contains(algebra: &SymmetryAlgebra, op: &DiffOp, tol: f64) -> bool {
    algebra.contains(op, tol)
}

#[cfg(test)]
mod tests;
