//! The symmetry condition `[Q, L] = αL` and the determining equations.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::diffop::{compose, DiffOp, DiffOpError, Multi};
use crate::expr::sample::DEFAULT_RETRIES;
use crate::expr::{EvalError, Expr, Instantiation, PointSample, Sampler, Scope, Var};
use crate::pauli::{mat_comm, MatExpr, Pauli};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetError {
    #[error("generator is not first order")]
    NotFirstOrder,
    #[error("generator has matrix-valued derivative coefficients")]
    MatrixVectorField,
    #[error(transparent)]
    Order(#[from] DiffOpError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Antisymmetric rotation part, translation profile and free scalar function
/// of a structured generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Structured {
    pub theta: [[Expr; 3]; 3],
    pub nu: [Expr; 3],
    pub f: Expr,
    pub eta_vec: [Expr; 3],
}

/// First-order generator in vector-field form `ξ⁰∂t + ξᵃ∂a + ½∂aξᵃ + iη`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryCandidate {
    pub xi0: Expr,
    pub xi: [Expr; 3],
    pub eta: MatExpr,
    pub structured: Option<Structured>,
}

fn div(xi: &[Expr; 3]) -> Expr {
    Expr::sum((1..=3).map(|a| xi[a - 1].diff(Var::x(a))).collect())
}

impl SymmetryCandidate {
    /// Reads `(ξ⁰, ξᵃ, η)` off a tabulated generator `Q = −i(ξ⁰∂t + ...)`.
    pub fn from_operator(op: &DiffOp) -> Result<Self, DetError> {
        if !op.is_first_order() {
            return Err(DetError::NotFirstOrder);
        }
        let i = Expr::i();
        let scalar_of = |m: &MatExpr| -> Result<Expr, DetError> {
            if m.is_scalar() {
                Ok(i.mul(m.c(0)).simplify())
            } else {
                Err(DetError::MatrixVectorField)
            }
        };
        let xi0 = scalar_of(&op.coeff(&Multi::of(Var::T)))?;
        let xi = [
            scalar_of(&op.coeff(&Multi::of(Var::X1)))?,
            scalar_of(&op.coeff(&Multi::of(Var::X2)))?,
            scalar_of(&op.coeff(&Multi::of(Var::X3)))?,
        ];
        let eta_tilde = op.coeff(&Multi::ZERO).scale(&i);
        let half_div = MatExpr::scalar(Expr::rat(1, 2).mul(&div(&xi)));
        let eta = eta_tilde.sub(&half_div).scale(&i.neg()).simplify();
        Ok(SymmetryCandidate { xi0, xi, eta, structured: None })
    }

    /// Builds `ξᵃ = −(α/2)xa + θᵃᵇxb + νa`, `η⁰ = (α̇/4)r² − ν̇a·xa + f`.
    pub fn from_structured(xi0: Expr, s: Structured) -> Self {
        let alpha = xi0.diff(Var::T).neg();
        let dalpha = alpha.diff(Var::T);
        let xi = std::array::from_fn(|a| {
            let mut terms = vec![Expr::product(vec![Expr::rat(-1, 2), alpha.clone(), Expr::x(a + 1)]), s.nu[a].clone()];
            for b in 0..3 {
                terms.push(s.theta[a][b].mul(&Expr::x(b + 1)));
            }
            Expr::sum(terms)
        });
        let mut eta0 = vec![Expr::product(vec![Expr::rat(1, 4), dalpha, Expr::r2()]), s.f.clone()];
        for a in 0..3 {
            eta0.push(s.nu[a].diff(Var::T).mul(&Expr::x(a + 1)).neg());
        }
        let eta = MatExpr([Expr::sum(eta0), s.eta_vec[0].clone(), s.eta_vec[1].clone(), s.eta_vec[2].clone()]);
        SymmetryCandidate { xi0, xi, eta, structured: Some(s) }
    }

    /// `α = −dξ⁰/dt`.
    pub fn alpha(&self) -> Expr {
        self.xi0.diff(Var::T).neg()
    }

    /// Tabulated operator `−i(ξ⁰∂t + ξᵃ∂a + ½div ξ + iη)`.
    pub fn to_operator(&self) -> DiffOp {
        let mi = Expr::i().neg();
        let mut op = DiffOp::term(Multi::of(Var::T), MatExpr::scalar(mi.mul(&self.xi0)));
        for a in 0..3 {
            op = op.add(&DiffOp::term(Multi::of(Var::x(a + 1)), MatExpr::scalar(mi.mul(&self.xi[a]))));
        }
        let c0 = MatExpr::scalar(Expr::rat(1, 2).mul(&div(&self.xi))).add(&self.eta.scale(&Expr::i()));
        op.add(&DiffOp::mult(c0.scale(&mi))).simplify()
    }
}

/// Random polynomial spinor used for the end-to-end action check.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub psi: [Expr; 2],
}

impl TestFunction {
    pub fn random(rng: &mut impl Rng, degree: u8) -> Self {
        let mut comp = || {
            let mut terms = Vec::new();
            for m in Multi::all_up_to(degree) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let mut f = vec![Expr::complex(re, im)];
                for v in Var::ALL {
                    f.push(Expr::var(v).powi(m.0[v.index()] as i64));
                }
                terms.push(Expr::product(f));
            }
            Expr::sum(terms)
        };
        TestFunction { psi: [comp(), comp()] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub retries: usize,
    pub degree: u8,
    pub test_functions: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 42, samples: 20, tol: 1e-9, retries: DEFAULT_RETRIES, degree: 3, test_functions: 3 }
    }
}

pub const EQUATION_KEYS: [&str; 8] = ["eq8", "eq9", "eq10", "eq11", "eq12", "eq13", "eq14", "eq15"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub residuals: BTreeMap<String, f64>,
    pub action_residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub samples: usize,
}

impl VerificationReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(self.action_residual, f64::max)
    }

    /// Largest residual relative to `1 + scale`.
    pub fn relative_residual(&self) -> f64 {
        self.max_residual() / (1.0 + self.scale)
    }
}

fn empty_residuals() -> BTreeMap<String, f64> {
    EQUATION_KEYS.iter().map(|k| (k.to_string(), 0.0)).collect()
}

fn bump(map: &mut BTreeMap<String, f64>, key: &str, v: f64) {
    let e = map.get_mut(key).expect("known key");
    if v > *e || v.is_nan() {
        *e = v;
    }
}

/// Residual operator `C = [Q, L] + (∂t c_t)·L`, returned with its three parts.
pub fn symmetry_residual(v: &MatExpr, q: &DiffOp) -> Result<[DiffOp; 3], DetError> {
    let l = DiffOp::schrodinger(v);
    let ql = compose(q, &l)?;
    let lq = compose(&l, q)?.neg();
    let al = l.left_mul(&q.coeff(&Multi::of(Var::T)).diff(Var::T)).simplify();
    Ok([ql, lq, al])
}

fn eq_for_slot(m: &Multi) -> &'static str {
    let o = m.order();
    if o >= 3 || m.0[0] > 0 {
        "eq8"
    } else if o == 2 {
        "eq9"
    } else if o == 1 {
        "eq11"
    } else {
        "eq14"
    }
}

/// Tests `[Q, L] = αL` by randomized evaluation of every coefficient of the
/// residual operator, plus its action on random test spinors.
pub fn verify_operator(v: &MatExpr, q: &DiffOp, scope: &Scope, cfg: &VerifyConfig) -> Result<VerificationReport, DetError> {
    let parts = symmetry_residual(v, q)?;
    let mut sampler = Sampler::new(cfg.seed);
    sampler.degree = cfg.degree;
    let inst = sampler.instantiate::<f64>(scope);
    let tfs: Vec<TestFunction> = (0..cfg.test_functions).map(|_| TestFunction::random(sampler.rng(), 3)).collect();
    let applied: Vec<[[Expr; 2]; 3]> = tfs
        .iter()
        .map(|tf| [parts[0].apply(&tf.psi), parts[1].apply(&tf.psi), parts[2].apply(&tf.psi)])
        .collect();
    let mut slots: Vec<Multi> = parts.iter().flat_map(|p| p.terms().map(|(m, _)| *m)).collect();
    slots.sort();
    slots.dedup();
    type PointVals = (Vec<[Pauli<f64>; 3]>, Vec<[[num_complex::Complex<f64>; 2]; 3]>);
    let pts = sampler.collect(&inst, cfg.samples, cfg.retries, |p| -> Result<PointVals, EvalError> {
        let mut coeffs = Vec::with_capacity(slots.len());
        for m in &slots {
            let mut trip = [Pauli::zero(); 3];
            for (k, part) in parts.iter().enumerate() {
                trip[k] = part.coeff(m).eval(p)?;
            }
            coeffs.push(trip);
        }
        let mut acts = Vec::with_capacity(applied.len());
        for a in &applied {
            let mut trip = [[num_complex::Complex::new(0.0, 0.0); 2]; 3];
            for k in 0..3 {
                for c in 0..2 {
                    trip[k][c] = a[k][c].eval(p)?;
                }
            }
            acts.push(trip);
        }
        Ok((coeffs, acts))
    })?;
    let mut residuals = empty_residuals();
    let mut scale: f64 = 0.0;
    let mut action_residual: f64 = 0.0;
    let mut action_scale: f64 = 0.0;
    for (_, (coeffs, acts)) in &pts {
        let mut totals: BTreeMap<Multi, Pauli<f64>> = BTreeMap::new();
        for (m, trip) in slots.iter().zip(coeffs) {
            let mut tot = Pauli::zero();
            for part in trip {
                scale = scale.max(part.max_abs());
                for c in 0..4 {
                    tot.0[c] += part.0[c];
                }
            }
            totals.insert(*m, tot);
        }
        let mut diag = Vec::new();
        for (m, tot) in &totals {
            let key = eq_for_slot(m);
            match key {
                "eq9" => {
                    let diagonal = m.0[1..].contains(&2);
                    if diagonal {
                        diag.push(*tot);
                    } else {
                        bump(&mut residuals, "eq9", tot.max_abs());
                    }
                }
                "eq11" => {
                    bump(&mut residuals, "eq11", tot.0[0].norm());
                    let vec = tot.0[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
                    bump(&mut residuals, "eq13", vec);
                }
                "eq14" => {
                    bump(&mut residuals, "eq14", tot.0[0].norm());
                    let vec = tot.0[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
                    bump(&mut residuals, "eq15", vec);
                    bump(&mut residuals, "eq12", tot.max_abs());
                }
                _ => bump(&mut residuals, key, tot.max_abs()),
            }
        }
        if !diag.is_empty() {
            let mut trace = Pauli::zero();
            for d in &diag {
                for c in 0..4 {
                    trace.0[c] += d.0[c] / 3.0;
                }
            }
            bump(&mut residuals, "eq10", trace.max_abs());
            for d in &diag {
                bump(&mut residuals, "eq9", d.sub(&trace).max_abs());
            }
            if diag.len() < 3 {
                // missing diagonal entries are zero; their traceless part is −trace
                bump(&mut residuals, "eq9", trace.max_abs());
            }
        }
        for trip in acts {
            for c in 0..2 {
                let tot = trip[0][c] + trip[1][c] + trip[2][c];
                action_residual = action_residual.max(tot.norm());
                for part in trip {
                    action_scale = action_scale.max(part[c].norm());
                }
            }
        }
    }
    let bound = cfg.tol * (1.0 + scale);
    let action_ok = action_residual <= cfg.tol * (1.0 + action_scale);
    let pass = action_ok && residuals.values().all(|&r| r <= bound);
    Ok(VerificationReport {
        pass,
        residuals,
        action_residual,
        scale,
        tolerance: cfg.tol,
        seed: cfg.seed,
        samples: pts.len(),
    })
}

/// One determining-equation component as a list of additive pieces.
struct Component {
    key: &'static str,
    pieces: Vec<MatExpr>,
}

fn comp(key: &'static str, pieces: Vec<MatExpr>) -> Component {
    Component { key, pieces }
}

fn structured_components(v: &MatExpr, q: &SymmetryCandidate) -> Vec<Component> {
    let s = MatExpr::scalar;
    let alpha = q.alpha();
    let mut out = Vec::new();
    for a in 1..=3 {
        out.push(comp("eq8", vec![s(q.xi0.diff(Var::x(a)))]));
    }
    let dv = div(&q.xi);
    for a in 1..=3 {
        for b in a..=3 {
            let mut pieces = vec![s(q.xi[b - 1].diff(Var::x(a))), s(q.xi[a - 1].diff(Var::x(b)))];
            if a == b {
                pieces.push(s(Expr::rat(-2, 3).mul(&dv)));
            }
            out.push(comp("eq9", pieces));
        }
    }
    out.push(comp("eq10", vec![s(dv), s(Expr::rat(3, 2).mul(&alpha))]));
    for a in 1..=3 {
        out.push(comp("eq11", vec![s(q.xi[a - 1].diff(Var::T)), s(q.eta.c(0).diff(Var::x(a)))]));
        out.push(comp("eq13", vec![q.eta.vector_part().diff(Var::x(a))]));
    }
    let mut eq12 = Vec::new();
    for a in 1..=3 {
        eq12.push(v.diff(Var::x(a)).scale(&q.xi[a - 1]));
    }
    eq12.push(v.scale(&alpha).neg());
    eq12.push(q.eta.diff(Var::T).neg());
    eq12.push(mat_comm(&q.eta, v).scale(&Expr::i()));
    out.push(comp("eq14", eq12.iter().map(MatExpr::scalar_part).collect()));
    out.push(comp("eq15", eq12.iter().map(MatExpr::vector_part).collect()));
    out.push(comp("eq12", eq12));
    out
}

/// Residual of each determining equation separately.
pub fn residuals_structured(
    v: &MatExpr,
    q: &SymmetryCandidate,
    scope: &Scope,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, DetError> {
    let comps = structured_components(v, q);
    let mut sampler = Sampler::new(cfg.seed);
    sampler.degree = cfg.degree;
    let inst = sampler.instantiate::<f64>(scope);
    let pts = sampler.collect(&inst, cfg.samples, cfg.retries, |p| {
        comps
            .iter()
            .map(|c| c.pieces.iter().map(|m| m.eval(p)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut residuals = empty_residuals();
    let mut scale: f64 = 0.0;
    for (_, vals) in &pts {
        for (c, pieces) in comps.iter().zip(vals) {
            let mut tot = Pauli::zero();
            for piece in pieces {
                scale = scale.max(piece.max_abs());
                for k in 0..4 {
                    tot.0[k] += piece.0[k];
                }
            }
            bump(&mut residuals, c.key, tot.max_abs());
        }
    }
    let bound = cfg.tol * (1.0 + scale);
    Ok(VerificationReport {
        pass: residuals.values().all(|&r| r <= bound),
        residuals,
        action_residual: 0.0,
        scale,
        tolerance: cfg.tol,
        seed: cfg.seed,
        samples: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianClass {
    /// `V⁰_ab = −μ δ_ab`.
    Isotropic,
    /// Constant diagonal Hessian with per-axis values.
    PerAxis,
    NonConstant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Linear,
    Trigonometric,
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxisProfile {
    pub mu: f64,
    pub kind: ProfileKind,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub class: HessianClass,
    /// Common `μ` when the Hessian is isotropic.
    pub mu: Option<f64>,
    /// Per-axis data where row `a` of the Hessian is constant and diagonal.
    pub axes: [Option<AxisProfile>; 3],
    /// Time profile of `ξ⁰` (`α̈ = 4μα`) in the isotropic case.
    pub alpha_profile: Option<AxisProfile>,
}

impl FrequencyReport {
    /// Distinct nonzero frequencies detected on any axis.
    pub fn frequencies(&self) -> Vec<(ProfileKind, f64)> {
        let mut out: Vec<(ProfileKind, f64)> = Vec::new();
        for p in self.axes.iter().flatten() {
            if p.kind != ProfileKind::Linear && !out.iter().any(|(k, w)| *k == p.kind && (w - p.omega).abs() < 1e-9 * (1.0 + w)) {
                out.push((p.kind, p.omega));
            }
        }
        out
    }
}

fn profile(mu: f64, tol: f64) -> AxisProfile {
    if mu.abs() <= tol {
        AxisProfile { mu: 0.0, kind: ProfileKind::Linear, omega: 0.0 }
    } else if mu < 0.0 {
        AxisProfile { mu, kind: ProfileKind::Trigonometric, omega: (-mu).sqrt() }
    } else {
        AxisProfile { mu, kind: ProfileKind::Hyperbolic, omega: mu.sqrt() }
    }
}

/// Classifies the Hessian of the scalar part of `V` by sampling second
/// derivatives at 10 points of one instantiation.
pub fn check_consequences(v: &MatExpr, inst: &Arc<Instantiation<f64>>, seed: u64) -> Result<FrequencyReport, DetError> {
    let v0 = v.c(0);
    let hess: Vec<Vec<Expr>> =
        (1..=3).map(|a| (1..=3).map(|b| v0.diff(Var::x(a)).diff(Var::x(b)).simplify()).collect()).collect();
    let mut sampler = Sampler::new(seed);
    let pts = sampler.collect(inst, 10, DEFAULT_RETRIES, |p: &PointSample<f64>| {
        let mut h = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                h[a][b] = hess[a][b].eval(p)?.re;
            }
        }
        Ok(h)
    })?;
    let hs: Vec<[[f64; 3]; 3]> = pts.into_iter().map(|(_, h)| h).collect();
    let big = hs.iter().flat_map(|h| h.iter().flatten()).fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * (1.0 + big);
    let constant = |a: usize, b: usize| hs.iter().all(|h| (h[a][b] - hs[0][a][b]).abs() <= tol);
    let mut axes = [None; 3];
    for a in 0..3 {
        let row_ok = (0..3).all(|b| constant(a, b)) && (0..3).all(|b| b == a || hs[0][a][b].abs() <= tol);
        if row_ok {
            axes[a] = Some(profile(-hs[0][a][a], tol));
        }
    }
    let all_const = axes.iter().all(Option::is_some);
    let (class, mu) = if all_const {
        let mus: Vec<f64> = axes.iter().map(|p| p.unwrap().mu).collect();
        if mus.iter().all(|m| (m - mus[0]).abs() <= tol) {
            (HessianClass::Isotropic, Some(mus[0]))
        } else {
            (HessianClass::PerAxis, None)
        }
    } else {
        (HessianClass::NonConstant, None)
    };
    let alpha_profile = mu.map(|m| profile(4.0 * m, tol));
    Ok(FrequencyReport { class, mu, axes, alpha_profile })
}

#[cfg(test)]
mod tests;
