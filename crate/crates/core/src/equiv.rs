//! Equivalence transformations: changes of variables with a multiplier that
//! keep the form `i∂t + ½Δ − V` and change the potential.

use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::detsys::TestFunction;
use crate::diffop::{DiffOp, Multi};
use crate::expr::sample::DEFAULT_RETRIES;
use crate::expr::{EvalError, Expr, Sampler, Scope, Var};
use crate::pauli::{mat_mul, MatExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquivError {
    #[error("matrix of the transformation is singular")]
    Singular,
    #[error("potential depends on x{0}, so the free-fall map along that axis does not apply")]
    AxisDependence(usize),
    #[error("potential is not homogeneous of degree -2 (relative deviation {0:.3e})")]
    NotHomogeneous(f64),
    #[error("transformed operator does not match the canonical form (relative residual {residual:.3e})")]
    Mismatch { residual: f64 },
    #[error("generator is not first order")]
    NotFirstOrder,
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    /// `ψ → M̂ψ` with a constant invertible matrix `M̂ = m0 + mᵦσᵦ`.
    Et0 { m: [(f64, f64); 4] },
    /// Matrix phase with `M = μ + νσ3`. The multiplier is `exp(−iMt)`, so
    /// that `V = 0` goes to `V = M`.
    Et01 { mu: f64, nu: f64 },
    Et1 { omega: f64 },
    Et2 { omega: f64 },
    /// `xₐ → xₐ − ½κₐt²`.
    Et3 { kappa: [f64; 3] },
}

impl TransformSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TransformSpec::Et0 { .. } => "et0",
            TransformSpec::Et01 { .. } => "et01",
            TransformSpec::Et1 { .. } => "et1",
            TransformSpec::Et2 { .. } => "et2",
            TransformSpec::Et3 { .. } => "et3",
        }
    }
}

/// Point map `(t, x) → (t̃, x̃)` with its inverse, the multiplier `m` in
/// `ψ̃ = mψ` and `c = dt/dt̃`, all but `inverse` in the old variables.
#[derive(Clone, Debug)]
pub struct PointMap {
    pub forward: [Expr; 4],
    pub inverse: [Expr; 4],
    pub multiplier: MatExpr,
    pub c: Expr,
}

fn num(x: f64) -> Expr {
    Expr::float(x)
}

fn identity_coords() -> [Expr; 4] {
    [Expr::t(), Expr::x(1), Expr::x(2), Expr::x(3)]
}

/// `exp(i·phase)` as a scalar expression.
fn phase(e: Expr) -> Expr {
    Expr::exp(Expr::i().mul(&e))
}

fn constant_matrix(m: &[(f64, f64); 4]) -> MatExpr {
    MatExpr::from_components(m.map(|(re, im)| Expr::complex(re, im)))
}

/// `(a + b·σ)⁻¹ = (a − b·σ)/(a² − b·b)`.
pub fn mat_inv(m: &MatExpr) -> MatExpr {
    let det = Expr::sum(vec![
        m.c(0).mul(m.c(0)),
        m.c(1).mul(m.c(1)).neg(),
        m.c(2).mul(m.c(2)).neg(),
        m.c(3).mul(m.c(3)).neg(),
    ]);
    let inv = det.powi(-1);
    MatExpr::from_components([m.c(0).mul(&inv), m.c(1).mul(&inv).neg(), m.c(2).mul(&inv).neg(), m.c(3).mul(&inv).neg()])
}

/// Conformal maps of the free equation onto the oscillators. With
/// `rescaled == false` the formulas are taken as printed: `t̃ = arctan(t)/ω`,
/// `x̃ = x/√(1+t²)` and phase `−iωtr²/(2(1+t²))`. These keep the form only at
/// `ω = 1`. The rescaled variant uses `ωt` in place of `t` throughout, with
/// phase `−iω²tr²/(2(1+ω²t²))`, and holds for every `ω`.
pub fn conformal(trig: bool, w: f64, rescaled: bool) -> PointMap {
    let t = Expr::t();
    let s: i64 = if trig { 1 } else { -1 };
    let tau = if rescaled { num(w).mul(&t) } else { t.clone() };
    let q = Expr::one().add(&Expr::int(s).mul(&tau.powi(2)));
    let tt = if trig {
        Expr::atan(tau.clone()).mul(&num(1.0 / w))
    } else {
        let ratio = Expr::one().add(&tau).mul(&Expr::one().sub(&tau).powi(-1));
        Expr::product(vec![Expr::rat(1, 2), num(1.0 / w), Expr::ln(ratio)])
    };
    let root = q.pow(Rational64::new(-1, 2));
    let forward = [tt, Expr::x(1).mul(&root), Expr::x(2).mul(&root), Expr::x(3).mul(&root)];
    let wt = num(w).mul(&t);
    let (ratio, sec) = if trig {
        (Expr::sin(wt.clone()).mul(&Expr::cos(wt.clone()).powi(-1)), Expr::cos(wt).powi(-1))
    } else {
        (Expr::sinh(wt.clone()).mul(&Expr::cosh(wt.clone()).powi(-1)), Expr::cosh(wt).powi(-1))
    };
    let old_t = if rescaled { ratio.mul(&num(1.0 / w)) } else { ratio };
    let inverse = [old_t, Expr::x(1).mul(&sec), Expr::x(2).mul(&sec), Expr::x(3).mul(&sec)];
    let coupling = if rescaled { w * w } else { w };
    let exponent = Expr::product(vec![Expr::int(-s), Expr::rat(1, 2), num(coupling), t.clone(), Expr::r2(), q.powi(-1)]);
    let multiplier = MatExpr::scalar(q.pow(Rational64::new(3, 4)).mul(&phase(exponent)));
    let c = if rescaled { q } else { num(w).mul(&q) };
    PointMap { forward, inverse, multiplier, c }
}

impl PointMap {
    pub fn of(spec: &TransformSpec) -> PointMap {
        let t = Expr::t();
        match spec {
            TransformSpec::Et0 { m } => {
                PointMap { forward: identity_coords(), inverse: identity_coords(), multiplier: constant_matrix(m), c: Expr::one() }
            }
            TransformSpec::Et01 { mu, nu } => {
                let e = phase(num(-mu).mul(&t));
                let arg = num(-nu).mul(&t);
                let multiplier = MatExpr::from_components([
                    e.mul(&Expr::cos(arg.clone())),
                    Expr::zero(),
                    Expr::zero(),
                    Expr::product(vec![Expr::i(), e.clone(), Expr::sin(arg)]),
                ]);
                PointMap { forward: identity_coords(), inverse: identity_coords(), multiplier, c: Expr::one() }
            }
            TransformSpec::Et1 { omega } => conformal(true, *omega, false),
            TransformSpec::Et2 { omega } => conformal(false, *omega, false),
            TransformSpec::Et3 { kappa } => {
                let half_t2 = Expr::rat(1, 2).mul(&t.powi(2));
                let forward = [
                    t.clone(),
                    Expr::x(1).sub(&num(kappa[0]).mul(&half_t2)),
                    Expr::x(2).sub(&num(kappa[1]).mul(&half_t2)),
                    Expr::x(3).sub(&num(kappa[2]).mul(&half_t2)),
                ];
                let inverse = [
                    t.clone(),
                    Expr::x(1).add(&num(kappa[0]).mul(&half_t2)),
                    Expr::x(2).add(&num(kappa[1]).mul(&half_t2)),
                    Expr::x(3).add(&num(kappa[2]).mul(&half_t2)),
                ];
                let k2: f64 = kappa.iter().map(|k| k * k).sum();
                let kx = Expr::sum((0..3).map(|a| num(kappa[a]).mul(&Expr::x(a + 1))).collect());
                let exponent = Expr::sum(vec![t.mul(&kx).neg(), Expr::product(vec![Expr::rat(1, 3), num(k2), t.powi(3)])]);
                PointMap { forward, inverse, multiplier: MatExpr::scalar(phase(exponent)), c: Expr::one() }
            }
        }
    }

    /// Rewrites an expression in the old variables in terms of the new ones.
    pub fn pull(&self, e: &Expr) -> Expr {
        e.substitute(&|v| Some(self.inverse[v.index()].clone()))
    }

    fn pull_mat(&self, m: &MatExpr) -> MatExpr {
        m.substitute(&|v| Some(self.inverse[v.index()].clone()))
    }
}

fn is_singular(m: &[(f64, f64); 4]) -> bool {
    let (a, b) = (m[0], [m[1], m[2], m[3]]);
    // det = a² − b·b over complex numbers
    let re = a.0 * a.0 - a.1 * a.1 - b.iter().map(|z| z.0 * z.0 - z.1 * z.1).sum::<f64>();
    let im = 2.0 * a.0 * a.1 - b.iter().map(|z| 2.0 * z.0 * z.1).sum::<f64>();
    re.hypot(im) < 1e-14
}

/// Relative deviation from `V(s𝐱) = s⁻²V(𝐱)` at random points and scales.
pub fn homogeneity_deviation(v: &MatExpr, scope: &Scope, seed: u64) -> Result<f64, EquivError> {
    let mut sampler = Sampler::new(seed);
    let inst = sampler.instantiate::<f64>(scope);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let s = 0.5 + sampler.rng().random::<f64>() * 1.5;
        let scaled = v.substitute(&|var| if var == Var::T { None } else { Some(Expr::float(s).mul(&Expr::var(var))) });
        let pts = sampler.collect(&inst, 1, DEFAULT_RETRIES, |p| Ok((v.eval(p)?, scaled.eval(p)?)))?;
        let (_, (a, b)) = &pts[0];
        for k in 0..4 {
            let want = a.0[k] / (s * s);
            worst = worst.max((b.0[k] - want).norm() / (1.0 + want.norm()));
        }
    }
    Ok(worst)
}

/// The potential reached from `V` under the transformation, in closed form.
fn canonical(v: &MatExpr, spec: &TransformSpec, scope: &Scope, seed: u64) -> Result<MatExpr, EquivError> {
    match spec {
        TransformSpec::Et0 { m } => {
            if is_singular(m) {
                return Err(EquivError::Singular);
            }
            let mm = constant_matrix(m);
            Ok(mat_mul(&mat_mul(&mm, v), &mat_inv(&mm)).simplify())
        }
        TransformSpec::Et01 { mu, nu } => {
            let m = MatExpr::from_components([num(*mu), Expr::zero(), Expr::zero(), num(*nu)]);
            Ok(v.add(&m).simplify())
        }
        TransformSpec::Et1 { omega } | TransformSpec::Et2 { omega } => {
            let dev = homogeneity_deviation(v, scope, seed)?;
            if dev > 1e-9 {
                return Err(EquivError::NotHomogeneous(dev));
            }
            let sign = if matches!(spec, TransformSpec::Et1 { .. }) { 1 } else { -1 };
            let osc = Expr::product(vec![Expr::rat(sign, 2), num(omega * omega), Expr::r2()]);
            Ok(v.add(&MatExpr::scalar(osc)).simplify())
        }
        TransformSpec::Et3 { kappa } => {
            for a in 0..3 {
                if kappa[a] != 0.0 && v.depends_on(Var::x(a + 1)) {
                    return Err(EquivError::AxisDependence(a + 1));
                }
            }
            let kx = Expr::sum((0..3).map(|a| num(kappa[a]).mul(&Expr::x(a + 1))).collect());
            Ok(v.add(&MatExpr::scalar(kx)).simplify())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformReport {
    pub transform: TransformSpec,
    pub potential: [String; 4],
    pub relative_residual: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Largest relative mismatch of `L̃ψ̃ = c·m·Lψ` on random spinors, evaluated
/// at random points of the new variables.
pub fn compare(v_old: &MatExpr, v_new: &MatExpr, map: &PointMap, scope: &Scope, seed: u64) -> Result<f64, EquivError> {
    let mut sampler = Sampler::new(seed);
    let inst = sampler.instantiate::<f64>(scope);
    let l_old = DiffOp::schrodinger(v_old);
    let l_new = DiffOp::schrodinger(v_new);
    let mut checks = Vec::new();
    for _ in 0..2 {
        let tf = TestFunction::random(sampler.rng(), 2);
        let lpsi = l_old.apply(&tf.psi);
        let mpsi = DiffOp::mult(map.multiplier.clone()).apply(&tf.psi);
        let mlpsi = DiffOp::mult(map.multiplier.scale(&map.c)).apply(&lpsi);
        let psit = mpsi.map(|e| map.pull(&e));
        let rhs = mlpsi.map(|e| map.pull(&e));
        let lhs = l_new.apply(&psit);
        checks.push((lhs, rhs));
    }
    let pts = sampler.collect(&inst, 20, DEFAULT_RETRIES, |p| {
        checks
            .iter()
            .map(|(l, r)| Ok([(l[0].eval(p)?, r[0].eval(p)?), (l[1].eval(p)?, r[1].eval(p)?)]))
            .collect::<Result<Vec<_>, EvalError>>()
    })?;
    let mut resid: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (_, vals) in &pts {
        for pair in vals {
            for (a, b) in pair {
                resid = resid.max((a - b).norm());
                scale = scale.max(a.norm()).max(b.norm());
            }
        }
    }
    Ok(resid / (1.0 + scale))
}

/// Potential of the transformed equation, checked against the operator
/// identity `L̃ψ̃ = c·m·Lψ`.
pub fn transform_potential(v: &MatExpr, spec: &TransformSpec, scope: &Scope, seed: u64) -> Result<MatExpr, EquivError> {
    let (out, report) = transform_with_report(v, spec, scope, seed, 1e-9)?;
    if !report.pass {
        return Err(EquivError::Mismatch { residual: report.relative_residual });
    }
    Ok(out)
}

/// Like [`transform_potential`], but a failed comparison is reported rather
/// than returned as an error.
pub fn transform_with_report(
    v: &MatExpr,
    spec: &TransformSpec,
    scope: &Scope,
    seed: u64,
    tol: f64,
) -> Result<(MatExpr, TransformReport), EquivError> {
    let out = canonical(v, spec, scope, seed)?;
    let residual = compare(v, &out, &PointMap::of(spec), scope, seed)?;
    let pass = residual <= tol;
    let mut notes = Vec::new();
    if let (false, TransformSpec::Et1 { omega } | TransformSpec::Et2 { omega }) = (pass, spec) {
        let trig = matches!(spec, TransformSpec::Et1 { .. });
        let alt = compare(v, &out, &conformal(trig, *omega, true), scope, seed)?;
        notes.push(format!(
            "the map as printed keeps the form only at omega = 1; with omega*t in place of t \
             and phase omega^2 t r^2/(2(1{}omega^2 t^2)) the residual is {alt:.3e}",
            if trig { "+" } else { "-" }
        ));
    }
    let report = TransformReport { transform: spec.clone(), potential: out.component_strings(), relative_residual: residual, pass, notes };
    Ok((out, report))
}

/// `Q' = m Q m⁻¹` written in the new variables, for first-order `Q` with
/// scalar derivative coefficients.
pub fn conjugate_generator(q: &DiffOp, spec: &TransformSpec) -> Result<DiffOp, EquivError> {
    if q.order() > 1 {
        return Err(EquivError::NotFirstOrder);
    }
    let map = PointMap::of(spec);
    let m = &map.multiplier;
    let minv = mat_inv(m);
    let mut zeroth = mat_mul(&mat_mul(m, &q.coeff(&Multi::ZERO)), &minv);
    let mut first: [Expr; 4] = std::array::from_fn(|_| Expr::zero());
    for mu in Var::ALL {
        let a = q.coeff(&Multi::of(mu));
        if a.is_zero() {
            continue;
        }
        if !a.is_scalar() {
            return Err(EquivError::NotFirstOrder);
        }
        let a = a.c(0).clone();
        zeroth = zeroth.add(&mat_mul(m, &minv.diff(mu)).scale(&a));
        for nu in Var::ALL {
            first[nu.index()] = first[nu.index()].add(&a.mul(&map.forward[nu.index()].diff(mu)));
        }
    }
    let mut out = DiffOp::mult(map.pull_mat(&zeroth));
    for nu in Var::ALL {
        let c = map.pull(&first[nu.index()]);
        out = out.add(&DiffOp::term(Multi::of(nu), MatExpr::scalar(c)));
    }
    Ok(out.simplify())
}

#[cfg(test)]
mod tests;
