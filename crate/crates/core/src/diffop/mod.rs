//! Differential operators with Pauli-matrix coefficients, kept in normal form
//! (all derivatives to the right).

mod catalog;
mod project;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use catalog::{boost, make_basis_generator, parse_generator, time_family, CatalogError, NamedGenerator, CATALOG_NAMES};
pub use project::{project, Projection, ProjectionError};

use crate::expr::{EvalError, Expr, Number, PointSample, Var};
use crate::pauli::{mat_mul, MatExpr, Pauli};
use crate::scalar::Scalar;

/// Highest derivative order an operator may carry.
pub const MAX_ORDER: u8 = 3;

/// Derivative multi-index over `(t, x1, x2, x3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Multi(pub [u8; 4]);

impl Multi {
    pub const ZERO: Multi = Multi([0; 4]);

    pub fn of(v: Var) -> Multi {
        let mut m = [0; 4];
        m[v.index()] = 1;
        Multi(m)
    }

    pub fn pair(a: Var, b: Var) -> Multi {
        let mut m = Multi::of(a);
        m.0[b.index()] += 1;
        m
    }

    pub fn order(&self) -> u8 {
        self.0.iter().sum()
    }

    pub fn add(&self, o: &Multi) -> Multi {
        Multi(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }

    fn sub(&self, o: &Multi) -> Multi {
        Multi(std::array::from_fn(|k| self.0[k] - o.0[k]))
    }

    /// All `γ ≤ self` componentwise.
    fn below(&self) -> Vec<Multi> {
        let mut out = vec![Multi::ZERO];
        for k in 0..4 {
            let mut next = Vec::new();
            for g in &out {
                for e in 0..=self.0[k] {
                    let mut h = *g;
                    h.0[k] = e;
                    next.push(h);
                }
            }
            out = next;
        }
        out
    }

    fn binomial(&self, g: &Multi) -> i64 {
        (0..4).map(|k| binom(self.0[k] as i64, g.0[k] as i64)).product()
    }

    /// Human-readable label such as `t`, `x1x2`, `1`.
    pub fn label(&self) -> String {
        if self.order() == 0 {
            return "1".into();
        }
        let mut s = String::new();
        for v in Var::ALL {
            for _ in 0..self.0[v.index()] {
                s.push_str(v.name());
            }
        }
        s
    }

    /// All multi-indices up to the given total order.
    pub fn all_up_to(order: u8) -> Vec<Multi> {
        let mut out = Vec::new();
        for a in 0..=order {
            for b in 0..=order - a {
                for c in 0..=order - a - b {
                    for d in 0..=order - a - b - c {
                        out.push(Multi([a, b, c, d]));
                    }
                }
            }
        }
        out.sort();
        out
    }
}

fn binom(n: i64, k: i64) -> i64 {
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffOpError {
    #[error("composition produces a derivative of order {0}, above the supported maximum")]
    OrderOverflow(u8),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiffOp {
    terms: BTreeMap<Multi, MatExpr>,
}

impl DiffOp {
    pub fn zero() -> Self {
        DiffOp::default()
    }

    /// Multiplication by a matrix function.
    pub fn mult(m: MatExpr) -> Self {
        let mut d = DiffOp::zero();
        d.insert(Multi::ZERO, m);
        d
    }

    pub fn scalar(e: Expr) -> Self {
        DiffOp::mult(MatExpr::scalar(e))
    }

    pub fn identity() -> Self {
        DiffOp::scalar(Expr::one())
    }

    pub fn partial(v: Var) -> Self {
        let mut d = DiffOp::zero();
        d.insert(Multi::of(v), MatExpr::identity());
        d
    }

    /// `coeff · ∂^m`.
    pub fn term(m: Multi, coeff: MatExpr) -> Self {
        let mut d = DiffOp::zero();
        d.insert(m, coeff);
        d
    }

    fn insert(&mut self, m: Multi, c: MatExpr) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(old) => {
                *old = old.add(&c);
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// Schrödinger–Pauli operator `i∂t + ½Δ − V`.
    pub fn schrodinger(v: &MatExpr) -> Self {
        let mut d = DiffOp::zero();
        d.insert(Multi::of(Var::T), MatExpr::scalar(Expr::i()));
        for x in Var::SPACE {
            d.insert(Multi::pair(x, x), MatExpr::scalar(Expr::rat(1, 2)));
        }
        d.insert(Multi::ZERO, v.neg());
        d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Multi, &MatExpr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Multi) -> MatExpr {
        self.terms.get(m).cloned().unwrap_or_else(MatExpr::zero)
    }

    pub fn order(&self) -> u8 {
        self.terms.keys().map(Multi::order).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(MatExpr::is_zero)
    }

    pub fn add(&self, o: &DiffOp) -> DiffOp {
        let mut d = self.clone();
        for (m, c) in &o.terms {
            d.insert(*m, c.clone());
        }
        d
    }

    pub fn sub(&self, o: &DiffOp) -> DiffOp {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> DiffOp {
        self.scale_num(&Number::int(-1))
    }

    pub fn scale(&self, e: &Expr) -> DiffOp {
        DiffOp { terms: self.terms.iter().map(|(m, c)| (*m, c.scale(e))).collect() }
    }

    pub fn scale_num(&self, c: &Number) -> DiffOp {
        DiffOp { terms: self.terms.iter().map(|(m, x)| (*m, x.scale_num(c))).collect() }
    }

    /// Left multiplication of every coefficient by a matrix.
    pub fn left_mul(&self, a: &MatExpr) -> DiffOp {
        DiffOp { terms: self.terms.iter().map(|(m, c)| (*m, mat_mul(a, c))).collect() }
    }

    pub fn simplify(&self) -> DiffOp {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let s = c.simplify();
            if !s.is_zero() {
                terms.insert(*m, s);
            }
        }
        DiffOp { terms }
    }

    pub fn substitute(&self, bind: &dyn Fn(Var) -> Option<Expr>) -> DiffOp {
        DiffOp { terms: self.terms.iter().map(|(m, c)| (*m, c.substitute(bind))).collect() }
    }

    /// Applies the operator to a two-component spinor of expressions.
    pub fn apply(&self, psi: &[Expr; 2]) -> [Expr; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (m, c) in &self.terms {
            let d = [psi[0].diff_multi(m.0), psi[1].diff_multi(m.0)];
            let [c0, c1, c2, c3] = &c.0;
            let i = Expr::i();
            let m00 = c0.add(c3);
            let m01 = c1.sub(&i.mul(c2));
            let m10 = c1.add(&i.mul(c2));
            let m11 = c0.sub(c3);
            out[0].push(m00.mul(&d[0]));
            out[0].push(m01.mul(&d[1]));
            out[1].push(m10.mul(&d[0]));
            out[1].push(m11.mul(&d[1]));
        }
        let [a, b] = out;
        [Expr::sum(a), Expr::sum(b)]
    }

    /// Evaluates every coefficient at a point.
    pub fn eval<T: Scalar>(&self, s: &PointSample<T>) -> Result<BTreeMap<Multi, Pauli<T>>, EvalError> {
        let mut out = BTreeMap::new();
        for (m, c) in &self.terms {
            out.insert(*m, c.eval(s)?);
        }
        Ok(out)
    }

    /// True when no term above first order is present.
    pub fn is_first_order(&self) -> bool {
        self.terms.keys().all(|m| m.order() <= 1)
    }
}

/// Composition `A∘B` by the Leibniz rule.
pub fn compose(a: &DiffOp, b: &DiffOp) -> Result<DiffOp, DiffOpError> {
    let mut out = DiffOp::zero();
    let mut derivs: BTreeMap<(Multi, Multi), MatExpr> = BTreeMap::new();
    for (alpha, ca) in &a.terms {
        for (beta, cb) in &b.terms {
            for gamma in alpha.below() {
                let db = derivs
                    .entry((*beta, gamma))
                    .or_insert_with(|| MatExpr(std::array::from_fn(|k| cb.0[k].diff_multi(gamma.0))))
                    .clone();
                if db.is_zero() {
                    continue;
                }
                let target = alpha.sub(&gamma).add(beta);
                if target.order() > MAX_ORDER {
                    return Err(DiffOpError::OrderOverflow(target.order()));
                }
                let k = alpha.binomial(&gamma);
                out.insert(target, mat_mul(ca, &db).scale_num(&Number::int(k)));
            }
        }
    }
    Ok(out.simplify())
}

pub fn commutator(a: &DiffOp, b: &DiffOp) -> Result<DiffOp, DiffOpError> {
    Ok(compose(a, b)?.sub(&compose(b, a)?).simplify())
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| if m.order() == 0 { format!("[{c}]") } else { format!("[{c}]*d{}", m.label()) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
