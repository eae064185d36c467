use num_traits::{Float, ToPrimitive, Zero};
use thiserror::Error;

use super::node::{Apply, Expr, Func, Node, Var};
use super::sample::PointSample;
use crate::scalar::{Cx, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("singular evaluation: {0}")]
    Singular(&'static str),
    #[error("non-finite value")]
    NonFinite,
    #[error("parameter `{0}` has no numeric value")]
    Unbound(String),
    #[error("placeholder `{0}` is not instantiated")]
    UnknownPlaceholder(String),
    #[error("placeholder `{name}` applied to {found} arguments, instantiated with {expected}")]
    PlaceholderArity { name: String, expected: usize, found: usize },
}

impl EvalError {
    /// Faults caused by an unlucky point rather than a malformed input.
    pub fn is_sampling_fault(&self) -> bool {
        matches!(self, EvalError::Singular(_) | EvalError::NonFinite)
    }
}

fn near_real<T: Scalar>(z: Cx<T>) -> bool {
    Float::abs(z.im) <= T::of(1e-14) * (T::one() + Float::abs(z.re))
}

impl Expr {
    pub fn eval<T: Scalar>(&self, s: &PointSample<T>) -> Result<Cx<T>, EvalError> {
        let z = self.eval_inner(s)?;
        if !(Float::is_finite(z.re) && Float::is_finite(z.im)) {
            return Err(EvalError::NonFinite);
        }
        Ok(z)
    }

    fn eval_inner<T: Scalar>(&self, s: &PointSample<T>) -> Result<Cx<T>, EvalError> {
        Ok(match self.node() {
            Node::Num(n) => {
                let z = n.to_complex();
                Cx::new(T::of(z.re), T::of(z.im))
            }
            Node::Var(v) => Cx::new(s.coord(*v), T::zero()),
            Node::Param(p) => match s.inst.params.get(&**p) {
                Some(&v) => Cx::new(v, T::zero()),
                None => return Err(EvalError::Unbound(p.to_string())),
            },
            Node::Apply(a) => eval_apply(a, s)?,
            Node::Sum(xs) => {
                let mut acc = Cx::zero();
                for e in xs {
                    acc += e.eval_inner(s)?;
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = Cx::new(T::one(), T::zero());
                for e in xs {
                    acc *= e.eval_inner(s)?;
                }
                acc
            }
            Node::Pow(b, q) => {
                let z = b.eval_inner(s)?;
                if q.is_integer() {
                    let k = *q.numer();
                    if z.is_zero() && k < 0 {
                        return Err(EvalError::Singular("division by zero"));
                    }
                    z.powi(k as i32)
                } else {
                    if !(near_real(z) && z.re > T::zero()) {
                        return Err(EvalError::Singular("fractional power of non-positive value"));
                    }
                    let e = T::of(q.to_f64().unwrap_or(f64::NAN));
                    Cx::new(Float::powf(z.re, e), T::zero())
                }
            }
            Node::Func(f, u) => {
                let z = u.eval_inner(s)?;
                match f {
                    Func::Sin => z.sin(),
                    Func::Cos => z.cos(),
                    Func::Sinh => z.sinh(),
                    Func::Cosh => z.cosh(),
                    Func::Exp => z.exp(),
                    Func::Ln => {
                        if near_real(z) && z.re <= T::zero() {
                            return Err(EvalError::Singular("ln of non-positive value"));
                        }
                        z.ln()
                    }
                    Func::Sqrt => {
                        if near_real(z) && z.re < T::zero() {
                            return Err(EvalError::Singular("sqrt of negative value"));
                        }
                        z.sqrt()
                    }
                    Func::Atan => z.atan(),
                }
            }
            Node::Atan2(y, x) => {
                let (y, x) = (y.eval_inner(s)?, x.eval_inner(s)?);
                if !(near_real(y) && near_real(x)) {
                    return Err(EvalError::Singular("atan2 of complex arguments"));
                }
                if y.re.is_zero() && x.re.is_zero() {
                    return Err(EvalError::Singular("atan2 at the origin"));
                }
                Cx::new(Float::atan2(y.re, x.re), T::zero())
            }
        })
    }
}

fn eval_apply<T: Scalar>(a: &Apply, s: &PointSample<T>) -> Result<Cx<T>, EvalError> {
    let poly = s
        .inst
        .placeholders
        .get(&*a.name)
        .ok_or_else(|| EvalError::UnknownPlaceholder(a.name.to_string()))?;
    if poly.arity() != a.args.len() {
        return Err(EvalError::PlaceholderArity {
            name: a.name.to_string(),
            expected: poly.arity(),
            found: a.args.len(),
        });
    }
    let mut args = Vec::with_capacity(a.args.len());
    for e in &a.args {
        args.push(e.eval_inner(s)?);
    }
    Ok(poly.eval_deriv(&args, &a.deriv))
}

impl<T: Scalar> PointSample<T> {
    pub fn coord(&self, v: Var) -> T {
        match v {
            Var::T => self.t,
            Var::X1 => self.x[0],
            Var::X2 => self.x[1],
            Var::X3 => self.x[2],
        }
    }
}
