//! Parameter tables, placeholder instantiation and deterministic sampling.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Float, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use super::eval::EvalError;
use crate::scalar::{Cx, Scalar};

/// Names with a conventional meaning in potentials and generators.
pub const RESERVED_PARAMS: &[&str] = &[
    "kappa", "omega", "omega1", "omega2", "omega3", "mu", "nu", "lambda", "n", "eps", "eps1", "eps2", "eps3",
];

pub fn is_sign_param(name: &str) -> bool {
    name == "eps" || (name.starts_with("eps") && name[3..].chars().all(|c| c.is_ascii_digit()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamValue {
    Real(f64),
    /// Declared but left free; a random admissible value is drawn per instantiation.
    Symbolic,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("sign parameter `{name}` must be -1 or +1, got {value}")]
    NotASign { name: String, value: f64 },
    #[error("invalid parameter name `{0}`")]
    BadName(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamTable {
    entries: BTreeMap<String, ParamValue>,
}

impl ParamTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table with every reserved name declared symbolic.
    pub fn reserved() -> Self {
        let mut t = Self::new();
        for name in RESERVED_PARAMS {
            t.entries.insert((*name).to_string(), ParamValue::Symbolic);
        }
        t
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        check_name(name)?;
        if is_sign_param(name) && value != 1.0 && value != -1.0 {
            return Err(ParamError::NotASign { name: name.to_string(), value });
        }
        self.entries.insert(name.to_string(), ParamValue::Real(value));
        Ok(())
    }

    pub fn declare(&mut self, name: &str) -> Result<(), ParamError> {
        check_name(name)?;
        self.entries.entry(name.to_string()).or_insert(ParamValue::Symbolic);
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self, ParamError> {
        self.set(name, value)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<ParamValue> {
        self.entries.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ParamValue)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn check_name(name: &str) -> Result<(), ParamError> {
    let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(ParamError::BadName(name.to_string()))
    }
}

/// Symbols visible to the parser: parameters and placeholder arities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scope {
    pub params: ParamTable,
    pub placeholders: BTreeMap<String, usize>,
}

impl Scope {
    pub fn new(params: ParamTable) -> Self {
        Scope { params, placeholders: BTreeMap::new() }
    }

    pub fn with_placeholder(mut self, name: &str, arity: usize) -> Self {
        self.placeholders.insert(name.to_string(), arity);
        self
    }
}

/// Dense real polynomial of bounded total degree in `arity` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    arity: usize,
    terms: Vec<(Vec<u8>, T)>,
}

fn monomials(arity: usize, degree: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; arity];
    fn rec(k: usize, left: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[k] = e;
            rec(k + 1, left - e, cur, out);
        }
        cur[k] = 0;
    }
    rec(0, degree, &mut cur, &mut out);
    out
}

impl<T: Scalar> Poly<T> {
    pub fn random(arity: usize, degree: u8, rng: &mut impl Rng) -> Self {
        let terms = monomials(arity, degree)
            .into_iter()
            .map(|m| {
                let c: f64 = rng.sample(StandardNormal);
                (m, T::of(c))
            })
            .collect();
        Poly { arity, terms }
    }

    pub fn from_terms(arity: usize, terms: Vec<(Vec<u8>, T)>) -> Self {
        Poly { arity, terms }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Value of the partial derivative `∂^deriv p` at `args`.
    pub fn eval_deriv(&self, args: &[Cx<T>], deriv: &[u8]) -> Cx<T> {
        let mut acc = Cx::zero();
        'terms: for (m, c) in &self.terms {
            let mut v = Cx::new(*c, T::zero());
            for k in 0..self.arity {
                let (e, d) = (m[k], deriv[k]);
                if d > e {
                    continue 'terms;
                }
                for j in 0..d {
                    v *= T::of((e - j) as f64);
                }
                v *= args[k].powi((e - d) as i32);
            }
            acc += v;
        }
        acc
    }
}

/// Concrete values for every parameter and placeholder of a scope.
#[derive(Clone, Debug, PartialEq)]
pub struct Instantiation<T> {
    pub params: BTreeMap<String, T>,
    pub placeholders: BTreeMap<String, Poly<T>>,
}

impl<T: Scalar> Instantiation<T> {
    pub fn empty() -> Self {
        Instantiation { params: BTreeMap::new(), placeholders: BTreeMap::new() }
    }
}

/// One evaluation point together with the instantiation it belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample<T> {
    pub t: T,
    pub x: [T; 3],
    pub seed: u64,
    pub inst: Arc<Instantiation<T>>,
}

impl<T: Scalar> PointSample<T> {
    pub fn at(t: f64, x: [f64; 3], inst: Arc<Instantiation<T>>) -> Self {
        PointSample { t: T::of(t), x: x.map(T::of), seed: 0, inst }
    }
}

/// Seeded source of instantiations and sample points.
pub struct Sampler {
    seed: u64,
    rng: ChaCha8Rng,
    pub degree: u8,
}

fn signed_magnitude(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { seed, rng: ChaCha8Rng::seed_from_u64(seed), degree: 3 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws parameter values (fixed ones kept) and placeholder polynomials.
    pub fn instantiate<T: Scalar>(&mut self, scope: &Scope) -> Arc<Instantiation<T>> {
        let mut params = BTreeMap::new();
        for (name, v) in scope.params.iter() {
            let x = match v {
                ParamValue::Real(x) => x,
                ParamValue::Symbolic if is_sign_param(name) => {
                    if self.rng.random_bool(0.5) {
                        1.0
                    } else {
                        -1.0
                    }
                }
                ParamValue::Symbolic => signed_magnitude(&mut self.rng, 0.5, 2.0),
            };
            params.insert(name.to_string(), T::of(x));
        }
        let mut placeholders = BTreeMap::new();
        for (name, &arity) in &scope.placeholders {
            placeholders.insert(name.clone(), Poly::random(arity, self.degree, &mut self.rng));
        }
        Arc::new(Instantiation { params, placeholders })
    }

    /// Uniform point: each `x_a` in ±[0.5, 2], `t` in [-1, 1].
    pub fn point<T: Scalar>(&mut self, inst: &Arc<Instantiation<T>>) -> PointSample<T> {
        let t = self.rng.random_range(-1.0..1.0);
        let x = [
            signed_magnitude(&mut self.rng, 0.5, 2.0),
            signed_magnitude(&mut self.rng, 0.5, 2.0),
            signed_magnitude(&mut self.rng, 0.5, 2.0),
        ];
        PointSample { t: T::of(t), x: x.map(T::of), seed: self.seed, inst: inst.clone() }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Draws `n` points at which `f` evaluates without a sampling fault,
    /// redrawing up to `retries` times per point.
    pub fn collect<T: Scalar, R>(
        &mut self,
        inst: &Arc<Instantiation<T>>,
        n: usize,
        retries: usize,
        mut f: impl FnMut(&PointSample<T>) -> Result<R, EvalError>,
    ) -> Result<Vec<(PointSample<T>, R)>, EvalError> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut attempt = 0;
            loop {
                let p = self.point(inst);
                match f(&p) {
                    Ok(r) => {
                        out.push((p, r));
                        break;
                    }
                    Err(e) if e.is_sampling_fault() && attempt < retries => attempt += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(out)
    }
}

/// Default per-point redraw budget on sampling faults.
pub const DEFAULT_RETRIES: usize = 32;

/// Relative comparison with an absolute floor, as used for identity testing.
pub fn close<T: Scalar>(a: Cx<T>, b: Cx<T>, rel: T, floor: T) -> bool {
    let d = crate::scalar::cnorm(a - b);
    let s = Float::max(crate::scalar::cnorm(a), crate::scalar::cnorm(b));
    d <= Float::max(rel * s, floor)
}
