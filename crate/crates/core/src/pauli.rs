//! 2×2 matrix expressions stored as `c0·I + σa·ca`.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;

use crate::expr::parse::{builtin_ident, call_scalar, lower_scalar, make_pow, parse_ast, Ast, BinOp, LexMode};
use crate::expr::{EvalError, Expr, Number, ParseError, PointSample, Scope, Var};
use crate::scalar::{Cx, Scalar};

/// Levi-Civita symbol on 0-based indices.
pub fn levi_civita(a: usize, b: usize, c: usize) -> i64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MatExpr(pub [Expr; 4]);

impl MatExpr {
    pub fn zero() -> Self {
        MatExpr(Default::default())
    }

    pub fn scalar(e: Expr) -> Self {
        MatExpr([e, Expr::zero(), Expr::zero(), Expr::zero()])
    }

    pub fn identity() -> Self {
        MatExpr::scalar(Expr::one())
    }

    /// `σ_b` for `b` in 1..=3 (`b = 0` gives the identity).
    pub fn sigma(b: usize) -> Self {
        let mut m = MatExpr::zero();
        m.0[b] = Expr::one();
        m
    }

    pub fn from_components(c: [Expr; 4]) -> Self {
        MatExpr(c)
    }

    pub fn c(&self, k: usize) -> &Expr {
        &self.0[k]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Expr::is_zero)
    }

    /// True when all vector components are the zero literal.
    pub fn is_scalar(&self) -> bool {
        self.0[1..].iter().all(Expr::is_zero)
    }

    pub fn add(&self, o: &MatExpr) -> MatExpr {
        MatExpr(std::array::from_fn(|k| self.0[k].add(&o.0[k])))
    }

    pub fn sub(&self, o: &MatExpr) -> MatExpr {
        MatExpr(std::array::from_fn(|k| self.0[k].sub(&o.0[k])))
    }

    pub fn neg(&self) -> MatExpr {
        MatExpr(std::array::from_fn(|k| self.0[k].neg()))
    }

    pub fn scale(&self, e: &Expr) -> MatExpr {
        MatExpr(std::array::from_fn(|k| e.mul(&self.0[k])))
    }

    pub fn scale_num(&self, c: &Number) -> MatExpr {
        MatExpr(std::array::from_fn(|k| self.0[k].scale(c)))
    }

    pub fn mul(&self, o: &MatExpr) -> MatExpr {
        mat_mul(self, o)
    }

    pub fn diff(&self, v: Var) -> MatExpr {
        mat_diff(self, v)
    }

    pub fn simplify(&self) -> MatExpr {
        MatExpr(std::array::from_fn(|k| self.0[k].simplify()))
    }

    pub fn substitute(&self, bind: &dyn Fn(Var) -> Option<Expr>) -> MatExpr {
        MatExpr(std::array::from_fn(|k| self.0[k].substitute(bind)))
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.0.iter().any(|e| e.depends_on(v))
    }

    /// Vector part `(c1, c2, c3)` as a matrix with zero scalar part.
    pub fn vector_part(&self) -> MatExpr {
        MatExpr([Expr::zero(), self.0[1].clone(), self.0[2].clone(), self.0[3].clone()])
    }

    pub fn scalar_part(&self) -> MatExpr {
        MatExpr::scalar(self.0[0].clone())
    }

    pub fn eval<T: Scalar>(&self, s: &PointSample<T>) -> Result<Pauli<T>, EvalError> {
        let mut out = [Cx::zero(); 4];
        for k in 0..4 {
            if !self.0[k].is_zero() {
                out[k] = self.0[k].eval(s)?;
            }
        }
        Ok(Pauli(out))
    }

    /// The four components as strings, parseable by [`parse`](crate::expr::parse).
    pub fn component_strings(&self) -> [String; 4] {
        std::array::from_fn(|k| self.0[k].to_string())
    }
}

/// Pauli-basis product: `(AB)0 = A0B0 + AaBa`, `(AB)c = A0Bc + AcB0 + iε_abc AaBb`.
pub fn mat_mul(a: &MatExpr, b: &MatExpr) -> MatExpr {
    let (a, b) = (&a.0, &b.0);
    let mut c0 = vec![a[0].mul(&b[0])];
    for k in 1..4 {
        c0.push(a[k].mul(&b[k]));
    }
    let mut out = [Expr::sum(c0), Expr::zero(), Expr::zero(), Expr::zero()];
    for c in 1..4 {
        let mut terms = vec![a[0].mul(&b[c]), a[c].mul(&b[0])];
        for p in 1..4 {
            for q in 1..4 {
                let e = levi_civita(p - 1, q - 1, c - 1);
                if e != 0 {
                    terms.push(Expr::product(vec![Expr::num(Number::I.mul(&Number::int(e))), a[p].clone(), b[q].clone()]));
                }
            }
        }
        out[c] = Expr::sum(terms);
    }
    MatExpr(out)
}

pub fn mat_comm(a: &MatExpr, b: &MatExpr) -> MatExpr {
    mat_mul(a, b).sub(&mat_mul(b, a))
}

pub fn mat_diff(a: &MatExpr, v: Var) -> MatExpr {
    MatExpr(std::array::from_fn(|k| a.0[k].diff(v)))
}

/// `σ1·cos(2n·u) + σ2·sin(2n·u)`.
pub fn expand_m(n: &Expr, u: &Expr) -> MatExpr {
    let arg = Expr::product(vec![Expr::int(2), n.clone(), u.clone()]);
    MatExpr([Expr::zero(), Expr::cos(arg.clone()), Expr::sin(arg), Expr::zero()])
}

/// Numeric Pauli components of a 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pauli<T>(pub [Cx<T>; 4]);

impl<T: Scalar> Pauli<T> {
    pub fn zero() -> Self {
        Pauli([Cx::zero(); 4])
    }

    /// Entries `[[m00, m01], [m10, m11]]`.
    pub fn to_matrix(&self) -> [[Cx<T>; 2]; 2] {
        let [c0, c1, c2, c3] = self.0;
        let i = Complex::new(T::zero(), T::one());
        [[c0 + c3, c1 - i * c2], [c1 + i * c2, c0 - c3]]
    }

    pub fn from_matrix(m: [[Cx<T>; 2]; 2]) -> Self {
        let half = T::of(0.5);
        let i = Complex::new(T::zero(), T::one());
        Pauli([
            (m[0][0] + m[1][1]) * half,
            (m[0][1] + m[1][0]) * half,
            (m[1][0] - m[0][1]) * half * (-i),
            (m[0][0] - m[1][1]) * half,
        ])
    }

    pub fn mul(&self, o: &Pauli<T>) -> Pauli<T> {
        let (a, b) = (&self.0, &o.0);
        let i = Complex::new(T::zero(), T::one());
        let mut out = [Cx::zero(); 4];
        out[0] = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
        for c in 1..4 {
            let mut s = a[0] * b[c] + a[c] * b[0];
            for p in 1..4 {
                for q in 1..4 {
                    let e = levi_civita(p - 1, q - 1, c - 1);
                    if e != 0 {
                        s += i * a[p] * b[q] * T::of(e as f64);
                    }
                }
            }
            out[c] = s;
        }
        Pauli(out)
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().map(|z| crate::scalar::cnorm(*z)).fold(T::zero(), num_traits::Float::max)
    }

    pub fn sub(&self, o: &Pauli<T>) -> Pauli<T> {
        Pauli(std::array::from_fn(|k| self.0[k] - o.0[k]))
    }
}

impl fmt::Display for MatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for k in 0..4 {
            if self.0[k].is_zero() {
                continue;
            }
            if k == 0 {
                parts.push(format!("{}", self.0[0]));
            } else {
                parts.push(format!("s{k}*({})", self.0[k]));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn sigma_ident(name: &str) -> Option<MatExpr> {
    match name {
        "s0" => Some(MatExpr::identity()),
        "s1" => Some(MatExpr::sigma(1)),
        "s2" => Some(MatExpr::sigma(2)),
        "s3" => Some(MatExpr::sigma(3)),
        _ => None,
    }
}

fn require_scalar(m: MatExpr, pos: usize, what: &str) -> Result<Expr, ParseError> {
    if m.is_scalar() {
        Ok(m.0[0].clone())
    } else {
        Err(ParseError::NotAllowed { what: format!("matrix-valued {what}"), pos })
    }
}

fn placeholder(name: &str, args: &[Expr], pos: usize, scope: &Scope) -> Result<Expr, ParseError> {
    call_scalar(name, args.to_vec(), pos, scope)
}

/// Lowers a syntax tree to a matrix expression (`s0..s3`, `M`, `N`, `F`).
pub fn lower_matrix(ast: &Ast, scope: &Scope) -> Result<MatExpr, ParseError> {
    Ok(match ast {
        Ast::Num(..) => MatExpr::scalar(lower_scalar(ast, scope)?),
        Ast::Ident(name, pos) => match sigma_ident(name) {
            Some(m) => m,
            None if builtin_ident(name).is_some() || scope.params.contains(name) => {
                MatExpr::scalar(lower_scalar(ast, scope)?)
            }
            None => return Err(ParseError::UnknownIdentifier { name: name.clone(), pos: *pos }),
        },
        Ast::Call(name, args, pos) => {
            let mut sargs = Vec::with_capacity(args.len());
            for a in args {
                sargs.push(require_scalar(lower_matrix(a, scope)?, a.pos(), "function argument")?);
            }
            let arity = |n: usize| {
                if sargs.len() == n {
                    Ok(())
                } else {
                    Err(ParseError::Arity { name: name.clone(), expected: n, found: sargs.len(), pos: *pos })
                }
            };
            match name.as_str() {
                "M" if !scope.placeholders.contains_key("M") => {
                    arity(2)?;
                    expand_m(&sargs[0], &sargs[1])
                }
                "N" if !scope.placeholders.contains_key("N") => {
                    let g = placeholder("G", &sargs, *pos, scope)?;
                    let gt = placeholder("Gt", &sargs, *pos, scope)?;
                    MatExpr([g, Expr::zero(), Expr::zero(), gt])
                }
                "F" if !scope.placeholders.contains_key("F") => {
                    let p = placeholder("Phi", &sargs, *pos, scope)?;
                    let pt = placeholder("Phit", &sargs, *pos, scope)?;
                    MatExpr([p, Expr::zero(), Expr::zero(), Expr::i().mul(&pt)])
                }
                _ => MatExpr::scalar(call_scalar(name, sargs, *pos, scope)?),
            }
        }
        Ast::Neg(a, _) => lower_matrix(a, scope)?.neg(),
        Ast::Bin(op, a, b, pos) => {
            let (ma, mb) = (lower_matrix(a, scope)?, lower_matrix(b, scope)?);
            match op {
                BinOp::Add => ma.add(&mb),
                BinOp::Sub => ma.sub(&mb),
                BinOp::Mul => mat_mul(&ma, &mb),
                BinOp::Div => ma.scale(&require_scalar(mb, *pos, "divisor")?.powi(-1)),
                BinOp::Pow => {
                    let base = require_scalar(ma, a.pos(), "power base")?;
                    let exp = require_scalar(mb, b.pos(), "exponent")?;
                    MatExpr::scalar(make_pow(base, exp))
                }
            }
        }
    })
}

/// Parses a matrix potential, e.g. `G(x1,x2) + s3*lambda`.
pub fn parse_matrix(text: &str, scope: &Scope) -> Result<MatExpr, ParseError> {
    lower_matrix(&parse_ast(text, LexMode::default())?, scope)
}
