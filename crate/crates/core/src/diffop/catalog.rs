//! Named first-order generators and the generator text syntax.

use std::sync::Arc;

use thiserror::Error;

use super::{compose, DiffOp, DiffOpError, Multi};
use crate::expr::parse::{lower_scalar, parse_ast, Ast, BinOp, LexMode};
use crate::expr::{Expr, Instantiation, ParamValue, ParseError, PointSample, Scope, Var};
use crate::pauli::{lower_matrix, MatExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown generator `{0}`")]
    UnknownName(String),
    #[error("generator `{name}` expects {expected} parameter(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("sign argument of `{0}` must evaluate to -1 or +1")]
    BadSign(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Order(#[from] DiffOpError),
}

/// Generator names understood by [`make_basis_generator`] and the text syntax.
pub const CATALOG_NAMES: &[&str] = &[
    "P0", "P1", "P2", "P3", "G1", "G2", "G3", "L1", "L2", "L3", "M12", "M13", "M23", "M21", "M31", "M32", "D", "A",
    "I", "B1+(w)", "B1-(w)", "Bh1+(w)", "Bh1-(w)", "Bt1-(w)", "B1(w,eps)", "Bh1(w,eps)", "A+(w)", "A-(w)",
    "Ah+(w)", "Ah-(w)", "A(w,eps)", "Ah(w,eps)", "Q(w,n)", "Qt(w,n)", "Time(p)", "Boost1(nu)",
];

#[derive(Clone, Debug, PartialEq)]
pub struct NamedGenerator {
    pub name: String,
    pub op: DiffOp,
}

impl NamedGenerator {
    pub fn new(name: impl Into<String>, op: DiffOp) -> Self {
        NamedGenerator { name: name.into(), op }
    }

    /// Structured form `(ξ⁰, ξᵃ, η)` of a first-order generator.
    pub fn candidate(&self) -> Option<crate::detsys::SymmetryCandidate> {
        crate::detsys::SymmetryCandidate::from_operator(&self.op).ok()
    }
}

fn i_times(e: Expr) -> MatExpr {
    MatExpr::scalar(Expr::i().mul(&e))
}

/// `p·P0 − (ṗ/4)(xP + Px) + (p̈/4)r²`.
pub fn time_family(p: &Expr) -> DiffOp {
    let dp = p.diff(Var::T);
    let ddp = dp.diff(Var::T);
    let mut op = DiffOp::term(Multi::of(Var::T), i_times(p.clone()));
    for a in 1..=3 {
        let c = Expr::product(vec![Expr::i(), Expr::rat(1, 2), dp.clone(), Expr::x(a)]);
        op = op.add(&DiffOp::term(Multi::of(Var::x(a)), MatExpr::scalar(c)));
    }
    let c0 = Expr::sum(vec![
        Expr::product(vec![Expr::i(), Expr::rat(3, 4), dp]),
        Expr::product(vec![Expr::rat(1, 4), ddp, Expr::r2()]),
    ]);
    op.add(&DiffOp::scalar(c0)).simplify()
}

/// `ν·Pa − ν̇·xa`.
pub fn boost(a: usize, nu: &Expr) -> DiffOp {
    let dnu = nu.diff(Var::T);
    DiffOp::term(Multi::of(Var::x(a)), MatExpr::scalar(Expr::i().neg().mul(nu)))
        .add(&DiffOp::scalar(dnu.mul(&Expr::x(a)).neg()))
        .simplify()
}

fn p0() -> DiffOp {
    DiffOp::term(Multi::of(Var::T), MatExpr::scalar(Expr::i()))
}

fn m_ab(a: usize, b: usize) -> DiffOp {
    // x_a P_b − x_b P_a
    let t1 = DiffOp::term(Multi::of(Var::x(b)), MatExpr::scalar(Expr::i().neg().mul(&Expr::x(a))));
    let t2 = DiffOp::term(Multi::of(Var::x(a)), MatExpr::scalar(Expr::i().mul(&Expr::x(b))));
    t1.add(&t2)
}

fn l_a(a: usize) -> DiffOp {
    match a {
        1 => m_ab(2, 3),
        2 => m_ab(3, 1),
        _ => m_ab(1, 2),
    }
}

fn wt(w: &Expr, k: i64) -> Expr {
    Expr::product(vec![Expr::int(k), w.clone(), Expr::t()])
}

fn axis_of(s: &str) -> Option<usize> {
    match s {
        "1" => Some(1),
        "2" => Some(2),
        "3" => Some(3),
        _ => None,
    }
}

fn sign_value(name: &str, e: &Expr, scope: Option<&Scope>) -> Result<i64, CatalogError> {
    let mut inst = Instantiation::<f64>::empty();
    if let Some(sc) = scope {
        for (k, v) in sc.params.iter() {
            if let ParamValue::Real(x) = v {
                inst.params.insert(k.to_string(), x);
            }
        }
    }
    let p = PointSample::at(0.0, [1.0, 1.0, 1.0], Arc::new(inst));
    match e.eval(&p) {
        Ok(z) if e.is_constant() && z.im == 0.0 && (z.re == 1.0 || z.re == -1.0) => Ok(z.re as i64),
        _ => Err(CatalogError::BadSign(name.to_string())),
    }
}

fn expect_args(name: &str, params: &[Expr], n: usize) -> Result<(), CatalogError> {
    if params.len() == n {
        Ok(())
    } else {
        Err(CatalogError::Arity { name: name.to_string(), expected: n, found: params.len() })
    }
}

/// Builds a catalog generator in tabulated (Hermitian) form.
pub fn make_basis_generator(name: &str, params: &[Expr]) -> Result<NamedGenerator, CatalogError> {
    make_with_scope(name, params, None)
}

pub(crate) fn is_catalog_name(name: &str) -> bool {
    !matches!(make_with_scope(name, &[], None), Err(CatalogError::UnknownName(_)))
}

pub(crate) fn make_with_scope(name: &str, params: &[Expr], scope: Option<&Scope>) -> Result<NamedGenerator, CatalogError> {
    let nullary = |op: DiffOp| -> Result<NamedGenerator, CatalogError> {
        expect_args(name, params, 0)?;
        Ok(NamedGenerator::new(name, op))
    };
    let with = |n: usize, f: &dyn Fn(&[Expr]) -> Result<DiffOp, CatalogError>| -> Result<NamedGenerator, CatalogError> {
        expect_args(name, params, n)?;
        Ok(NamedGenerator::new(name, f(params)?))
    };
    match name {
        "P0" => return nullary(p0()),
        "D" => return nullary(time_family(&Expr::int(2).mul(&Expr::t()))),
        "A" if params.is_empty() => return nullary(time_family(&Expr::t().powi(2))),
        "I" => return nullary(DiffOp::identity()),
        "Time" => return with(1, &|p| Ok(time_family(&p[0]))),
        "A+" => return with(1, &|p| Ok(time_family(&Expr::sin(wt(&p[0], 2))))),
        "Ah+" => return with(1, &|p| Ok(time_family(&Expr::cos(wt(&p[0], 2))))),
        "A-" => return with(1, &|p| Ok(time_family(&Expr::exp(wt(&p[0], 2))))),
        "Ah-" | "At-" => return with(1, &|p| Ok(time_family(&Expr::exp(wt(&p[0], -2))))),
        "A" | "Ah" => {
            return with(2, &|p| {
                let hat = name == "Ah";
                let arg = wt(&p[0], 2);
                let prof = match (sign_value(name, &p[1], scope)?, hat) {
                    (1, false) => Expr::sin(arg),
                    (1, true) => Expr::cos(arg),
                    (_, false) => Expr::exp(arg),
                    (_, true) => Expr::exp(arg.neg()),
                };
                Ok(time_family(&prof))
            })
        }
        "Q" => {
            return with(2, &|p| {
                let e = Expr::exp(wt(&p[0], 1));
                let m = MatExpr::sigma(3).scale(&p[1].mul(&e));
                Ok(boost(3, &e).add(&DiffOp::mult(m)).simplify())
            })
        }
        "Qt" | "Qtilde" => {
            return with(2, &|p| {
                let e = Expr::exp(wt(&p[0], 2));
                let m = MatExpr::sigma(3).scale(&Expr::product(vec![Expr::int(-1), p[0].clone(), p[1].clone(), e.clone()]));
                Ok(time_family(&e).add(&DiffOp::mult(m)).simplify())
            })
        }
        _ => {}
    }
    let (stem, sign) = match name.strip_suffix('+') {
        Some(s) => (s, Some(1)),
        None => match name.strip_suffix('-') {
            Some(s) => (s, Some(-1)),
            None => (name, None),
        },
    };
    let unknown = || CatalogError::UnknownName(name.to_string());
    let split = |prefix: &str| stem.strip_prefix(prefix).and_then(axis_of);
    if sign.is_none() {
        if let Some(a) = split("P") {
            return nullary(boost(a, &Expr::one()));
        }
        if let Some(a) = split("G") {
            return nullary(boost(a, &Expr::t()));
        }
        if let Some(a) = split("L") {
            return nullary(l_a(a));
        }
        if let Some(a) = split("Boost") {
            return with(1, &|p| Ok(boost(a, &p[0])));
        }
        if let Some(rest) = stem.strip_prefix('M') {
            let mut it = rest.chars();
            if let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) {
                if let (Some(a), Some(b)) = (axis_of(&a.to_string()), axis_of(&b.to_string())) {
                    if a != b {
                        return nullary(m_ab(a, b));
                    }
                }
            }
            return Err(unknown());
        }
    }
    let (a, hat) = if let Some(a) = split("Bh").or_else(|| split("Bt")) {
        (a, true)
    } else if let Some(a) = split("B") {
        (a, false)
    } else {
        return Err(unknown());
    };
    let profile = |w: &Expr, s: i64| -> Expr {
        let arg = wt(w, 1);
        match (s, hat) {
            (1, false) => Expr::sin(arg),
            (1, true) => Expr::cos(arg),
            (_, false) => Expr::exp(arg),
            (_, true) => Expr::exp(arg.neg()),
        }
    };
    match sign {
        Some(s) => with(1, &|p| Ok(boost(a, &profile(&p[0], s)))),
        None => with(2, &|p| {
            let s = sign_value(name, &p[1], scope)?;
            Ok(boost(a, &profile(&p[0], s)))
        }),
    }
}

fn contains_generator(ast: &Ast) -> bool {
    match ast {
        Ast::Num(..) => false,
        Ast::Ident(name, _) => is_catalog_name(name),
        Ast::Call(name, args, _) => is_catalog_name(name) || args.iter().any(contains_generator),
        Ast::Neg(a, _) => contains_generator(a),
        Ast::Bin(_, a, b, _) => contains_generator(a) || contains_generator(b),
    }
}

fn lower_op(ast: &Ast, scope: &Scope) -> Result<DiffOp, CatalogError> {
    if !contains_generator(ast) {
        return Ok(DiffOp::mult(lower_matrix(ast, scope)?));
    }
    match ast {
        Ast::Ident(name, _) => Ok(make_with_scope(name, &[], Some(scope))?.op),
        Ast::Call(name, args, pos) => {
            if !is_catalog_name(name) {
                return Err(ParseError::NotAllowed { what: format!("generator inside `{name}(...)`"), pos: *pos }.into());
            }
            let params = args.iter().map(|a| lower_scalar(a, scope)).collect::<Result<Vec<_>, _>>()?;
            Ok(make_with_scope(name, &params, Some(scope))?.op)
        }
        Ast::Neg(a, _) => Ok(lower_op(a, scope)?.neg()),
        Ast::Bin(op, a, b, pos) => match op {
            BinOp::Add => Ok(lower_op(a, scope)?.add(&lower_op(b, scope)?)),
            BinOp::Sub => Ok(lower_op(a, scope)?.sub(&lower_op(b, scope)?)),
            BinOp::Mul => Ok(compose(&lower_op(a, scope)?, &lower_op(b, scope)?)?),
            BinOp::Div => {
                if contains_generator(b) {
                    return Err(ParseError::NotAllowed { what: "division by a generator".into(), pos: *pos }.into());
                }
                let d = lower_scalar(b, scope)?;
                Ok(lower_op(a, scope)?.scale(&d.powi(-1)))
            }
            BinOp::Pow => Err(ParseError::NotAllowed { what: "power of a generator".into(), pos: *pos }.into()),
        },
        Ast::Num(..) => unreachable!("numbers never contain generators"),
    }
}

/// Parses generator text such as `L3 + n*kappa*t + n*s3` or `B3+(1.0)`.
///
/// Products compose operators in written order; scalar and matrix factors
/// act by multiplication.
pub fn parse_generator(text: &str, scope: &Scope) -> Result<DiffOp, CatalogError> {
    let ast = parse_ast(text, LexMode { signed_names: true })?;
    Ok(lower_op(&ast, scope)?.simplify())
}
