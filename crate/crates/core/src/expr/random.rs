//! Random expression trees for property checks of differentiation and
//! evaluation.

use rand::Rng;

use super::node::{Expr, Var};
use super::sample::Scope;

/// Placeholders referenced by [`random_tree`]; declare them before sampling.
pub fn random_tree_scope() -> Scope {
    Scope::default().with_placeholder("G", 2).with_placeholder("H", 1)
}

fn leaf(rng: &mut impl Rng) -> Expr {
    match rng.random_range(0..6) {
        0 => Expr::t(),
        1..=3 => Expr::var(Var::x(rng.random_range(1..=3))),
        4 => Expr::rat(rng.random_range(-4..=4), rng.random_range(1..=3)),
        _ => Expr::float(rng.random_range(-1.0..1.0)),
    }
}

/// Smooth random tree of depth at most `depth` over the sampling box.
///
/// Only operations that are analytic on the whole box are used, so the
/// result can be evaluated and finite-differenced at any sample point.
pub fn random_tree(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.2) {
        return leaf(rng);
    }
    let d = depth - 1;
    match rng.random_range(0..11) {
        0 | 1 => random_tree(rng, d).add(&random_tree(rng, d)),
        2 | 3 => random_tree(rng, d).mul(&random_tree(rng, d)),
        4 => Expr::sin(random_tree(rng, d)),
        5 => Expr::cos(random_tree(rng, d)),
        6 => Expr::exp(Expr::sin(random_tree(rng, d))),
        7 => Expr::sqrt(Expr::one().add(&random_tree(rng, d).powi(2))),
        8 => Expr::atan(random_tree(rng, d)),
        9 => Expr::one().add(&random_tree(rng, d).powi(2)).powi(-1),
        _ => {
            if rng.random_bool(0.5) {
                Expr::apply("G", vec![Expr::sin(random_tree(rng, d)), random_tree(rng, d)])
            } else {
                Expr::apply("H", vec![Expr::atan(random_tree(rng, d))])
            }
        }
    }
}

/// Central finite difference of `e` in `v` at `p` with step `h`.
pub fn central_difference(
    e: &Expr,
    p: &super::PointSample<f64>,
    v: Var,
    h: f64,
) -> Result<num_complex::Complex<f64>, super::EvalError> {
    let shifted = |d: f64| {
        let mut q = p.clone();
        match v {
            Var::T => q.t += d,
            _ => q.x[v.index() - 1] += d,
        }
        q
    };
    Ok((e.eval(&shifted(h))? - e.eval(&shifted(-h))?) / (2.0 * h))
}
