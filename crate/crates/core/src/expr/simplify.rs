use std::cmp::Ordering;

use num_rational::Rational64;
use num_traits::Zero;

use super::node::{Apply, Expr, Node};
use super::number::Number;

impl Expr {
    /// Sound local rewrites: flatten, fold constants, drop zero terms,
    /// collect equal terms and merge powers of equal bases.
    pub fn simplify(&self) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Var(_) | Node::Param(_) => self.clone(),
            Node::Apply(a) => Expr::apply_raw(Apply {
                name: a.name.clone(),
                args: a.args.iter().map(Expr::simplify).collect(),
                deriv: a.deriv.clone(),
            }),
            Node::Sum(xs) => collect_terms(xs.iter().map(Expr::simplify).collect()),
            Node::Product(xs) => collect_factors(xs.iter().map(Expr::simplify).collect()),
            Node::Pow(b, q) => b.simplify().pow(*q),
            Node::Func(f, b) => Expr::func(*f, b.simplify()),
            Node::Atan2(y, x) => Expr::atan2(y.simplify(), x.simplify()),
        }
    }
}

fn collect_terms(xs: Vec<Expr>) -> Expr {
    let flat = Expr::sum(xs);
    let terms = match flat.node() {
        Node::Sum(ts) => ts.clone(),
        _ => return flat,
    };
    let mut expanded = Vec::with_capacity(terms.len());
    distribute(&terms, &Number::ONE, &mut expanded);
    let mut acc: Vec<(Expr, Number)> = Vec::with_capacity(expanded.len());
    for (c, rest) in expanded {
        match acc.iter_mut().find(|(e, _)| *e == rest) {
            Some(slot) => slot.1 = slot.1.add(&c),
            None => acc.push((rest, c)),
        }
    }
    Expr::sum(acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(e, c)| e.scale(&c)).collect())
}

/// Pushes `scale·term` pairs, opening numeric multiples of nested sums.
fn distribute(terms: &[Expr], scale: &Number, out: &mut Vec<(Number, Expr)>) {
    for t in terms {
        let (c, rest) = t.split_coeff();
        let c = c.mul(scale);
        match rest.node() {
            Node::Sum(inner) => distribute(inner, &c, out),
            _ => out.push((c, rest)),
        }
    }
}

fn base_exp(e: &Expr) -> (Expr, Rational64) {
    match e.node() {
        Node::Pow(b, q) => (b.clone(), *q),
        _ => (e.clone(), Rational64::from_integer(1)),
    }
}

fn collect_factors(xs: Vec<Expr>) -> Expr {
    let flat = Expr::product(xs);
    let factors = match flat.node() {
        Node::Product(fs) => fs.clone(),
        _ => return flat,
    };
    let mut factors = factors;
    factors.sort_by(structural_cmp);
    let mut acc: Vec<(Expr, Rational64)> = Vec::with_capacity(factors.len());
    for f in factors {
        if f.as_number().is_some() {
            acc.push((f, Rational64::from_integer(1)));
            continue;
        }
        let (b, q) = base_exp(&f);
        match acc.iter_mut().find(|(e, _)| *e == b) {
            Some(slot) => slot.1 += q,
            None => acc.push((b, q)),
        }
    }
    Expr::product(acc.into_iter().filter(|(_, q)| !q.is_zero()).map(|(b, q)| b.pow(q)).collect())
}

fn rank(n: &Node) -> u8 {
    match n {
        Node::Num(_) => 0,
        Node::Var(_) => 1,
        Node::Param(_) => 2,
        Node::Apply(_) => 3,
        Node::Sum(_) => 4,
        Node::Product(_) => 5,
        Node::Pow(..) => 6,
        Node::Func(..) => 7,
        Node::Atan2(..) => 8,
    }
}

fn cmp_slices(a: &[Expr], b: &[Expr]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter().zip(b).map(|(x, y)| structural_cmp(x, y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

/// Total order on trees used to canonicalize factor order.
pub(crate) fn structural_cmp(a: &Expr, b: &Expr) -> Ordering {
    let (na, nb) = (a.node(), b.node());
    rank(na).cmp(&rank(nb)).then_with(|| match (na, nb) {
        (Node::Num(x), Node::Num(y)) => {
            let (x, y) = (x.to_complex(), y.to_complex());
            x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
        }
        (Node::Var(x), Node::Var(y)) => x.cmp(y),
        (Node::Param(x), Node::Param(y)) => x.cmp(y),
        (Node::Apply(x), Node::Apply(y)) => {
            x.name.cmp(&y.name).then_with(|| x.deriv.cmp(&y.deriv)).then_with(|| cmp_slices(&x.args, &y.args))
        }
        (Node::Sum(x), Node::Sum(y)) | (Node::Product(x), Node::Product(y)) => cmp_slices(x, y),
        (Node::Pow(x, p), Node::Pow(y, q)) => structural_cmp(x, y).then(p.cmp(q)),
        (Node::Func(f, x), Node::Func(g, y)) => f.cmp(g).then_with(|| structural_cmp(x, y)),
        (Node::Atan2(y1, x1), Node::Atan2(y2, x2)) => structural_cmp(y1, y2).then_with(|| structural_cmp(x1, x2)),
        _ => Ordering::Equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_zero_terms_and_collects() {
        let e = Expr::x(1).mul(&Expr::zero()).add(&Expr::x(2));
        assert_eq!(e.simplify(), Expr::x(2));
        let e = Expr::sum(vec![Expr::x(1), Expr::x(1).scale(&Number::int(2)), Expr::x(1).neg()]);
        assert_eq!(e.simplify(), Expr::x(1).scale(&Number::int(2)));
        let e = Expr::x(1).sub(&Expr::x(1));
        assert!(e.simplify().is_zero());
    }

    #[test]
    fn merges_powers() {
        let e = Expr::product(vec![Expr::x(1), Expr::x(2), Expr::x(1).powi(-1)]);
        assert_eq!(e.simplify(), Expr::x(2));
        let e = Expr::product(vec![Expr::x(3).powi(2), Expr::x(3)]);
        assert_eq!(e.simplify(), Expr::x(3).powi(3));
    }
}
