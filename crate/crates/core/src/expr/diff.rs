use num_rational::Rational64;

use super::node::{Apply, Expr, Func, Node, Var};
use super::number::Number;

impl Expr {
    /// Exact partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        match self.node() {
            Node::Num(_) | Node::Param(_) => Expr::zero(),
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Apply(a) => {
                let mut terms = Vec::with_capacity(a.args.len());
                for (k, arg) in a.args.iter().enumerate() {
                    let da = arg.diff(v);
                    if da.is_zero() {
                        continue;
                    }
                    let mut deriv = a.deriv.clone();
                    deriv[k] += 1;
                    let g = Expr::apply_raw(Apply { name: a.name.clone(), args: a.args.clone(), deriv });
                    terms.push(g.mul(&da));
                }
                Expr::sum(terms)
            }
            Node::Sum(xs) => Expr::sum(xs.iter().map(|e| e.diff(v)).collect()),
            Node::Product(xs) => {
                let mut terms = Vec::with_capacity(xs.len());
                for k in 0..xs.len() {
                    let dk = xs[k].diff(v);
                    if dk.is_zero() {
                        continue;
                    }
                    let mut fs: Vec<Expr> = xs.clone();
                    fs[k] = dk;
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Node::Pow(b, q) => {
                let c = Expr::num(Number::rational(*q));
                Expr::product(vec![c, b.pow(q - Rational64::from_integer(1)), b.diff(v)])
            }
            Node::Func(g, u) => {
                let du = u.diff(v);
                let outer = match g {
                    Func::Sin => Expr::cos(u.clone()),
                    Func::Cos => Expr::sin(u.clone()).neg(),
                    Func::Sinh => Expr::cosh(u.clone()),
                    Func::Cosh => Expr::sinh(u.clone()),
                    Func::Exp => self.clone(),
                    Func::Ln => u.powi(-1),
                    Func::Sqrt => Expr::rat(1, 2).mul(&self.powi(-1)),
                    Func::Atan => Expr::sum(vec![Expr::one(), u.powi(2)]).powi(-1),
                };
                outer.mul(&du)
            }
            Node::Atan2(y, x) => {
                let num = x.mul(&y.diff(v)).sub(&y.mul(&x.diff(v)));
                let den = Expr::sum(vec![x.powi(2), y.powi(2)]);
                num.mul(&den.powi(-1))
            }
        }
    }

    /// Mixed partial derivative by a `(t, x1, x2, x3)` multi-index.
    pub fn diff_multi(&self, m: [u8; 4]) -> Expr {
        let mut e = self.clone();
        for (k, &n) in m.iter().enumerate() {
            for _ in 0..n {
                e = e.diff(Var::from_index(k));
            }
        }
        e
    }
}
