use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

use super::number::Number;

/// Independent variable of the equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    X1,
    X2,
    X3,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::T, Var::X1, Var::X2, Var::X3];
    pub const SPACE: [Var; 3] = [Var::X1, Var::X2, Var::X3];

    /// Slot in a `(t, x1, x2, x3)` multi-index.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Var {
        Var::ALL[k]
    }

    /// Spatial axis `a` in 1..=3.
    pub fn x(a: usize) -> Var {
        Var::ALL[a]
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::X3 => "x3",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Ln,
    Sqrt,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            _ => return None,
        })
    }
}

/// Application of an arbitrary-function placeholder, possibly differentiated
/// with respect to its formal slots (`deriv[k]` times in slot `k`).
#[derive(Clone, Debug, PartialEq)]
pub struct Apply {
    pub name: Arc<str>,
    pub args: Vec<Expr>,
    pub deriv: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(Number),
    Var(Var),
    Param(Arc<str>),
    Apply(Apply),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, Rational64),
    Func(Func, Expr),
    Atan2(Expr, Expr),
}

/// Immutable, cheaply clonable scalar expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn num(n: Number) -> Expr {
        Expr::wrap(Node::Num(n))
    }

    pub fn zero() -> Expr {
        Expr::num(Number::ZERO)
    }

    pub fn one() -> Expr {
        Expr::num(Number::ONE)
    }

    pub fn i() -> Expr {
        Expr::num(Number::I)
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Number::int(n))
    }

    pub fn rat(p: i64, q: i64) -> Expr {
        Expr::num(Number::rational(Rational64::new(p, q)))
    }

    pub fn float(x: f64) -> Expr {
        Expr::num(Number::Float(x, 0.0))
    }

    pub fn complex(re: f64, im: f64) -> Expr {
        Expr::num(Number::Float(re, im))
    }

    pub fn var(v: Var) -> Expr {
        Expr::wrap(Node::Var(v))
    }

    pub fn t() -> Expr {
        Expr::var(Var::T)
    }

    /// Spatial coordinate `x_a`, `a` in 1..=3.
    pub fn x(a: usize) -> Expr {
        Expr::var(Var::x(a))
    }

    pub fn param(name: &str) -> Expr {
        Expr::wrap(Node::Param(Arc::from(name)))
    }

    pub fn apply(name: &str, args: Vec<Expr>) -> Expr {
        let n = args.len();
        Expr::wrap(Node::Apply(Apply { name: Arc::from(name), args, deriv: vec![0; n] }))
    }

    /// Partial derivative of a placeholder by its formal slots.
    pub fn apply_deriv(name: &str, args: Vec<Expr>, deriv: Vec<u8>) -> Expr {
        Expr::wrap(Node::Apply(Apply { name: Arc::from(name), args, deriv }))
    }

    pub(crate) fn apply_raw(a: Apply) -> Expr {
        Expr::wrap(Node::Apply(a))
    }

    /// `r = sqrt(x1² + x2² + x3²)`.
    pub fn r() -> Expr {
        Expr::sqrt(Expr::sum(vec![Expr::x(1).powi(2), Expr::x(2).powi(2), Expr::x(3).powi(2)]))
    }

    /// Cylindrical radius `sqrt(x1² + x2²)`.
    pub fn rt() -> Expr {
        Expr::sqrt(Expr::sum(vec![Expr::x(1).powi(2), Expr::x(2).powi(2)]))
    }

    /// Azimuth `atan2(x2, x1)`.
    pub fn phi() -> Expr {
        Expr::atan2(Expr::x(2), Expr::x(1))
    }

    /// Polar angle `atan2(rt, x3)`.
    pub fn theta() -> Expr {
        Expr::atan2(Expr::rt(), Expr::x(3))
    }

    /// `x1² + x2² + x3²`.
    pub fn r2() -> Expr {
        Expr::sum(vec![Expr::x(1).powi(2), Expr::x(2).powi(2), Expr::x(3).powi(2)])
    }

    pub fn as_number(&self) -> Option<&Number> {
        match self.node() {
            Node::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_one())
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut c = Number::ZERO;
        for e in terms {
            match e.node() {
                Node::Num(n) => c = c.add(n),
                Node::Sum(inner) => {
                    for f in inner {
                        match f.node() {
                            Node::Num(n) => c = c.add(n),
                            _ => flat.push(f.clone()),
                        }
                    }
                }
                _ => flat.push(e),
            }
        }
        if !c.is_zero() {
            flat.push(Expr::num(c));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::wrap(Node::Sum(flat)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len());
        let mut c = Number::ONE;
        for e in factors {
            match e.node() {
                Node::Num(n) => c = c.mul(n),
                Node::Product(inner) => {
                    for f in inner {
                        match f.node() {
                            Node::Num(n) => c = c.mul(n),
                            _ => flat.push(f.clone()),
                        }
                    }
                }
                _ => flat.push(e),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if flat.is_empty() {
            return Expr::num(c);
        }
        if !c.is_one() {
            flat.insert(0, Expr::num(c));
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        Expr::wrap(Node::Product(flat))
    }

    pub fn add(&self, o: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), o.clone()])
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), o.neg()])
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        Expr::product(vec![self.clone(), o.clone()])
    }

    pub fn neg(&self) -> Expr {
        self.scale(&Number::int(-1))
    }

    pub fn scale(&self, c: &Number) -> Expr {
        Expr::product(vec![Expr::num(*c), self.clone()])
    }

    pub fn div(&self, o: &Expr) -> Expr {
        self.mul(&o.powi(-1))
    }

    pub fn powi(&self, k: i64) -> Expr {
        self.pow(Rational64::from_integer(k))
    }

    pub fn pow(&self, q: Rational64) -> Expr {
        if q.is_zero() {
            return Expr::one();
        }
        if q.is_one() {
            return self.clone();
        }
        match self.node() {
            Node::Num(n) if q.is_integer() => {
                if let Some(v) = n.powi(*q.numer()) {
                    return Expr::num(v);
                }
            }
            Node::Pow(b, p) if q.is_integer() => {
                return b.pow(p * q);
            }
            Node::Func(Func::Sqrt, b) if q.is_integer() && (*q.numer()).rem_euclid(2) == 0 => {
                return b.pow(q / 2);
            }
            _ => {}
        }
        Expr::wrap(Node::Pow(self.clone(), q))
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        if let Some(n) = a.as_number() {
            if n.is_zero() {
                match f {
                    Func::Sin | Func::Sinh | Func::Atan | Func::Sqrt => return Expr::zero(),
                    Func::Cos | Func::Cosh | Func::Exp => return Expr::one(),
                    Func::Ln => {}
                }
            }
            if n.is_one() && matches!(f, Func::Ln) {
                return Expr::zero();
            }
            if n.is_one() && matches!(f, Func::Sqrt) {
                return Expr::one();
            }
        }
        Expr::wrap(Node::Func(f, a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::func(Func::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::func(Func::Cos, a)
    }

    pub fn sinh(a: Expr) -> Expr {
        Expr::func(Func::Sinh, a)
    }

    pub fn cosh(a: Expr) -> Expr {
        Expr::func(Func::Cosh, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::func(Func::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::func(Func::Ln, a)
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::func(Func::Sqrt, a)
    }

    pub fn atan(a: Expr) -> Expr {
        Expr::func(Func::Atan, a)
    }

    pub fn atan2(y: Expr, x: Expr) -> Expr {
        Expr::wrap(Node::Atan2(y, x))
    }

    /// Whether the expression mentions variable `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        match self.node() {
            Node::Num(_) | Node::Param(_) => false,
            Node::Var(w) => *w == v,
            Node::Apply(a) => a.args.iter().any(|e| e.depends_on(v)),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().any(|e| e.depends_on(v)),
            Node::Pow(b, _) | Node::Func(_, b) => b.depends_on(v),
            Node::Atan2(y, x) => y.depends_on(v) || x.depends_on(v),
        }
    }

    /// Whether any variable occurs.
    pub fn is_constant(&self) -> bool {
        Var::ALL.iter().all(|&v| !self.depends_on(v))
    }

    /// Names of parameters referenced anywhere in the tree.
    pub fn params(&self, out: &mut Vec<Arc<str>>) {
        match self.node() {
            Node::Param(p) => {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            Node::Num(_) | Node::Var(_) => {}
            Node::Apply(a) => a.args.iter().for_each(|e| e.params(out)),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|e| e.params(out)),
            Node::Pow(b, _) | Node::Func(_, b) => b.params(out),
            Node::Atan2(y, x) => {
                y.params(out);
                x.params(out);
            }
        }
    }

    /// Names of placeholders applied anywhere in the tree.
    pub fn placeholders(&self, out: &mut Vec<Arc<str>>) {
        match self.node() {
            Node::Apply(a) => {
                if !out.contains(&a.name) {
                    out.push(a.name.clone());
                }
                a.args.iter().for_each(|e| e.placeholders(out));
            }
            Node::Num(_) | Node::Var(_) | Node::Param(_) => {}
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|e| e.placeholders(out)),
            Node::Pow(b, _) | Node::Func(_, b) => b.placeholders(out),
            Node::Atan2(y, x) => {
                y.placeholders(out);
                x.placeholders(out);
            }
        }
    }

    /// Capture-free replacement of variables by expressions.
    pub fn substitute(&self, bind: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        self.map_leaves(&|e| match e.node() {
            Node::Var(v) => bind(*v),
            _ => None,
        })
    }

    /// Replace parameter references by expressions.
    pub fn substitute_params(&self, bind: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        self.map_leaves(&|e| match e.node() {
            Node::Param(p) => bind(p),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(_) | Node::Param(_) => f(self).unwrap_or_else(|| self.clone()),
            Node::Apply(a) => Expr::apply_raw(Apply {
                name: a.name.clone(),
                args: a.args.iter().map(|e| e.map_leaves(f)).collect(),
                deriv: a.deriv.clone(),
            }),
            Node::Sum(xs) => Expr::sum(xs.iter().map(|e| e.map_leaves(f)).collect()),
            Node::Product(xs) => Expr::product(xs.iter().map(|e| e.map_leaves(f)).collect()),
            Node::Pow(b, q) => b.map_leaves(f).pow(*q),
            Node::Func(g, b) => Expr::func(*g, b.map_leaves(f)),
            Node::Atan2(y, x) => Expr::atan2(y.map_leaves(f), x.map_leaves(f)),
        }
    }

    /// Split into numeric coefficient and remaining factor.
    pub(crate) fn split_coeff(&self) -> (Number, Expr) {
        match self.node() {
            Node::Num(n) => (*n, Expr::one()),
            Node::Product(fs) => match fs[0].node() {
                Node::Num(n) => (*n, Expr::product(fs[1..].to_vec())),
                _ => (Number::ONE, self.clone()),
            },
            _ => (Number::ONE, self.clone()),
        }
    }

    /// Number of nodes in the tree (shared subtrees counted repeatedly).
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Num(_) | Node::Var(_) | Node::Param(_) => 0,
            Node::Apply(a) => a.args.iter().map(Expr::size).sum(),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().map(Expr::size).sum(),
            Node::Pow(b, _) | Node::Func(_, b) => b.size(),
            Node::Atan2(y, x) => y.size() + x.size(),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::sum(vec![self, o])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::sub(&self, &o)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::product(vec![self, o])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        Expr::div(&self, &o)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        Expr::float(x)
    }
}

fn needs_parens_in_product(e: &Expr) -> bool {
    match e.node() {
        Node::Sum(_) => true,
        Node::Num(n) => {
            let s = n.to_string();
            s.starts_with('-') || s.contains('/')
        }
        _ => false,
    }
}

fn fmt_factor(e: &Expr) -> String {
    if needs_parens_in_product(e) {
        format!("({e})")
    } else {
        e.to_string()
    }
}

fn fmt_q(q: &Rational64) -> String {
    if q.is_integer() && !q.is_negative() {
        q.numer().to_string()
    } else if q.is_integer() {
        format!("({})", q.numer())
    } else {
        format!("({}/{})", q.numer(), q.denom())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(n) => write!(f, "{n}"),
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Param(p) => write!(f, "{p}"),
            Node::Apply(a) => {
                if a.deriv.iter().any(|&d| d > 0) {
                    let ds: Vec<String> = a.deriv.iter().map(u8::to_string).collect();
                    write!(f, "D[{}]", ds.join(","))?;
                }
                let args: Vec<String> = a.args.iter().map(Expr::to_string).collect();
                write!(f, "{}({})", a.name, args.join(", "))
            }
            Node::Sum(xs) => {
                for (k, e) in xs.iter().enumerate() {
                    let (c, rest) = e.split_coeff();
                    let neg = c.is_negative_real();
                    if k == 0 {
                        write!(f, "{e}")?;
                    } else if neg {
                        let pos = Expr::product(vec![Expr::num(c.neg()), rest]);
                        write!(f, " - {}", fmt_factor(&pos))?;
                    } else {
                        write!(f, " + {e}")?;
                    }
                }
                Ok(())
            }
            Node::Product(xs) => {
                if let Node::Num(n) = xs[0].node() {
                    if *n == Number::int(-1) {
                        let rest = Expr::product(xs[1..].to_vec());
                        return write!(f, "-{}", fmt_factor(&rest));
                    }
                }
                let parts: Vec<String> = xs.iter().map(fmt_factor).collect();
                write!(f, "{}", parts.join("*"))
            }
            Node::Pow(b, q) => {
                let base = match b.node() {
                    Node::Var(_) | Node::Param(_) | Node::Func(..) | Node::Apply(_) | Node::Atan2(..) => b.to_string(),
                    _ => format!("({b})"),
                };
                write!(f, "{base}^{}", fmt_q(q))
            }
            Node::Func(g, b) => write!(f, "{}({b})", g.name()),
            Node::Atan2(y, x) => write!(f, "atan2({y}, {x})"),
        }
    }
}
