//! Exact complex-rational constants with a floating fallback.

use std::fmt;

use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

/// Numeric constant carried by an expression node.
///
/// Literals and folded constants stay exact (`re + i·im` with rational parts)
/// until an operation would overflow `i64`, at which point the value decays to
/// a pair of `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Number {
    Exact(Rational64, Rational64),
    Float(f64, f64),
}

impl Number {
    pub const ZERO: Number = Number::Exact(Rational64::new_raw(0, 1), Rational64::new_raw(0, 1));
    pub const ONE: Number = Number::Exact(Rational64::new_raw(1, 1), Rational64::new_raw(0, 1));
    pub const I: Number = Number::Exact(Rational64::new_raw(0, 1), Rational64::new_raw(1, 1));

    pub fn int(n: i64) -> Self {
        Number::Exact(Rational64::from_integer(n), Rational64::zero())
    }

    pub fn rational(q: Rational64) -> Self {
        Number::Exact(q, Rational64::zero())
    }

    pub fn float(re: f64, im: f64) -> Self {
        Number::Float(re, im)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(a, b) => a.is_zero() && b.is_zero(),
            Number::Float(a, b) => *a == 0.0 && *b == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Exact(a, b) => a.is_one() && b.is_zero(),
            Number::Float(a, b) => *a == 1.0 && *b == 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(..))
    }

    /// Real rational value, when the constant is exact and real.
    pub fn as_rational(&self) -> Option<Rational64> {
        match self {
            Number::Exact(a, b) if b.is_zero() => Some(*a),
            _ => None,
        }
    }

    pub fn to_complex(&self) -> Complex<f64> {
        match self {
            Number::Exact(a, b) => Complex::new(ratio_f64(a), ratio_f64(b)),
            Number::Float(a, b) => Complex::new(*a, *b),
        }
    }

    pub fn from_complex(z: Complex<f64>) -> Self {
        Number::Float(z.re, z.im)
    }

    pub fn add(&self, o: &Number) -> Number {
        if let (Number::Exact(a, b), Number::Exact(c, d)) = (self, o) {
            if let (Some(re), Some(im)) = (a.checked_add(c), b.checked_add(d)) {
                return Number::Exact(re, im);
            }
        }
        Number::from_complex(self.to_complex() + o.to_complex())
    }

    pub fn mul(&self, o: &Number) -> Number {
        if let (Number::Exact(a, b), Number::Exact(c, d)) = (self, o) {
            let re = a.checked_mul(c).zip(b.checked_mul(d)).and_then(|(x, y)| x.checked_sub(&y));
            let im = a.checked_mul(d).zip(b.checked_mul(c)).and_then(|(x, y)| x.checked_add(&y));
            if let (Some(re), Some(im)) = (re, im) {
                return Number::Exact(re, im);
            }
        }
        Number::from_complex(self.to_complex() * o.to_complex())
    }

    pub fn neg(&self) -> Number {
        match self {
            Number::Exact(a, b) => Number::Exact(-a, -b),
            Number::Float(a, b) => Number::Float(-a, -b),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Number> {
        if self.is_zero() {
            return None;
        }
        if let Number::Exact(a, b) = self {
            let den = a.checked_mul(a).zip(b.checked_mul(b)).and_then(|(x, y)| x.checked_add(&y));
            if let Some(den) = den {
                return Some(Number::Exact(a / den, -b / den));
            }
        }
        Some(Number::from_complex(self.to_complex().inv()))
    }

    /// Integer power, exact when possible.
    pub fn powi(&self, k: i64) -> Option<Number> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut acc = Number::ONE;
        for _ in 0..k {
            acc = acc.mul(self);
        }
        Some(acc)
    }

    /// True when the constant is real and strictly negative.
    pub fn is_negative_real(&self) -> bool {
        match self {
            Number::Exact(a, b) => b.is_zero() && a.is_negative(),
            Number::Float(a, b) => *b == 0.0 && *a < 0.0,
        }
    }
}

fn ratio_f64(q: &Rational64) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

fn fmt_ratio(q: &Rational64) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn fmt_float(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else if (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(a, b) => {
                if b.is_zero() {
                    write!(f, "{}", fmt_ratio(a))
                } else if a.is_zero() {
                    if b.is_one() {
                        write!(f, "i")
                    } else {
                        write!(f, "{}*i", fmt_ratio(b))
                    }
                } else {
                    write!(f, "({} + {}*i)", fmt_ratio(a), fmt_ratio(b))
                }
            }
            Number::Float(a, b) => {
                if *b == 0.0 {
                    write!(f, "{}", fmt_float(*a))
                } else if *a == 0.0 {
                    write!(f, "{}*i", fmt_float(*b))
                } else {
                    write!(f, "({} + {}*i)", fmt_float(*a), fmt_float(*b))
                }
            }
        }
    }
}

/// Parses a decimal literal (`12`, `0.25`, `1.5e-3`) into an exact rational
/// when it fits in `i64`, otherwise a float.
pub fn parse_decimal(text: &str) -> Option<Number> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(k) => (&text[..k], text[k + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(k) => (&mantissa[..k], &mantissa[k + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let exact = (|| {
        let digits = format!("{int_part}{frac_part}");
        let numer: i64 = digits.parse().ok()?;
        let scale = exp - frac_part.len() as i32;
        let ten = Rational64::from_integer(10);
        let mut q = Rational64::from_integer(numer);
        for _ in 0..scale.unsigned_abs() {
            q = if scale > 0 { q.checked_mul(&ten)? } else { q.checked_div_r(&ten)? };
        }
        Some(q)
    })();
    match exact {
        Some(q) => Some(Number::rational(q)),
        None => text.parse::<f64>().ok().map(|x| Number::Float(x, 0.0)),
    }
}

trait CheckedDivR: Sized {
    fn checked_div_r(&self, o: &Self) -> Option<Self>;
}

impl CheckedDivR for Rational64 {
    fn checked_div_r(&self, o: &Self) -> Option<Self> {
        num_traits::CheckedDiv::checked_div(self, o)
    }
}
