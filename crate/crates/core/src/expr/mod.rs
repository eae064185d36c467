//! Scalar symbolic expressions over `t, x1, x2, x3`, parameters and
//! arbitrary-function placeholders.

mod diff;
mod eval;
mod node;
mod number;
pub mod parse;
pub mod random;
pub mod sample;
mod simplify;

pub use eval::EvalError;
pub use node::{Apply, Expr, Func, Node, Var};
pub use number::Number;
pub use parse::{parse, ParseError};
pub use sample::{Instantiation, ParamError, ParamTable, ParamValue, PointSample, Poly, Sampler, Scope};

#[cfg(test)]
mod tests;
