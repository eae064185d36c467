//! Symbolic-numeric verification, discovery and classification of Lie
//! symmetries of Schrödinger and Schrödinger–Pauli operators with 2×2 matrix
//! potentials.

pub mod expr;
pub mod pauli;
pub mod diffop;
pub mod detsys;
pub mod linalg;
pub mod liealg;
pub mod finder;
pub mod equiv;
pub mod corpus;
pub mod scalar;
pub mod cli;

pub use scalar::{Cx, Scalar};

/// Double-precision instances of the generic numeric types.
pub type C64 = Cx<f64>;
pub type Pauli64 = pauli::Pauli<f64>;
pub type PointSample64 = expr::PointSample<f64>;
pub type Instantiation64 = expr::Instantiation<f64>;
pub type Projection64 = diffop::Projection<f64>;
pub type StructureConstants64 = liealg::StructureConstants<f64>;
