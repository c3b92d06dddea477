//! Exact computations on Segre-Veronese varieties: index combinatorics,
//! osculating spaces at coordinate points, jet and secant ranks, the
//! non-defectivity bound, and hyperplane certificates for limits of
//! osculating spans.
//!
//! Linear algebra is generic over [`field::Field`]. Rank questions use the
//! Montgomery prime field [`PrimeField`]; zero/nonzero claims about specific
//! numbers (determinants, certificate coefficients) use exact rationals.

pub mod bounds;
pub mod certificates;
pub mod decimal;
pub mod error;
pub mod field;
pub mod indices;
pub mod jets;
pub mod linalg;
pub mod osculation;

pub use error::{Error, Result};
pub use field::{Exact, Field, Fp, PrimeField, DEFAULT_PRIME};
pub use indices::{FactorIndex, ProductIndex, Shape};
pub use linalg::Matrix;

/// Arbitrary precision rationals.
pub type Rational = num_rational::BigRational;
/// The rational field used by the certificates.
pub type RationalField = Exact<Rational>;
pub type RationalMatrix = Matrix<Rational>;
pub type FpMatrix = Matrix<Fp>;
