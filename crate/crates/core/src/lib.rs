//! Backward-orbit invariants of rational maps on the Riemann sphere.
//!
//! The numerical core is generic over [`Scalar`] (`f32`, `f64`); exact
//! integer and rational polynomials are used for the quadratic family.

pub mod compare;
pub mod config;
pub mod error;
pub mod expr;
pub mod family;
pub mod kms;
pub mod orbit;
pub mod poly;
pub mod ratmap;
pub mod scalar;
pub mod sphere;

pub use config::NumericConfig;
pub use error::{Error, Result};
pub use expr::{format_map, parse_map};
pub use kms::{FiniteMeasure, KmsParams};
pub use orbit::BSequence;
pub use poly::Polynomial;
pub use ratmap::RationalMap;
pub use scalar::{Precision, Scalar};
pub use sphere::SpherePoint;

pub use num_complex::{Complex, Complex64};

pub type SpherePoint64 = SpherePoint<f64>;
pub type SpherePoint32 = SpherePoint<f32>;
pub type Polynomial64 = Polynomial<Complex64>;
pub type RationalMap64 = RationalMap<f64>;
pub type RationalMap32 = RationalMap<f32>;
pub type NumericConfig64 = NumericConfig<f64>;
pub type IntPolynomial = Polynomial<num_bigint::BigInt>;
pub type RatPolynomial = Polynomial<num_rational::BigRational>;
pub type FiniteMeasure64 = FiniteMeasure<f64>;
pub type KmsParams64 = KmsParams<f64>;
