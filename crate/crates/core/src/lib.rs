//! Prime geodesics on the modular surface counted by trace in arithmetic
//! progressions, with the class number and L-series machinery behind them.

pub mod arith;
pub mod cli;
pub mod experiments;
pub mod geodesics;
pub mod quadratic;
pub mod scalar;
pub mod zagier;

/// Floating-point type used by the counting functions.
pub type Real = f64;

/// Exact field for predicted densities.
pub type Rational = num_rational::BigRational;

/// Density prediction with an exact rational density.
pub type Density = geodesics::DensityPrediction<Rational>;
