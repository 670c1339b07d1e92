//! Exact and certified arithmetic: rationals, dyadic floats, balls,
//! dense polynomials, rational functions and truncated power series.

mod ball;
mod dyadic;
pub mod linalg;
mod poly;
pub(crate) mod rational;
mod ratfunc;
mod series;

pub use ball::{Ball, ComplexBall};
pub use dyadic::{Dyadic, Round};
pub use poly::Polynomial;
pub use rational::{parse_rational, rational_bits, Rational};
pub use ratfunc::RationalFunction;
pub use series::PowerSeries;
