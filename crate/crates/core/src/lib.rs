//! Mahler-type functional equations
//!
//! ```text
//! a(z) f(z) = A(z) f(p(z)) + B(z)
//! ```
//!
//! with exact rational data. The crate solves such systems as formal power
//! series, evaluates their solutions at points of an attracting orbit of `p`
//! with certified ball enclosures, decides the algebraic-independence
//! criterion for diagonal systems `χ_i(z) = χ_i(p(z)) + q_i(z)`, evaluates
//! the transcendence-degree and measure bounds that follow, and probes the
//! resulting numbers for small integer polynomial relations with LLL.

pub mod algebra;
pub mod bounds;
mod error;
pub mod evaluator;
pub mod independence;
pub mod orbit;
pub mod probe;
pub mod system;

pub use algebra::{
    parse_rational, Ball, ComplexBall, Dyadic, Polynomial, PowerSeries, Rational, RationalFunction, Round,
};
pub use error::{Error, Result};
