//! Lattice-based relation search and empirical measure checks.

mod consistency;
mod lll;
mod relation;

pub use consistency::{measure_consistency, ConsistencyReport, ScatterPoint};
pub use lll::lll_reduce;
pub use relation::{find_relation, monomials, IntPolynomial, RelationDiagnostics, RelationQuery, RelationResult};
