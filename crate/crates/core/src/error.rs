use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("denominator vanishes at z = 0; the function is not analytic there")]
    NotAnalyticAtZero,
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("denominator enclosure contains zero")]
    DenominatorMayVanish,
    #[error("argument outside the domain of {0}")]
    Domain(&'static str),
    #[error("series composition needs an inner series with zero constant term")]
    InnerSeriesNotVanishing,
    #[error("order of p at zero is {0}; at least 2 is required")]
    OrderTooSmall(usize),
    #[error("system is not solvable: {0}")]
    NotSolvable(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("orbit did not enter the certified basin within {0} iterations")]
    DivergenceNotRuledOut(usize),
    #[error("iterate {0} of the orbit is exactly zero")]
    OrbitHitsZero(usize),
    #[error("cannot separate a value from zero at iterate {0} at the working precision")]
    Inconclusive(usize),
    #[error("requested tolerance unreachable below {0} bits of precision")]
    PrecisionExhausted(u32),
    #[error("hypothesis violated at iterate {0}: a(w) vanishes")]
    HypothesisViolated(usize),
    #[error("p must be a polynomial for this criterion")]
    NotPolynomial,
    #[error("degree of p is {0}; at least 2 is required")]
    DegreeTooSmall(usize),
    #[error("k = {k} is not admissible (threshold {threshold})")]
    NotAdmissible { k: usize, threshold: String },
    #[error("ball radius too large for the lattice precision")]
    PrecisionTooLow,
    #[error("lattice basis rows are linearly dependent")]
    DependentRows,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
