use thiserror::Error;

use crate::dsl::{EvalError, ParseError};

/// Errors raised by the geometry, solver and domain routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in input")]
    NonFinite,

    /// A certified bound was violated; this points at an implementation bug.
    #[error("internal consistency violated: {0}")]
    Consistency(String),

    /// `f(a, ·)` does not change sign over the implicit interval.
    #[error("non-degeneracy violated: {0}")]
    Nondegeneracy(String),

    #[error("neighborhood construction failed: radius {radius:e} fell below the underflow limit")]
    NeighborhoodUnderflow { radius: f64 },

    #[error("query point lies outside the solved neighborhood")]
    OutsideNeighborhood,

    #[error("no sign change of f on the implicit interval at t={t}, x={x:?}")]
    NoBracket { t: f64, x: Vec<f64> },

    #[error("chart verification failed: {0}")]
    ChartInvalid(Box<ChartFailure>),

    #[error("atlas build failed at seed s={s}, omega={omega:?}: {source}")]
    AtlasSeed {
        s: f64,
        omega: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Worst offending sample of a failed chart verification.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChartFailure {
    /// `"graph_to_boundary"` or `"boundary_to_graph"`.
    pub direction: &'static str,
    pub s: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    pub tolerance: f64,
}

impl std::fmt::Display for ChartFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} residual {:e} exceeds {:e} at s={}, x={:?}",
            self.direction, self.residual, self.tolerance, self.s, self.x
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
