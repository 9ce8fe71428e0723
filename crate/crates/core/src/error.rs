use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// `g v` vanished numerically: the direction lies in the kernel of `g`.
    #[error("vector lies in the kernel (|gv| = {norm:e} below tolerance {tol:e})")]
    KernelHit { norm: f64, tol: f64 },

    /// `g · frame` lost rank; `logs` carries the log-diagonal with `-inf`
    /// entries for the collapsed columns.
    #[error("frame collapsed to rank {rank}")]
    DegenerateFrame { rank: usize, logs: Vec<f64> },

    #[error("pruning could not keep the atom count ({atoms}) within the budget {budget}")]
    AtomBudgetExceeded { atoms: usize, budget: usize },

    /// The negative moment is infinite: some atom annihilates `direction`.
    #[error("negative moment is infinite along direction {direction:?}")]
    InfiniteMoment { direction: Vec<f64> },

    #[error("the removed set carries all of the mass")]
    EmptyComplement,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("insufficient signal: {rows} rows above the noise floor, need {needed}")]
    InsufficientSignal { rows: usize, needed: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no decaying regime (fitted rate {sigma})")]
    NoDecay { sigma: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate energy: |a - E| = {gap:e}")]
    DegenerateEnergy { gap: f64 },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
