use thiserror::Error;

/// Errors raised by the core routines.
///
/// Numeric failures (singular factorizations, divergence) are kept apart from
/// input validation so callers can map them to different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PnnError {
    #[error("vector norm is below the zero tolerance")]
    ZeroVector,
    #[error("lines {0} and {1} are collinear within tolerance")]
    DuplicateLine(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("could not draw {0} collision-free lines")]
    TooManyCollisions(usize),
    #[error("weights infeasible: neuron {neuron} is {deviation:e} off its line")]
    InfeasibleWeights { neuron: usize, deviation: f64 },
    #[error("invalid neuron-to-line map: {0}")]
    InvalidMap(String),
    #[error("argument {0} outside [-1, 1]")]
    DomainError(f64),
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("line configurations differ")]
    ConfigMismatch,
    #[error("zero column {0} where a direction is required")]
    ZeroColumn(usize),
    #[error("kernel matrix is singular or not positive definite")]
    SingularKernel,
    #[error("mass vector has a negative entry")]
    NegativeMass,
    #[error("structured matrix is singular")]
    SingularStructure,
    #[error("projector is singular")]
    SingularProjector,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("coverage not reached after {0} probes")]
    CoverageNotReached(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

impl PnnError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            PnnError::SingularKernel
                | PnnError::SingularProjector
                | PnnError::SingularStructure
                | PnnError::Diverged(_)
                | PnnError::CoverageNotReached(_)
                | PnnError::TooManyCollisions(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, PnnError>;
