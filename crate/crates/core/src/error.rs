use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit chain must contain at least one position")]
    EmptyChain,
    #[error("position {index} is not finite ({value})")]
    NonFiniteCoordinate { index: usize, value: f64 },
    #[error("field profile must vanish at the reference point, got f(0) = {value}")]
    ProfileNotZero { value: f64 },
    #[error("length mismatch: expected {expected} qubits, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("{name} = {value} is out of range ({allowed})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: String,
    },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),
    #[error("duplicate bitstring {0} in sparse state")]
    DuplicateBitstring(String),
    #[error("state support of {size} terms exceeds the cap of {cap}")]
    SupportTooLarge { size: usize, cap: usize },
    #[error("{n} qubits exceeds the dense limit of {cap}")]
    DimensionTooLarge { n: usize, cap: usize },
    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NonNormalizedState { norm_sqr: f64 },
    #[error("eigenvalue {value} of the averaged state is below the clipping tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("trajectory ensemble needs at least one trajectory")]
    ZeroTrajectories,
    #[error("estimator response is flat at this operating point (d<M>/dG = {derivative})")]
    FlatResponse { derivative: f64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("operation requires a noise strength gamma' * dE > 0")]
    NoNoise,
    #[error("search space of {size} placements exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
}

pub type Result<T> = std::result::Result<T, Error>;
