use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("Hankel depth {depth} exceeds trajectory length {length}")]
    DepthExceedsLength { depth: usize, length: usize },

    #[error("window [{t0}, {t1}] leaves the time axis [1, {length}]")]
    OutOfRange { t0: usize, t1: usize, length: usize },

    #[error("shift {shift} is not smaller than trajectory length {length}")]
    ShiftTooLarge { shift: usize, length: usize },

    #[error("matrix contains a non-finite entry")]
    NonFiniteEntry,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("expected an input sequence (all {width} variables inputs), got {inputs} inputs")]
    NotAnInputSequence { width: usize, inputs: usize },

    #[error("plant evaluation produced a non-finite value")]
    NonFiniteEvaluation,

    #[error("finite-difference step {step:e} is below the admissible minimum {min:e}")]
    StepTooSmall { step: f64, min: f64 },

    #[error("data-driven representation has no columns")]
    EmptyRepresentation,

    #[error("constraints cannot be met: residual {residual:e} exceeds {bound:e}")]
    Infeasible { residual: f64, bound: f64 },

    #[error("continuation is not unique: outputs vary by {spread:e} over the solution set")]
    AmbiguousContinuation { spread: f64 },

    #[error("insufficient excitation: rank {rank} short of target {target}")]
    ExcitationDeficient { rank: usize, target: usize },

    #[error("rank increments have not settled by depth {depth}: {reason}")]
    NotConverged { depth: usize, reason: String },

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("polynomial matrix is zero")]
    ZeroMatrix,

    #[error("window of length {window} is shorter than the required {required}")]
    WindowTooShort { window: usize, required: usize },

    #[error("affine kernel representation is inconsistent (empty behavior)")]
    InconsistentRepresentation,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
