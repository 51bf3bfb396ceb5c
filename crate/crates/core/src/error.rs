use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph needs at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("state `{0}` is listed more than once")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("state `{0}` is missing")]
    MissingState(String),
    #[error("value for state `{0}` is not a number")]
    NonNumeric(String),
    #[error("arc `{from}` -> `{to}` appears more than once")]
    DuplicateArc { from: String, to: String },
    #[error("self-loop at state `{0}`")]
    SelfLoop(String),
    #[error("arc `{from}` -> `{to}` has nonpositive or non-finite rate {rate}")]
    NonpositiveRate { from: String, to: String, rate: f64 },
    #[error("arc `{from}` -> `{to}` has invalid parameters (prefactor {prefactor}, barrier {barrier})")]
    InvalidArcParameters {
        from: String,
        to: String,
        prefactor: f64,
        barrier: f64,
    },
    #[error("graph is not strongly connected: no directed path from `{from}` to `{to}`")]
    NotStronglyConnected { from: String, to: String },
    #[error("graph file mixes `rate` arcs with `prefactor`/`barrier` arcs")]
    MixedArcForms,
    #[error("arc `{from}` -> `{to}` has neither `rate` nor `prefactor`+`barrier`")]
    MalformedArc { from: String, to: String },
    #[error("enumeration requested on {n} states, cap is {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("two-tree total depends on the base state (relative residual {residual:e})")]
    XDependenceDetected { residual: f64 },
    #[error("generator has numerical nullity {nullity} (expected 1)")]
    SingularBeyondNullity { nullity: usize },
    #[error("interior set H is empty")]
    EmptyInterior,
    #[error("stopped generator restricted to H is singular")]
    SingularStoppedGenerator,
    #[error("source is not centered: stationary mean {mean:e}")]
    NotCentered { mean: f64 },
    #[error("h = f - LE is {value:e} at state `{state}` outside D")]
    DecompositionInvalid { state: String, value: f64 },
    #[error("horizon {horizon} is shorter than 5/gap = {required}")]
    HorizonTooShort { horizon: f64, required: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
