use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("taylor data truncated at degree {available}, functional needs degree {needed}")]
    InsufficientTruncation { needed: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tail bound is not contractive: rho * R = {0} <= 1")]
    NonContractive(f64),

    #[error("empty grid")]
    EmptyGrid,

    #[error("weighted space model is empty: every basis element has infinite norm")]
    EmptyModel,

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("unsupported weight: {0}")]
    UnsupportedWeight(String),

    #[error("kernel vanishes; no extremal function exists")]
    ZeroKernel,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parameter lies outside the regular set U (|det C(w)| = {det:.3e})")]
    OutsideRegularSet { det: f64 },

    #[error("too few refinement levels: {found} (need at least {needed})")]
    TooFewLevels { found: usize, needed: usize },

    #[error("inconsistent constraints: {0}")]
    InconsistentConstraints(String),

    #[error("fiber datum has zero norm")]
    ZeroFiberNorm,

    #[error("Lambda_N grid sets are not nested between N = {0} and N = {1}")]
    NonNesting(usize, usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
