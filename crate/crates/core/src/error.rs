use alloc::string::String;

/// Errors produced by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed mutation token `{0}`")]
    MalformedToken(String),
    #[error("unknown amino acid `{0}`")]
    UnknownAminoAcid(char),
    #[error("mutation {token} does not match reference residue {expected} at position {position}")]
    ReferenceMismatch {
        token: String,
        position: usize,
        expected: char,
    },
    #[error("more than one mutation at position {0}")]
    DuplicatePosition(usize),
    #[error("position {position} outside reference of length {length}")]
    PositionOutOfRange { position: usize, length: usize },
    #[error("mutation {0} does not change the residue")]
    SilentMutation(String),
    #[error("duplicate variant `{0}`")]
    DuplicateVariant(String),
    #[error("dataset needs at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("log-probability row {row} is not normalized (log-sum-exp {lse})")]
    NotNormalized { row: usize, lse: f64 },
    #[error("positive log-probability {value} at row {row}")]
    PositiveLogProb { row: usize, value: f64 },
    #[error("no embedding for variant `{0}`")]
    MissingEmbedding(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("all labels are tied; no ranking pairs")]
    DegeneratePairs,
    #[error("singular constant-liar update: effective variance {0}")]
    SingularUpdate(f64),
    #[error("zero rank variance")]
    ZeroVariance,
    #[error("all differences are zero")]
    AllZero,
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("candidate pool exhausted")]
    PoolExhausted,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
