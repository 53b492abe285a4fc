use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("filter length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("need at least {needed} filters, got {got}")]
    TooFewFilters { needed: usize, got: usize },

    #[error("record has no non-empty quasi-identifier value")]
    EmptyRecord,

    #[error("missing attribute `{attribute}` on record {record}")]
    MissingAttribute { attribute: String, record: String },

    #[error("malformed filter encoding: {0}")]
    Decode(String),

    #[error("summation session {0} was already used")]
    SessionReused(u64),

    #[error("unknown record reference: party {party}, record {record}")]
    UnknownRecord { party: usize, record: String },

    #[error("attack bookkeeping: target {0} has no consistent global record")]
    NoCandidates(usize),

    #[error("source pool too small: need {needed} distinct entities, pool has {available}")]
    PoolTooSmall { needed: usize, available: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
