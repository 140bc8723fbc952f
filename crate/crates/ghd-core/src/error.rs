use thiserror::Error;

#[derive(Debug, Error)]
pub enum GhdError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("design failed verification: {0}")]
    InvalidDesign(String),
    #[error("not a prime power: {0}")]
    NotPrimePower(u64),
    #[error("too many squares requested: {requested} > {available}")]
    TooMany { requested: usize, available: usize },
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("missing ingredient: {0}")]
    MissingIngredient(String),
    #[error("hole misaligned: {0}")]
    HoleMisaligned(String),
    #[error("symbol clash: {0}")]
    SymbolClash(String),
    #[error("expansion conflict: {0}")]
    ExpansionConflict(String),
    #[error("resolution classes not usable: {0}")]
    ClassMisalignment(String),
    #[error("cannot normalize: {0}")]
    NotNormalizable(String),
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GhdError>;
