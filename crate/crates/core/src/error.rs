use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("search failed to bracket the target: bound({lo_db} dB) = {lo_pe}, bound({hi_db} dB) = {hi_pe}")]
    Bracket {
        lo_db: f64,
        lo_pe: f64,
        hi_db: f64,
        hi_pe: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BoundError>;
