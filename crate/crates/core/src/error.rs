use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrwError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("vertex {0} is not part of the model")]
    UnknownVertex(u64),

    #[error("vertex index {index} out of range for {len} vertices")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("projection: {0}")]
    Projection(String),

    #[error("subset must contain at least one vertex")]
    EmptySubset,

    #[error("map is not injective: vertices {0} and {1} share an image")]
    NotInjective(usize, usize),

    #[error("series diverges at lambda = {lambda} (partial sum {partial} after {terms} terms)")]
    Divergent { lambda: f64, partial: f64, terms: usize },

    #[error("atom expansion would exceed {limit} atoms")]
    TooManyAtoms { limit: usize },

    #[error("could not bracket {what} on the supplied grid")]
    Bracket { what: String },

    #[error("no rectangle found inside the supercritical region: {0}")]
    NoRectangle(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BrwError>;

pub(crate) fn param_err(name: &str, reason: impl Into<String>) -> BrwError {
    BrwError::InvalidParam { name: name.to_string(), reason: reason.into() }
}
