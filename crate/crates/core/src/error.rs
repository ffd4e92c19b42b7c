use thiserror::Error;

use crate::game::BuyerStrategy;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two buyer strategies share the same discounted quantity, so the
    /// quantity order of strategies is not unique.
    #[error("discount is not regular: strategies {first} and {second} both have quantity {quantity}")]
    RegularityViolation { first: BuyerStrategy, second: BuyerStrategy, quantity: f64 },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A point of the ordered cone mapped to a tree with a negative price.
    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A consistency check that holds for every valid input failed.
    #[error("internal error: {0}")]
    Internal(String),

    /// Schema error while loading a document; `pointer` is an RFC 6901 JSON pointer.
    #[error("parse error at '{pointer}': {message}")]
    Parse { pointer: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
