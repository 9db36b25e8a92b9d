use thiserror::Error;

use crate::litmus::ParseError;
use crate::model::Model;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{count} memory instances exceed the enumeration bound of {bound}")]
    EnumerationBound { count: usize, bound: usize },

    #[error("exploration exceeded the state budget of {budget} states")]
    StateBudget { budget: usize },

    #[error("model {0} has no operational engine")]
    UnsupportedModel(Model),

    #[error("cannot bind {0} address labels")]
    AddressSpace(usize),
}

impl Error {
    /// Whether the error is a resource limit rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::EnumerationBound { .. } | Error::StateBudget { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
