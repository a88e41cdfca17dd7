use alloc::string::String;
use num_bigint::BigUint;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("path budget exceeded: {count} paths requested, budget is {budget}")]
    BudgetExceeded { count: BigUint, budget: u64 },
    #[error("support too large for the subset oracle: {size} atoms (limit {limit})")]
    SupportTooLarge { size: usize, limit: usize },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
