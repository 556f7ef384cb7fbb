use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rate law: {0}")]
    InvalidLaw(String),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid initial condition: {0}")]
    InvalidInit(String),
    #[error("invalid observation grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state is absorbed (all individuals share one type)")]
    Absorbed,
    #[error("parse error: {0}")]
    Parse(String),
}
