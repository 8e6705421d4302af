use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("invalid automaton: {}", .0.join("; "))]
    InvalidQfa(Vec<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("word is not reduced: letters {0} and {1} cancel")]
    NonReducedWord(usize, usize),
    #[error("the empty word is not allowed here")]
    EmptyWord,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
