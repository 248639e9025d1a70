use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable `{0}` appears with two different levelsets")]
    DomainMismatch(String),

    #[error("variable set {vars:?} is not contained in domain {domain:?}")]
    NotInDomain { vars: Vec<String>, domain: Vec<String> },

    #[error("division of a nonzero cell by zero")]
    UndefinedDivision,

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("level `{level}` is not in the levelset of `{var}`")]
    UnknownLevel { var: String, level: String },

    #[error("invalid variable: {0}")]
    InvalidVariable(String),

    #[error("query error: {0}")]
    Query(String),

    #[error("propagation phase error: {0}")]
    Phase(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
