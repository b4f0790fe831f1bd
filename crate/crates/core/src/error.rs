use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid format: {0}")]
    InvalidFormat(String),

    #[error("unknown format `{name}`; valid names: {valid}")]
    UnknownFormat { name: String, valid: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("non-finite value {0} has no fixed-point or integer encoding")]
    NonFinite(f64),

    #[error("{function}: input {value} is outside the function's domain")]
    Domain { function: &'static str, value: f64 },

    #[error("{function}: division by zero")]
    DivisionByZero { function: &'static str },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("`{name}` is not a {expected} function")]
    WrongArity { name: String, expected: &'static str },

    #[error("{function}: empty input")]
    EmptyInput { function: &'static str },

    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl Error {
    /// True for errors raised by the numbers themselves rather than by
    /// how the caller configured things.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::Domain { .. }
                | Error::DivisionByZero { .. }
                | Error::EmptyInput { .. }
        )
    }
}
