use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Radicand of the arcsin branch fell outside `[0, 1]` after piece
    /// selection. Indicates a bug, not bad input.
    #[error("piece selection inconsistent at x = {x}: radicand {radicand} outside [0, 1]")]
    PieceSelection { x: f64, radicand: f64 },

    #[error("non-finite intermediate in {0}")]
    Overflow(&'static str),

    #[error("deformed division by zero: f(y) = {0:e}")]
    DivisionByZero(f64),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature budget of {panels} panels exhausted (estimate {estimate}, error bound {error_bound:e})")]
    QuadratureBudget {
        estimate: f64,
        error_bound: f64,
        panels: usize,
    },

    #[error("non-finite integrand value at r = {0}")]
    NonFiniteIntegrand(f64),

    #[error("differentiation failed: {0}")]
    Differentiation(String),
}
