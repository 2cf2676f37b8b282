//! Non-Diophantine arithmetic and non-Newtonian calculus generated by a
//! bijection `f`, with a local hidden-variable model of two-electron
//! singlet-state probabilities built on top of it.
//!
//! * [`generator`]: the bijection `f` and its inverse.
//! * [`arithmetic`]: ⊕ ⊖ ⊙ ⊘ transported through `f`.
//! * [`calculus`]: conjugation, derivative, integral and a Riemann-sum oracle.
//! * [`bell`]: density, detector windows, coincidence probabilities, CHSH and
//!   Monte-Carlo frequencies.

pub mod arithmetic;
pub mod bell;
pub mod calculus;
pub mod error;
pub mod generator;

pub use arithmetic::ArithmeticContext;
pub use bell::{
    ChshResult, ChshSettings, DetectorWindow, JointProbabilities, McConfig, McEstimate, Outcome,
    Party, Sign,
};
pub use calculus::{QuadratureConfig, QuadratureMethod};
pub use error::{Error, Result};
pub use generator::Generator;
