//! Ergodic secrecy rates of block-fading broadcast wiretap channels with
//! finite-rate CSI feedback.
//!
//! The crate evaluates and optimizes common-message and independent-message
//! secrecy-rate bounds, traces common/confidential (BCCM) rate regions under
//! error-free and erasure feedback, and cross-checks every analytic
//! expectation against a seeded Monte Carlo simulation.
//!
//! All rates are in bits per channel use; all powers are linear.

pub mod bccm;
pub mod channel;
pub mod mc;
pub mod optimizer;
pub mod quadrature;
pub mod quantizer;
pub mod rates;
#[cfg(test)]
mod testutil;

pub use channel::{ColluderModel, GainDistribution, MaxOrderStatistic};
pub use quadrature::QuadratureSpec;
pub use quantizer::{FeedbackTopology, QuantizerPolicy, Scenario};
pub use rates::BoundResult;

/// Errors reported by evaluators and optimizers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid interval: lo = {lo} exceeds hi = {hi}")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("conditioning event has zero probability")]
    DegenerateConditioning,
    #[error("average power {used} exceeds the budget {budget}")]
    ConstraintViolation { used: f64, budget: f64 },
    #[error("R1 target {target} exceeds the maximum achievable R1 {max_r1}")]
    InfeasibleTarget { target: f64, max_r1: f64 },
    #[error("optimization failed: {0}")]
    OptimizationFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
