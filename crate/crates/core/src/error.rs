use std::fmt;

use thiserror::Error;

use crate::params::Violation;

/// Every invariant broken by a parameter set.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParameterError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ParameterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(
        "singular input: Y + Y_P = {0} (division by zero in the fertilisation or trapping term)"
    )]
    SingularInput(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("no positive equilibrium: offspring number {0} does not exceed 1")]
    NoPositiveEquilibrium(f64),
    #[error("lure strength must be positive for this computation (got {0})")]
    LureRequired(f64),
    #[error("transfer matrix is singular")]
    SingularTransfer,
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("no threshold: {0}")]
    NoThreshold(String),
    #[error("flat or unbracketed lure profile on (0, {upper}): maximum {max} at I = {at}")]
    Unbracketed { upper: f64, max: f64, at: f64 },
    #[error("tangency cross-check failed: ratio maximisation {ratio} vs Newton {newton}")]
    CrossCheck { ratio: f64, newton: f64 },
}
