//! Biological parameters and control settings.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::ParameterError;

/// Rates and constants of the four-compartment life cycle.
///
/// Rates are per day. `k` is the carrying capacity of the host for the
/// immature stage and `gamma` the number of females a single male can
/// fertilise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParameters {
    /// Intrinsic egg laying rate.
    pub b: f64,
    /// Fraction of emerging adults that are females.
    pub r: f64,
    /// Carrying capacity.
    #[serde(rename = "K")]
    pub k: f64,
    pub gamma: f64,
    #[serde(rename = "mu_I")]
    pub mu_i: f64,
    #[serde(rename = "mu_Y")]
    pub mu_y: f64,
    #[serde(rename = "mu_F")]
    pub mu_f: f64,
    #[serde(rename = "mu_M")]
    pub mu_m: f64,
    #[serde(rename = "nu_I")]
    pub nu_i: f64,
    #[serde(rename = "nu_Y")]
    pub nu_y: f64,
    /// Remating rate, fertilised back to mating-available.
    pub delta: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelParameters {
    /// Fruit-fly reference parameter set used throughout the numerical
    /// experiments.
    pub fn reference() -> Self {
        Self {
            b: 9.272,
            r: 0.57,
            k: 1000.0,
            gamma: 4.0,
            mu_i: 1.0 / 15.0,
            mu_y: 1.0 / 75.1,
            mu_f: 1.0 / 75.1,
            mu_m: 1.0 / 86.4,
            nu_i: 1.0 / 24.6,
            nu_y: 0.5,
            delta: 0.1,
        }
    }

    /// `(nu_Y + mu_Y)(delta + mu_F) - delta nu_Y`, the net loss rate of the
    /// adult-female pair (Y, F) in the male-abundance regime.
    pub fn female_denominator(&self) -> f64 {
        (self.nu_y + self.mu_y) * (self.delta + self.mu_f) - self.delta * self.nu_y
    }

    /// Same quantity written as a sum of positive terms.
    pub fn female_denominator_expanded(&self) -> f64 {
        self.nu_y * self.mu_f + self.mu_y * (self.delta + self.mu_f)
    }

    fn fields(&self) -> [(&'static str, f64); 11] {
        [
            ("b", self.b),
            ("r", self.r),
            ("K", self.k),
            ("gamma", self.gamma),
            ("mu_I", self.mu_i),
            ("mu_Y", self.mu_y),
            ("mu_F", self.mu_f),
            ("mu_M", self.mu_m),
            ("nu_I", self.nu_i),
            ("nu_Y", self.nu_y),
            ("delta", self.delta),
        ]
    }

    /// Lists every violated invariant (empty when the set is valid).
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, value) in self.fields() {
            if !value.is_finite() {
                out.push(Violation::NonFinite { field: name });
            } else if value <= 0.0 {
                out.push(Violation::NonPositive { field: name, value });
            }
        }
        if self.r.is_finite() && self.r >= 1.0 {
            out.push(Violation::FemaleFractionOutOfRange(self.r));
        }
        out
    }

    pub fn validate(self) -> Result<ValidatedParameters, ParameterError> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(ParameterError { violations });
        }
        Ok(ValidatedParameters {
            denominator: self.female_denominator(),
            params: self,
        })
    }
}

/// A single broken parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositive { field: &'static str, value: f64 },
    NonFinite { field: &'static str },
    FemaleFractionOutOfRange(f64),
}

impl Violation {
    pub fn field(&self) -> &'static str {
        match self {
            Violation::NonPositive { field, .. } | Violation::NonFinite { field } => field,
            Violation::FemaleFractionOutOfRange(_) => "r",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositive { field, value } => {
                write!(f, "{field} must be positive (got {value})")
            }
            Violation::NonFinite { field } => write!(f, "{field} must be finite"),
            Violation::FemaleFractionOutOfRange(r) => {
                write!(f, "r out of range: {r} is not in (0, 1)")
            }
        }
    }
}

/// Parameters that passed [`ModelParameters::validate`], with the female
/// denominator cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParameters {
    params: ModelParameters,
    denominator: f64,
}

impl ValidatedParameters {
    pub fn denominator(&self) -> f64 {
        self.denominator
    }

    pub fn into_inner(self) -> ModelParameters {
        self.params
    }
}

impl Deref for ValidatedParameters {
    type Target = ModelParameters;

    fn deref(&self) -> &ModelParameters {
        &self.params
    }
}

/// Lure strength (equivalent number of calling females) and trapping rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSettings {
    #[serde(rename = "Y_P")]
    pub lure: f64,
    /// Extra per-day removal rate of males drawn to the lures.
    pub alpha: f64,
}

impl ControlSettings {
    pub const NONE: ControlSettings = ControlSettings {
        lure: 0.0,
        alpha: 0.0,
    };

    pub fn new(lure: f64, alpha: f64) -> Self {
        Self { lure, alpha }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.lure.is_finite() && self.lure >= 0.0) {
            return Err(format!("Y_P must be finite and >= 0 (got {})", self.lure));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(format!(
                "alpha must be finite and >= 0 (got {})",
                self.alpha
            ));
        }
        Ok(())
    }

    pub fn is_none(&self) -> bool {
        self.lure == 0.0 && self.alpha == 0.0
    }
}
