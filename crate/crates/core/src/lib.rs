//! Population dynamics of a pest insect under mating disruption and
//! trapping.
//!
//! The model has four compartments, immatures `I`, mating-available females
//! `Y`, fertilised females `F` and males `M`. Fertilisation is male-limited
//! when `gamma M < Y + Y_P`, where `Y_P` is the lure strength expressed as
//! an equivalent number of calling females. The crate provides
//!
//! * right-hand sides and Jacobians of every branch of the model ([`model`]),
//! * basic offspring numbers ([`reproduction`]),
//! * closed-form and cubic-root equilibria with stability labels
//!   ([`equilibrium`]),
//! * the control thresholds `Y_P*`, `Y_P**` and the auxiliary bound
//!   ([`threshold`]),
//! * an adaptive TR-BDF2 integrator with an RK4 reference ([`integrator`]),
//! * attractor classification, basins, bifurcation curves and the monotone
//!   comparison bound ([`phase`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod params;
pub mod phase;
pub mod reproduction;
pub mod roots;
pub mod threshold;

pub use error::{EquilibriumError, ModelError, ParameterError, ThresholdError};
pub use model::{Model, PopulationState, Regime, StateVector, SystemVariant};
pub use params::{ControlSettings, ModelParameters, ValidatedParameters};
