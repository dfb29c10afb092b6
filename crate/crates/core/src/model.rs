//! Right-hand sides and Jacobians of every system variant.
//!
//! State ordering everywhere is `(I, Y, F, M)`: immatures, mating-available
//! females, fertilised females, males.

use nalgebra::{Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::params::{ControlSettings, ModelParameters};

pub type StateVector = Vector4<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PopulationState {
    pub immature: f64,
    pub mating: f64,
    pub fertilised: f64,
    pub males: f64,
}

impl PopulationState {
    pub const ZERO: PopulationState = PopulationState {
        immature: 0.0,
        mating: 0.0,
        fertilised: 0.0,
        males: 0.0,
    };

    pub fn new(immature: f64, mating: f64, fertilised: f64, males: f64) -> Self {
        Self {
            immature,
            mating,
            fertilised,
            males,
        }
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::new(self.immature, self.mating, self.fertilised, self.males)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.immature, self.mating, self.fertilised, self.males]
    }

    pub fn max_norm(&self) -> f64 {
        self.to_array()
            .iter()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Adult females, `Y + F`.
    pub fn females(&self) -> f64 {
        self.mating + self.fertilised
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &PopulationState) -> bool {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .all(|(a, b)| *a <= b)
    }
}

impl From<[f64; 4]> for PopulationState {
    fn from(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

/// Which system of ODEs to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemVariant {
    /// Switched model without lures or trapping.
    FullNoControl,
    /// Male-abundance branch without control.
    AbundanceNoControl,
    /// Male-scarcity branch without control; `Y` decouples and may go negative.
    ScarcityNoControl,
    /// Switched model with lures and trapping.
    FullControl,
    AbundanceControl,
    ScarcityControl,
    /// Cooperative upper-bound system: the fertilisation loss is dropped
    /// from the `Y` equation and the fertilisation rate is never capped.
    AuxiliaryMonotone,
}

impl SystemVariant {
    pub const ALL: [SystemVariant; 7] = [
        SystemVariant::FullNoControl,
        SystemVariant::AbundanceNoControl,
        SystemVariant::ScarcityNoControl,
        SystemVariant::FullControl,
        SystemVariant::AbundanceControl,
        SystemVariant::ScarcityControl,
        SystemVariant::AuxiliaryMonotone,
    ];

    pub fn uses_control(self) -> bool {
        matches!(
            self,
            SystemVariant::FullControl
                | SystemVariant::AbundanceControl
                | SystemVariant::ScarcityControl
                | SystemVariant::AuxiliaryMonotone
        )
    }

    /// Whether the variant is cooperative on `{x >= 0 : I <= K}` (the
    /// scarcity variant only on its reduced `(I, F, M)` subsystem).
    pub fn is_cooperative(self) -> bool {
        matches!(
            self,
            SystemVariant::AbundanceNoControl
                | SystemVariant::ScarcityNoControl
                | SystemVariant::AbundanceControl
                | SystemVariant::AuxiliaryMonotone
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `gamma M > Y + Y_P`: every available female can be fertilised.
    Abundance,
    /// `gamma M < Y + Y_P`: fertilisation is male-limited.
    Scarcity,
    Boundary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Abundance => "abundance",
            Regime::Scarcity => "scarcity",
            Regime::Boundary => "boundary",
        }
    }
}

/// Fraction of attracted males that go to the lures, `Y_P / (Y + Y_P)`.
fn lure_share(y: f64, lure: f64) -> f64 {
    if lure <= 0.0 {
        0.0
    } else if y + lure > 0.0 {
        lure / (y + lure)
    } else {
        1.0
    }
}

/// Fraction of attracted males that go to wild females, `Y / (Y + Y_P)`.
/// Equals 1 without lures (its limit for `Y -> 0+`).
fn wild_share(y: f64, lure: f64) -> f64 {
    if lure <= 0.0 {
        1.0
    } else if y + lure > 0.0 {
        y / (y + lure)
    } else {
        0.0
    }
}

/// Switched fertilisation flux `nu_Y Y min{gamma M, Y + Y_P} / (Y + Y_P)`,
/// zero when `Y = 0`.
pub fn switched_fertilisation(p: &ModelParameters, lure: f64, y: f64, m: f64) -> f64 {
    let attract = y + lure;
    if y <= 0.0 || attract <= 0.0 {
        return 0.0;
    }
    p.nu_y * y * (p.gamma * m).min(attract) / attract
}

fn fertilisation(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    y: f64,
    m: f64,
) -> f64 {
    match variant {
        SystemVariant::FullNoControl => switched_fertilisation(p, 0.0, y, m),
        SystemVariant::FullControl => switched_fertilisation(p, c.lure, y, m),
        SystemVariant::AbundanceNoControl | SystemVariant::AbundanceControl => p.nu_y * y,
        SystemVariant::ScarcityNoControl => p.nu_y * p.gamma * m,
        SystemVariant::ScarcityControl | SystemVariant::AuxiliaryMonotone => {
            p.nu_y * p.gamma * m * wild_share(y, c.lure)
        }
    }
}

/// Time derivative of the state for `variant`. Control settings are ignored
/// by the no-control variants.
pub fn rhs_vector(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    x: &StateVector,
) -> StateVector {
    let (i, y, f, m) = (x[0], x[1], x[2], x[3]);
    let flux = fertilisation(variant, p, c, y, m);
    let trap = if variant.uses_control() {
        c.alpha * lure_share(y, c.lure)
    } else {
        0.0
    };

    let di = p.b * (1.0 - i / p.k) * f - (p.nu_i + p.mu_i) * i;
    let dy = match variant {
        SystemVariant::AuxiliaryMonotone => p.r * p.nu_i * i - p.mu_y * y + p.delta * f,
        _ => p.r * p.nu_i * i - flux + p.delta * f - p.mu_y * y,
    };
    let df = flux - (p.delta + p.mu_f) * f;
    let dm = (1.0 - p.r) * p.nu_i * i - (p.mu_m + trap) * m;
    StateVector::new(di, dy, df, dm)
}

pub fn rhs(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    s: &PopulationState,
) -> StateVector {
    rhs_vector(variant, p, c, &s.to_vector())
}

/// Classifies a state against the switching surface `gamma M = Y + Y_P`.
pub fn classify_regime(p: &ModelParameters, c: &ControlSettings, s: &PopulationState) -> Regime {
    let supply = p.gamma * s.males;
    let demand = s.mating + c.lure;
    let tol = 1e-9 * supply.abs().max(1.0);
    if supply > demand + tol {
        Regime::Abundance
    } else if supply < demand - tol {
        Regime::Scarcity
    } else {
        Regime::Boundary
    }
}

/// Partial derivatives `(dPhi/dY, dPhi/dM)` of the fertilisation flux.
fn flux_partials(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    y: f64,
    m: f64,
) -> (f64, f64) {
    let abundance = (p.nu_y, 0.0);
    let scarce = |lure: f64| {
        let s = y + lure;
        if lure <= 0.0 {
            (0.0, p.nu_y * p.gamma)
        } else {
            (
                p.nu_y * p.gamma * m * lure / (s * s),
                p.nu_y * p.gamma * y / s,
            )
        }
    };
    match variant {
        SystemVariant::AbundanceNoControl | SystemVariant::AbundanceControl => abundance,
        SystemVariant::ScarcityNoControl => (0.0, p.nu_y * p.gamma),
        SystemVariant::ScarcityControl | SystemVariant::AuxiliaryMonotone => scarce(c.lure),
        SystemVariant::FullNoControl | SystemVariant::FullControl => {
            let lure = if variant == SystemVariant::FullControl {
                c.lure
            } else {
                0.0
            };
            if y <= 0.0 && lure <= 0.0 {
                // flux vanishes identically on Y = 0 without lures
                if p.gamma * m > 0.0 {
                    abundance
                } else {
                    (0.0, 0.0)
                }
            } else if p.gamma * m > y + lure {
                abundance
            } else {
                scarce(lure)
            }
        }
    }
}

/// Analytic Jacobian of [`rhs`]. For the switched variants the branch is
/// chosen by the regime at `s` (scarcity on the boundary itself).
pub fn jacobian(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    s: &PopulationState,
) -> Result<Matrix4<f64>, ModelError> {
    jacobian_vector(variant, p, c, &s.to_vector())
}

pub fn jacobian_vector(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    x: &StateVector,
) -> Result<Matrix4<f64>, ModelError> {
    let (i, y, f, m) = (x[0], x[1], x[2], x[3]);
    let attract = y + c.lure;
    if variant.uses_control() && attract <= 0.0 {
        return Err(ModelError::SingularInput(attract));
    }
    let (phi_y, phi_m) = flux_partials(variant, p, c, y, m);
    let (trap, dtrap_dy) = if variant.uses_control() && c.lure > 0.0 {
        (
            c.alpha * c.lure / attract,
            c.alpha * c.lure * m / (attract * attract),
        )
    } else {
        (0.0, 0.0)
    };
    let y_loses_flux = if variant == SystemVariant::AuxiliaryMonotone {
        0.0
    } else {
        1.0
    };

    #[rustfmt::skip]
    let jac = Matrix4::new(
        -(p.nu_i + p.mu_i + p.b * f / p.k), 0.0, p.b * (1.0 - i / p.k), 0.0,
        p.r * p.nu_i, -(y_loses_flux * phi_y + p.mu_y), p.delta, -y_loses_flux * phi_m,
        0.0, phi_y, -(p.delta + p.mu_f), phi_m,
        (1.0 - p.r) * p.nu_i, dtrap_dy, 0.0, -(p.mu_m + trap),
    );
    Ok(jac)
}

/// Jacobian of the decoupled `(I, F, M)` scarcity subsystem.
pub fn scarcity_reduced_jacobian(p: &ModelParameters, s: &PopulationState) -> Matrix3<f64> {
    #[rustfmt::skip]
    let jac = Matrix3::new(
        -(p.nu_i + p.mu_i + p.b * s.fertilised / p.k), p.b * (1.0 - s.immature / p.k), 0.0,
        0.0, -(p.delta + p.mu_f), p.nu_y * p.gamma,
        (1.0 - p.r) * p.nu_i, 0.0, -p.mu_m,
    );
    jac
}

/// A negative off-diagonal Jacobian entry.
#[derive(Debug, Clone, PartialEq)]
pub struct OffDiagonalViolation {
    pub state: PopulationState,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooperativityReport {
    pub variant: SystemVariant,
    pub cooperative: bool,
    pub samples_checked: usize,
    /// Samples where the Jacobian was undefined.
    pub samples_skipped: usize,
    /// Most negative off-diagonal entry found, if any.
    pub worst: Option<OffDiagonalViolation>,
}

/// Checks the sign of every off-diagonal Jacobian entry on the given states.
pub fn check_cooperative(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    samples: &[PopulationState],
) -> CooperativityReport {
    let mut worst: Option<OffDiagonalViolation> = None;
    let mut checked = 0;
    let mut skipped = 0;
    let mut record = |state: &PopulationState, row: usize, col: usize, value: f64| {
        if value < 0.0 && worst.as_ref().is_none_or(|w| value < w.value) {
            worst = Some(OffDiagonalViolation {
                state: *state,
                row,
                col,
                value,
            });
        }
    };

    for s in samples {
        if variant == SystemVariant::ScarcityNoControl {
            // only the (I, F, M) block is claimed cooperative; Y is decoupled
            let jac = scarcity_reduced_jacobian(p, s);
            let index = [0, 2, 3];
            for r in 0..3 {
                for col in 0..3 {
                    if r != col {
                        record(s, index[r], index[col], jac[(r, col)]);
                    }
                }
            }
            checked += 1;
            continue;
        }
        match jacobian(variant, p, c, s) {
            Ok(jac) => {
                for r in 0..4 {
                    for col in 0..4 {
                        if r != col {
                            record(s, r, col, jac[(r, col)]);
                        }
                    }
                }
                checked += 1;
            }
            Err(_) => skipped += 1,
        }
    }

    CooperativityReport {
        variant,
        cooperative: worst.is_none(),
        samples_checked: checked,
        samples_skipped: skipped,
        worst,
    }
}

/// A variant bound to its parameters and control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub variant: SystemVariant,
    pub params: ModelParameters,
    pub control: ControlSettings,
}

impl Model {
    pub fn new(variant: SystemVariant, params: ModelParameters, control: ControlSettings) -> Self {
        Self {
            variant,
            params,
            control,
        }
    }

    pub fn rhs(&self, x: &StateVector) -> StateVector {
        rhs_vector(self.variant, &self.params, &self.control, x)
    }

    pub fn jacobian(&self, x: &StateVector) -> Result<Matrix4<f64>, ModelError> {
        jacobian_vector(self.variant, &self.params, &self.control, x)
    }

    /// Central-difference Jacobian, used where the analytic one is undefined.
    pub fn jacobian_fd(&self, x: &StateVector) -> Matrix4<f64> {
        let mut jac = Matrix4::zeros();
        for col in 0..4 {
            let h = 1e-7 * x[col].abs().max(1.0);
            let mut xp = *x;
            let mut xm = *x;
            xp[col] += h;
            xm[col] -= h;
            let d = (self.rhs(&xp) - self.rhs(&xm)) / (2.0 * h);
            jac.set_column(col, &d);
        }
        jac
    }
}
