//! Equilibria of every system variant and their local stability.
//!
//! Closed forms cover the trivial state, the uncontrolled endemic state
//! `EE*`, the decoupled scarcity state and the trapped abundance state
//! `EE#`. With lures the male-scarcity equilibria satisfy
//! `psi(I) = eta(Y_P, I)`, a cubic against a line in `I`; the auxiliary
//! monotone system gives the analogous `psi_tilde(I) = eta(Y_P, I)`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::EquilibriumError;
use crate::linalg;
use crate::model::{classify_regime, jacobian, rhs, PopulationState, Regime, SystemVariant};
use crate::params::{ControlSettings, ModelParameters};
use crate::reproduction::{basic_offspring_number, scarcity_offspring_number};
use crate::roots;
use crate::threshold::{self, CubicKind};

/// Eigenvalue real parts inside `(-STABILITY_BAND, STABILITY_BAND)` are
/// treated as undecided.
pub const STABILITY_BAND: f64 = 1e-9;

const ROOT_GRID: usize = 2048;
const ROOT_REL_TOL: f64 = 1e-13;
const TANGENCY_MERGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stability {
    AsymptoticallyStable,
    Unstable,
    NotClassified,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "stable",
            Stability::Unstable => "unstable",
            Stability::NotClassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EquilibriumLabel {
    /// Extinction, `(0, 0, 0, 0)`.
    Te,
    /// Uncontrolled endemic equilibrium.
    EeStar,
    /// Equilibrium of the decoupled male-scarcity system without control.
    EeHat,
    /// Male-abundance equilibrium with lures and trapping.
    EeSharp,
    /// Lower male-scarcity equilibrium with lures.
    EeMd1,
    /// Upper male-scarcity equilibrium with lures.
    EeMd2,
    ETilde1,
    ETilde2,
}

impl EquilibriumLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EquilibriumLabel::Te => "TE",
            EquilibriumLabel::EeStar => "EE_star",
            EquilibriumLabel::EeHat => "EE_hat",
            EquilibriumLabel::EeSharp => "EE_sharp",
            EquilibriumLabel::EeMd1 => "EE_MD1",
            EquilibriumLabel::EeMd2 => "EE_MD2",
            EquilibriumLabel::ETilde1 => "E_tilde1",
            EquilibriumLabel::ETilde2 => "E_tilde2",
        }
    }
}

impl fmt::Display for EquilibriumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    pub label: EquilibriumLabel,
    pub state: PopulationState,
    pub region: Regime,
    pub stability: Stability,
    /// `max |rhs|` of the producing variant at `state`.
    pub residual: f64,
    /// Whether the point is also an equilibrium of the switched model.
    pub admissible: bool,
    pub eigenvalues: Vec<Complex64>,
}

impl EquilibriumPoint {
    pub fn residual_ok(&self) -> bool {
        self.residual <= 1e-8 * self.state.max_norm().max(1.0)
    }
}

fn residual(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    s: &PopulationState,
) -> f64 {
    rhs(variant, p, c, s).amax()
}

fn label_spectrum(eigs: &[Complex64]) -> Stability {
    let abscissa = linalg::spectral_abscissa(eigs);
    if abscissa < -STABILITY_BAND {
        Stability::AsymptoticallyStable
    } else if abscissa > STABILITY_BAND {
        Stability::Unstable
    } else {
        Stability::NotClassified
    }
}

fn branch_stability(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    s: &PopulationState,
) -> (Stability, Vec<Complex64>) {
    match jacobian(variant, p, c, s) {
        Ok(jac) => match linalg::eigenvalues(&jac) {
            Some(eigs) => (label_spectrum(&eigs), eigs),
            None => (Stability::NotClassified, Vec::new()),
        },
        Err(_) => (Stability::NotClassified, Vec::new()),
    }
}

/// Local stability from the eigenvalues of the variant's Jacobian at
/// `state`. On the switching surface of the full models both one-sided
/// Jacobians are examined and a label is given only if they agree.
pub fn classify_stability(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    state: &PopulationState,
) -> (Stability, Vec<Complex64>) {
    // with no lure the control terms vanish and the uncontrolled Jacobian applies
    let variant = if c.lure > 0.0 {
        variant
    } else {
        match variant {
            SystemVariant::FullControl => SystemVariant::FullNoControl,
            SystemVariant::AbundanceControl => SystemVariant::AbundanceNoControl,
            SystemVariant::ScarcityControl => SystemVariant::ScarcityNoControl,
            v => v,
        }
    };
    let sides = match variant {
        SystemVariant::FullNoControl => Some((
            SystemVariant::AbundanceNoControl,
            SystemVariant::ScarcityNoControl,
            ControlSettings::NONE,
        )),
        SystemVariant::FullControl => Some((
            SystemVariant::AbundanceControl,
            SystemVariant::ScarcityControl,
            *c,
        )),
        _ => None,
    };
    match sides {
        Some((abundant, scarce, control)) => match classify_regime(p, &control, state) {
            Regime::Abundance => branch_stability(abundant, p, &control, state),
            Regime::Scarcity => branch_stability(scarce, p, &control, state),
            Regime::Boundary => {
                let (a, eigs) = branch_stability(abundant, p, &control, state);
                let (b, _) = branch_stability(scarce, p, &control, state);
                if a == b {
                    (a, eigs)
                } else {
                    (Stability::NotClassified, eigs)
                }
            }
        },
        None => branch_stability(variant, p, c, state),
    }
}

fn build_point(
    label: EquilibriumLabel,
    state: PopulationState,
    residual_variant: SystemVariant,
    stability_variant: SystemVariant,
    admissible: bool,
    p: &ModelParameters,
    c: &ControlSettings,
) -> EquilibriumPoint {
    let (stability, eigenvalues) = classify_stability(stability_variant, p, c, &state);
    EquilibriumPoint {
        label,
        state,
        region: classify_regime(p, c, &state),
        stability,
        residual: residual(residual_variant, p, c, &state),
        admissible,
        eigenvalues,
    }
}

/// Extinction state; its stability is that of the switched model under `c`.
pub fn trivial_equilibrium(p: &ModelParameters, c: &ControlSettings) -> EquilibriumPoint {
    build_point(
        EquilibriumLabel::Te,
        PopulationState::ZERO,
        SystemVariant::FullControl,
        SystemVariant::FullControl,
        true,
        p,
        c,
    )
}

/// `(1 - 1/N)`, with offspring numbers within rounding of 1 mapped to 0.
fn persistence_factor(n: f64) -> Result<f64, EquilibriumError> {
    if (n - 1.0).abs() <= 1e-12 {
        Ok(0.0)
    } else if n > 1.0 {
        Ok(1.0 - 1.0 / n)
    } else {
        Err(EquilibriumError::NoPositiveEquilibrium(n))
    }
}

/// Closed-form endemic state of the uncontrolled model.
pub fn endemic_state(p: &ModelParameters) -> Result<PopulationState, EquilibriumError> {
    let i = persistence_factor(basic_offspring_number(p))? * p.k;
    let d = p.female_denominator();
    Ok(PopulationState::new(
        i,
        p.r * p.nu_i * (p.delta + p.mu_f) / d * i,
        p.r * p.nu_i * p.nu_y / d * i,
        (1.0 - p.r) * p.nu_i / p.mu_m * i,
    ))
}

pub fn endemic_equilibrium(p: &ModelParameters) -> Result<EquilibriumPoint, EquilibriumError> {
    let state = endemic_state(p)?;
    let c = ControlSettings::NONE;
    let admissible = classify_regime(p, &c, &state) != Regime::Scarcity;
    Ok(build_point(
        EquilibriumLabel::EeStar,
        state,
        SystemVariant::FullNoControl,
        SystemVariant::FullNoControl,
        admissible,
        p,
        &c,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScarcityEquilibrium {
    /// Full state, `Y` set to the decoupled value `y_hat`.
    pub point: EquilibriumPoint,
    pub y_hat: f64,
    /// `Y_hat < gamma M_hat`: the point lies in the male-abundance region.
    pub below_male_supply: bool,
}

/// Equilibrium of the uncontrolled male-scarcity system.
pub fn scarcity_equilibrium(p: &ModelParameters) -> Result<ScarcityEquilibrium, EquilibriumError> {
    let n_hat = scarcity_offspring_number(p);
    if n_hat <= 1.0 {
        return Err(EquilibriumError::NoPositiveEquilibrium(n_hat));
    }
    let i = (1.0 - 1.0 / n_hat) * p.k;
    let f = p.gamma * (1.0 - p.r) * p.nu_i * p.nu_y / ((p.delta + p.mu_f) * p.mu_m) * i;
    let m = (1.0 - p.r) * p.nu_i / p.mu_m * i;
    let y_hat = (p.r * p.nu_i * (p.delta + p.mu_f) * p.mu_m
        - p.nu_y * p.gamma * (1.0 - p.r) * p.nu_i * p.mu_f)
        / (p.mu_y * (p.delta + p.mu_f) * p.mu_m)
        * i;
    let state = PopulationState::new(i, y_hat, f, m);
    let c = ControlSettings::NONE;
    let point = build_point(
        EquilibriumLabel::EeHat,
        state,
        SystemVariant::ScarcityNoControl,
        SystemVariant::ScarcityNoControl,
        classify_regime(p, &c, &state) != Regime::Abundance && y_hat >= 0.0,
        p,
        &c,
    );
    Ok(ScarcityEquilibrium {
        point,
        y_hat,
        below_male_supply: y_hat < p.gamma * m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    /// `N0 > 1`: the uncontrolled population persists.
    pub n0_above_one: bool,
    /// `Y* < gamma M*`: males are abundant at the endemic state.
    pub male_abundance_at_equilibrium: bool,
    /// Consequence: the scarcity offspring number exceeds 1.
    pub scarcity_n0_above_one: bool,
    /// Consequence: `Y_hat < gamma M_hat`.
    pub scarcity_point_in_abundance: bool,
}

impl AssumptionReport {
    pub fn both_hold(&self) -> bool {
        self.n0_above_one && self.male_abundance_at_equilibrium
    }
}

/// Evaluates the persistence and male-abundance assumptions. The
/// male-abundance comparisons use the per-immature coefficients of the
/// closed forms, so they remain defined when the equilibria are not.
pub fn check_assumptions(p: &ModelParameters) -> AssumptionReport {
    let d = p.female_denominator();
    let y_star_per_i = p.r * p.nu_i * (p.delta + p.mu_f) / d;
    let male_per_i = (1.0 - p.r) * p.nu_i / p.mu_m;
    let y_hat_per_i = (p.r * p.nu_i * (p.delta + p.mu_f) * p.mu_m
        - p.nu_y * p.gamma * (1.0 - p.r) * p.nu_i * p.mu_f)
        / (p.mu_y * (p.delta + p.mu_f) * p.mu_m);
    let n0 = basic_offspring_number(p);
    let n_hat = scarcity_offspring_number(p);
    AssumptionReport {
        n0_above_one: n0 > 1.0,
        male_abundance_at_equilibrium: n0 > 1.0 && y_star_per_i < p.gamma * male_per_i,
        scarcity_n0_above_one: n_hat > 1.0,
        scarcity_point_in_abundance: n_hat > 1.0 && y_hat_per_i < p.gamma * male_per_i,
    }
}

/// Endemic state with the male compartment depleted by trapping. It is an
/// equilibrium of the switched model only while `Y* + Y_P < gamma M#`.
pub fn abundance_control_equilibrium(
    p: &ModelParameters,
    c: &ControlSettings,
) -> Result<EquilibriumPoint, EquilibriumError> {
    let ee = endemic_state(p)?;
    let attract = ee.mating + c.lure;
    let males = if attract > 0.0 {
        ee.males / (1.0 + c.alpha * c.lure / (p.mu_m * attract))
    } else {
        ee.males
    };
    let state = PopulationState { males, ..ee };
    let admissible = classify_regime(p, c, &state) != Regime::Scarcity;
    let stability_variant = if admissible {
        SystemVariant::FullControl
    } else {
        SystemVariant::AbundanceControl
    };
    Ok(build_point(
        EquilibriumLabel::EeSharp,
        state,
        SystemVariant::AbundanceControl,
        stability_variant,
        admissible,
        p,
        c,
    ))
}

/// `intercept + slope * I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Linear {
    pub intercept: f64,
    pub slope: f64,
}

impl Linear {
    pub fn at(&self, i: f64) -> f64 {
        self.intercept + self.slope * i
    }

    pub fn root(&self) -> f64 {
        -self.intercept / self.slope
    }
}

/// The factored cubics `psi(I) = I xi(I) phi(I)` and
/// `psi_tilde(I) = I xi(I) phi_tilde(I)` together with the line
/// `eta(Y_P, I) = eta_scale (1 - I/K) Y_P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicStructure {
    pub k: f64,
    pub xi: Linear,
    pub phi: Linear,
    pub phi_tilde: Linear,
    /// `mu_Y (delta + mu_F)(nu_I + mu_I)(mu_M + alpha) b`.
    pub eta_scale: f64,
    /// Root of `xi`.
    pub i1: f64,
    /// Root of `phi`.
    pub i2: f64,
    /// Root of `phi_tilde`, beyond the carrying capacity.
    pub i2_tilde: f64,
    /// Upper end of the admissible interval for `psi`, `min(i1, i2)`.
    pub i_min: f64,
}

impl CubicStructure {
    fn factor(&self, kind: CubicKind) -> Linear {
        match kind {
            CubicKind::Psi => self.phi,
            CubicKind::PsiTilde => self.phi_tilde,
        }
    }

    /// Upper end of the admissible root interval for `kind`.
    pub fn upper(&self, kind: CubicKind) -> f64 {
        match kind {
            CubicKind::Psi => self.i_min,
            CubicKind::PsiTilde => self.i1,
        }
    }

    pub fn value(&self, kind: CubicKind, i: f64) -> f64 {
        i * self.xi.at(i) * self.factor(kind).at(i)
    }

    pub fn derivative(&self, kind: CubicKind, i: f64) -> f64 {
        let g = self.factor(kind);
        self.xi.at(i) * g.at(i) + i * (self.xi.slope * g.at(i) + self.xi.at(i) * g.slope)
    }

    pub fn second_derivative(&self, kind: CubicKind, i: f64) -> f64 {
        let g = self.factor(kind);
        2.0 * (self.xi.slope * g.at(i) + self.xi.at(i) * g.slope)
            + 2.0 * i * self.xi.slope * g.slope
    }

    pub fn psi(&self, i: f64) -> f64 {
        self.value(CubicKind::Psi, i)
    }

    pub fn psi_tilde(&self, i: f64) -> f64 {
        self.value(CubicKind::PsiTilde, i)
    }

    pub fn eta(&self, lure: f64, i: f64) -> f64 {
        self.eta_scale * (1.0 - i / self.k) * lure
    }

    /// Expanded power-basis coefficients `[c0, c1, c2, c3]` of the cubic.
    pub fn coefficients(&self, kind: CubicKind) -> [f64; 4] {
        let g = self.factor(kind);
        [
            0.0,
            self.xi.intercept * g.intercept,
            self.xi.intercept * g.slope + self.xi.slope * g.intercept,
            self.xi.slope * g.slope,
        ]
    }
}

pub fn cubic_structure(p: &ModelParameters, c: &ControlSettings) -> CubicStructure {
    let loss_i = p.nu_i + p.mu_i;
    let xi_gain = p.nu_y * p.gamma * (1.0 - p.r) * p.nu_i * p.b;
    let xi = Linear {
        intercept: xi_gain - (p.delta + p.mu_f) * loss_i * p.mu_m,
        slope: -xi_gain / p.k,
    };
    let phi_gain = p.r * p.nu_i * p.b;
    let phi = Linear {
        intercept: phi_gain - p.mu_f * loss_i,
        slope: -phi_gain / p.k,
    };
    let phi_tilde = Linear {
        intercept: phi_gain + p.delta * loss_i,
        slope: -phi_gain / p.k,
    };
    let i1 = p.k * (1.0 - (p.delta + p.mu_f) * loss_i * p.mu_m / xi_gain);
    let i2 = p.k * (1.0 - p.mu_f * loss_i / phi_gain);
    let i2_tilde = p.k * (1.0 + p.delta * loss_i / phi_gain);
    CubicStructure {
        k: p.k,
        xi,
        phi,
        phi_tilde,
        eta_scale: p.mu_y * (p.delta + p.mu_f) * loss_i * (p.mu_m + c.alpha) * p.b,
        i1,
        i2,
        i2_tilde,
        i_min: i1.min(i2),
    }
}

/// Roots of `cubic(I) = eta(Y_P, I)` strictly inside the admissible interval.
pub fn cubic_roots(cs: &CubicStructure, kind: CubicKind, lure: f64) -> Vec<f64> {
    let upper = cs.upper(kind);
    if !(upper > 0.0) {
        return Vec::new();
    }
    let g = |i: f64| cs.value(kind, i) - cs.eta(lure, i);
    roots::bracketed_roots(
        g,
        0.0,
        upper,
        ROOT_GRID,
        ROOT_REL_TOL,
        TANGENCY_MERGE * upper,
    )
    .into_iter()
    .filter(|&i| i > 0.0 && i < upper)
    .collect()
}

fn ordered_labels(
    count: usize,
    lower: EquilibriumLabel,
    upper: EquilibriumLabel,
) -> Vec<EquilibriumLabel> {
    match count {
        0 => vec![],
        1 => vec![lower],
        n => {
            let mut v = vec![lower; n - 1];
            v.push(upper);
            v
        }
    }
}

/// Male-scarcity equilibria with lures. Every root of `psi = eta` on
/// `(0, min(I1, I2))` is lifted to a full state; `admissible` records
/// whether the lifted state actually lies in the scarcity region (and so is
/// an equilibrium of the switched model).
pub fn md_equilibria(
    p: &ModelParameters,
    c: &ControlSettings,
) -> Result<Vec<EquilibriumPoint>, EquilibriumError> {
    if !(c.lure > 0.0) {
        return Err(EquilibriumError::LureRequired(c.lure));
    }
    let cs = cubic_structure(p, c);
    let roots = cubic_roots(&cs, CubicKind::Psi, c.lure);
    let labels = ordered_labels(
        roots.len(),
        EquilibriumLabel::EeMd1,
        EquilibriumLabel::EeMd2,
    );
    Ok(roots
        .into_iter()
        .zip(labels)
        .map(|(i, label)| {
            let state = lift_scarcity_root(p, c, i);
            let positive = i < cs.i2 && state.mating > 0.0;
            let admissible = positive && classify_regime(p, c, &state) != Regime::Abundance;
            let stability_variant = if admissible {
                SystemVariant::FullControl
            } else {
                SystemVariant::ScarcityControl
            };
            build_point(
                label,
                state,
                SystemVariant::ScarcityControl,
                stability_variant,
                admissible,
                p,
                c,
            )
        })
        .collect())
}

/// `(Y, F, M)` of a male-scarcity equilibrium with immature level `i`.
pub fn lift_scarcity_root(p: &ModelParameters, c: &ControlSettings, i: f64) -> PopulationState {
    let laying = p.b * (1.0 - i / p.k);
    let y = (p.r * p.nu_i / p.mu_y - p.mu_f * (p.nu_i + p.mu_i) / (p.mu_y * laying)) * i;
    let f = (p.nu_i + p.mu_i) / laying * i;
    let m = (1.0 - p.r) * p.nu_i / (p.mu_m + c.alpha * c.lure / (y + c.lure)) * i;
    PopulationState::new(i, y, f, m)
}

/// `(Y, F, M)` of an auxiliary-system equilibrium with immature level `i`.
pub fn lift_auxiliary_root(p: &ModelParameters, c: &ControlSettings, i: f64) -> PopulationState {
    let laying = p.b * (1.0 - i / p.k);
    let y = (p.r * p.nu_i + p.delta * (p.nu_i + p.mu_i) / laying) * i / p.mu_y;
    let f = (p.nu_i + p.mu_i) / laying * i;
    let m = (1.0 - p.r) * p.nu_i / (p.mu_m + c.alpha * c.lure / (y + c.lure)) * i;
    PopulationState::new(i, y, f, m)
}

/// Positive equilibria of the auxiliary monotone system, ordered by `I`.
pub fn tilde_equilibria(
    p: &ModelParameters,
    c: &ControlSettings,
) -> Result<Vec<EquilibriumPoint>, EquilibriumError> {
    if !(c.lure > 0.0) {
        return Err(EquilibriumError::LureRequired(c.lure));
    }
    let cs = cubic_structure(p, c);
    let roots = cubic_roots(&cs, CubicKind::PsiTilde, c.lure);
    let labels = ordered_labels(
        roots.len(),
        EquilibriumLabel::ETilde1,
        EquilibriumLabel::ETilde2,
    );
    Ok(roots
        .into_iter()
        .zip(labels)
        .map(|(i, label)| {
            let state = lift_auxiliary_root(p, c, i);
            build_point(
                label,
                state,
                SystemVariant::AuxiliaryMonotone,
                SystemVariant::AuxiliaryMonotone,
                false,
                p,
                c,
            )
        })
        .collect())
}

/// Which interval the lure strength falls in relative to the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CatalogCase {
    NoLure,
    /// `0 < Y_P < Y_P*`.
    BelowFirstThreshold,
    /// `Y_P* < Y_P < Y_P**`.
    BetweenThresholds,
    /// `Y_P > Y_P**`.
    AboveSecondThreshold,
    /// Thresholds unavailable (assumptions violated).
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogReport {
    pub control: ControlSettings,
    pub assumptions: AssumptionReport,
    pub case: CatalogCase,
    pub yp_star: Option<f64>,
    pub yp_double_star: Option<f64>,
    /// Equilibria of the switched model, trivial state first, then by `I`.
    pub equilibria: Vec<EquilibriumPoint>,
    pub warnings: Vec<String>,
}

impl CatalogReport {
    pub fn find(&self, label: EquilibriumLabel) -> Option<&EquilibriumPoint> {
        self.equilibria.iter().find(|e| e.label == label)
    }

    pub fn stable(&self) -> impl Iterator<Item = &EquilibriumPoint> {
        self.equilibria
            .iter()
            .filter(|e| e.stability == Stability::AsymptoticallyStable)
    }
}

fn close(a: &PopulationState, b: &PopulationState, rel: f64) -> bool {
    let scale = a.max_norm().max(b.max_norm()).max(1.0);
    (a.to_vector() - b.to_vector()).amax() <= rel * scale
}

/// All equilibria of the switched control model for the given settings.
pub fn equilibrium_catalog(p: &ModelParameters, c: &ControlSettings) -> CatalogReport {
    let assumptions = check_assumptions(p);
    let mut warnings = Vec::new();
    if !assumptions.both_hold() {
        warnings.push(format!(
            "model assumptions not satisfied (N0 > 1: {}, male abundance at EE*: {}); case analysis may not apply",
            assumptions.n0_above_one, assumptions.male_abundance_at_equilibrium
        ));
    }
    let yp_star = threshold::yp_star(p, c.alpha).ok();
    let yp_double_star = threshold::yp_double_star(p, c.alpha, CubicKind::Psi)
        .ok()
        .map(|t| t.yp);

    let case = if c.lure == 0.0 {
        CatalogCase::NoLure
    } else {
        match (yp_star, yp_double_star) {
            (Some(s), Some(d)) if c.lure < s => {
                let _ = d;
                CatalogCase::BelowFirstThreshold
            }
            (Some(_), Some(d)) if c.lure < d => CatalogCase::BetweenThresholds,
            (Some(_), Some(_)) => CatalogCase::AboveSecondThreshold,
            _ => CatalogCase::Undetermined,
        }
    };

    let mut equilibria = vec![trivial_equilibrium(p, c)];
    if c.lure == 0.0 {
        if let Ok(ee) = endemic_equilibrium(p) {
            if ee.admissible && ee.state.immature > 0.0 {
                equilibria.push(ee);
            }
        }
        if let Ok(hat) = scarcity_equilibrium(p) {
            if hat.point.admissible {
                warnings
                    .push("uncontrolled scarcity equilibrium lies in the scarcity region".into());
                equilibria.push(hat.point);
            }
        }
    } else {
        let sharp = abundance_control_equilibrium(p, c)
            .ok()
            .filter(|e| e.admissible && e.state.immature > 0.0);
        match md_equilibria(p, c) {
            Ok(points) => {
                for pt in points.into_iter().filter(|e| e.admissible) {
                    if sharp
                        .as_ref()
                        .is_some_and(|s| close(&s.state, &pt.state, 1e-6))
                    {
                        continue;
                    }
                    equilibria.push(pt);
                }
            }
            Err(e) => warnings.push(e.to_string()),
        }
        if let Some(s) = sharp {
            equilibria.push(s);
        }
    }
    equilibria[1..].sort_by(|a, b| a.state.immature.partial_cmp(&b.state.immature).unwrap());
    for e in &equilibria {
        if !e.residual_ok() {
            warnings.push(format!(
                "{} residual {:.3e} above tolerance",
                e.label, e.residual
            ));
        }
    }

    CatalogReport {
        control: *c,
        assumptions,
        case,
        yp_star,
        yp_double_star,
        equilibria,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> ModelParameters {
        ModelParameters::reference()
    }

    fn yp_star0() -> f64 {
        threshold::yp_star(&p1(), 0.0).unwrap()
    }

    fn yp_dstar(alpha: f64) -> f64 {
        threshold::yp_double_star(&p1(), alpha, CubicKind::Psi)
            .unwrap()
            .yp
    }

    #[test]
    fn trivial_equilibrium_stability_depends_on_lure() {
        let te = trivial_equilibrium(&p1(), &ControlSettings::new(100.0, 0.0));
        assert_eq!(te.state, PopulationState::ZERO);
        assert_eq!(te.residual, 0.0);
        assert_eq!(te.stability, Stability::AsymptoticallyStable);

        let te = trivial_equilibrium(&p1(), &ControlSettings::NONE);
        assert_eq!(te.stability, Stability::Unstable);
    }

    #[test]
    fn trivial_equilibrium_spectrum_is_the_diagonal() {
        let p = p1();
        let alpha = 0.05;
        let te = trivial_equilibrium(&p, &ControlSettings::new(500.0, alpha));
        let mut re: Vec<f64> = te.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = vec![-0.1073, -0.01332, -0.1133, -(0.011574 + alpha)];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in re.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn endemic_equilibrium_reference_values() {
        let ee = endemic_equilibrium(&p1()).unwrap();
        let s = ee.state;
        assert_eq!(
            [
                s.immature.round(),
                s.mating.round(),
                s.fertilised.round(),
                s.males.round()
            ],
            [992.0, 319.0, 1407.0, 1498.0]
        );
        assert!(ee.residual <= 1e-9 * p1().k);
        assert_eq!(ee.stability, Stability::AsymptoticallyStable);
        assert_eq!(ee.region, Regime::Abundance);
    }

    #[test]
    fn endemic_equilibrium_degenerates_at_threshold() {
        let p = p1();
        let d = p.female_denominator();
        let b = (p.mu_i + p.nu_i) * d / (p.r * p.nu_i * p.nu_y);
        let p = ModelParameters { b, ..p };
        let ee = endemic_equilibrium(&p).unwrap();
        assert!(ee.state.immature.abs() <= 1e-9 * p.k);

        let p = ModelParameters { b: 0.5 * b, ..p };
        assert!(matches!(
            endemic_equilibrium(&p),
            Err(EquilibriumError::NoPositiveEquilibrium(_))
        ));
    }

    #[test]
    fn scarcity_equilibrium_reference() {
        let hat = scarcity_equilibrium(&p1()).unwrap();
        assert!((hat.point.state.immature - 999.57).abs() < 0.01);
        assert!(hat.y_hat - p1().gamma * hat.point.state.males < 0.0);
        assert!(hat.below_male_supply);
        assert!(hat.point.residual_ok());

        let p = ModelParameters { gamma: 0.0, ..p1() };
        assert!(scarcity_equilibrium(&p).is_err());
    }

    #[test]
    fn assumptions_hold_for_reference_set() {
        let a = check_assumptions(&p1());
        assert!(a.n0_above_one && a.male_abundance_at_equilibrium);
        assert!(a.scarcity_n0_above_one && a.scarcity_point_in_abundance);
    }

    #[test]
    fn assumptions_fail_without_males_or_recruitment() {
        let a = check_assumptions(&ModelParameters { r: 0.999, ..p1() });
        assert!(a.n0_above_one);
        assert!(!a.male_abundance_at_equilibrium);

        let a = check_assumptions(&ModelParameters {
            b: 9.272 / 122.56 * 0.99,
            ..p1()
        });
        assert!(!a.n0_above_one);
    }

    #[test]
    fn trapped_abundance_equilibrium() {
        let p = p1();
        let ee = endemic_state(&p).unwrap();
        let sharp = abundance_control_equilibrium(&p, &ControlSettings::new(0.0, 0.3)).unwrap();
        assert_eq!(sharp.state, ee);

        let sharp = abundance_control_equilibrium(&p, &ControlSettings::new(1000.0, 0.0)).unwrap();
        assert_eq!(sharp.state, ee);
        assert!(sharp.admissible);

        let sharp = abundance_control_equilibrium(&p, &ControlSettings::new(1000.0, 0.1)).unwrap();
        assert_eq!(sharp.state.immature, ee.immature);
        assert_eq!(sharp.state.fertilised, ee.fertilised);
        assert!(sharp.state.males < ee.males);
        // Y_P*(0.1) is about 588 < 1000
        assert!(!sharp.admissible);
        assert!(sharp.residual_ok());
    }

    #[test]
    fn cubic_roots_and_admissible_interval() {
        let cs = cubic_structure(&p1(), &ControlSettings::NONE);
        assert!((cs.i1 - 999.57).abs() < 0.01);
        assert!((cs.i2 - 993.35).abs() < 0.01);
        assert_eq!(cs.i_min, cs.i2);
        let p = p1();
        let expected = (1.0 + p.delta * (p.nu_i + p.mu_i) / (p.r * p.nu_i * p.b)) * p.k;
        assert!((cs.i2_tilde - expected).abs() < 1e-9);
        assert!(cs.i2_tilde > p.k && cs.i1 < p.k);
        for yp in [1.0, 1e3, 1e6] {
            assert_eq!(cs.eta(yp, p.k), 0.0);
        }
        assert!(cs.psi(cs.i1).abs() < 1e-9 && cs.psi(cs.i2).abs() < 1e-9);
        assert!(cs.psi_tilde(cs.i2_tilde).abs() < 1e-6);
        // expanded coefficients agree with the factored evaluation
        let c = cs.coefficients(CubicKind::Psi);
        for i in [10.0, 400.0, 900.0] {
            let expanded = c[1] * i + c[2] * i * i + c[3] * i * i * i;
            assert!((expanded - cs.psi(i)).abs() <= 1e-9 * cs.psi(i).abs().max(1.0));
        }
    }

    #[test]
    fn md_equilibria_vanish_above_threshold() {
        let d = yp_dstar(0.0);
        let pts = md_equilibria(&p1(), &ControlSettings::new(1.01 * d, 0.0)).unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn md_equilibria_just_below_threshold() {
        let d = yp_dstar(0.0);
        let pts = md_equilibria(&p1(), &ControlSettings::new(0.9999 * d, 0.0)).unwrap();
        assert_eq!(pts.len(), 2);
        for pt in &pts {
            assert!(pt.admissible);
            assert!(pt.state.to_array().iter().all(|x| *x > 0.0));
            assert!(pt.residual_ok(), "{}", pt.residual);
        }
        assert_eq!(pts[0].label, EquilibriumLabel::EeMd1);
        assert_eq!(pts[0].stability, Stability::Unstable);
        assert_eq!(pts[1].stability, Stability::AsymptoticallyStable);
    }

    #[test]
    fn upper_md_root_rejected_below_first_threshold() {
        let pts = md_equilibria(&p1(), &ControlSettings::new(3000.0, 0.0)).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[0].admissible);
        assert!(!pts[1].admissible);
        assert_eq!(pts[1].region, Regime::Abundance);
    }

    #[test]
    fn md_root_ordering_relative_to_endemic_level() {
        let ee = endemic_state(&p1()).unwrap();
        let pts = md_equilibria(&p1(), &ControlSettings::new(3000.0, 0.0)).unwrap();
        assert!(pts[0].state.immature < ee.immature && ee.immature < pts[1].state.immature);
        let pts = md_equilibria(&p1(), &ControlSettings::new(50_000.0, 0.0)).unwrap();
        assert!(
            pts[0].state.immature < pts[1].state.immature && pts[1].state.immature < ee.immature
        );
    }

    #[test]
    fn sharp_meets_upper_md_root_at_first_threshold() {
        let c = ControlSettings::new(yp_star0(), 0.0);
        let sharp = abundance_control_equilibrium(&p1(), &c).unwrap();
        let pts = md_equilibria(&p1(), &c).unwrap();
        let md2 = pts
            .iter()
            .find(|e| e.label == EquilibriumLabel::EeMd2)
            .unwrap();
        let rel = (sharp.state.to_vector() - md2.state.to_vector()).amax() / sharp.state.max_norm();
        assert!(rel <= 1e-6, "{rel}");
    }

    #[test]
    fn md_lure_required() {
        assert!(matches!(
            md_equilibria(&p1(), &ControlSettings::NONE),
            Err(EquilibriumError::LureRequired(_))
        ));
    }

    #[test]
    fn tilde_equilibria_are_ordered_and_increasing() {
        let pts = tilde_equilibria(&p1(), &ControlSettings::new(5e5, 0.0)).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[0].state.le(&pts[1].state));
        assert!(pts[0].state.to_array().iter().all(|x| *x > 0.0));
        for pt in &pts {
            assert!(pt.residual_ok(), "{}", pt.residual);
        }
        let dt = threshold::yp_double_star(&p1(), 0.0, CubicKind::PsiTilde)
            .unwrap()
            .yp;
        assert!(
            tilde_equilibria(&p1(), &ControlSettings::new(1.01 * dt, 0.0))
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn catalog_without_control() {
        let cat = equilibrium_catalog(&p1(), &ControlSettings::NONE);
        let labels: Vec<_> = cat
            .equilibria
            .iter()
            .map(|e| (e.label, e.stability))
            .collect();
        assert_eq!(
            labels,
            vec![
                (EquilibriumLabel::Te, Stability::Unstable),
                (EquilibriumLabel::EeStar, Stability::AsymptoticallyStable)
            ]
        );
        assert!(cat.warnings.is_empty(), "{:?}", cat.warnings);
    }

    #[test]
    fn catalog_below_first_threshold() {
        let cat = equilibrium_catalog(&p1(), &ControlSettings::new(1000.0, 0.0));
        assert_eq!(cat.case, CatalogCase::BelowFirstThreshold);
        let labels: Vec<_> = cat.equilibria.iter().map(|e| e.label).collect();
        assert_eq!(
            labels,
            vec![
                EquilibriumLabel::Te,
                EquilibriumLabel::EeMd1,
                EquilibriumLabel::EeSharp
            ]
        );
        assert_eq!(cat.equilibria[0].stability, Stability::AsymptoticallyStable);
        assert_eq!(cat.equilibria[2].stability, Stability::AsymptoticallyStable);
    }

    #[test]
    fn catalog_between_and_above_thresholds() {
        let d = yp_dstar(0.0);
        let cat = equilibrium_catalog(&p1(), &ControlSettings::new(0.5 * d, 0.0));
        assert_eq!(cat.case, CatalogCase::BetweenThresholds);
        let labels: Vec<_> = cat.equilibria.iter().map(|e| e.label).collect();
        assert_eq!(
            labels,
            vec![
                EquilibriumLabel::Te,
                EquilibriumLabel::EeMd1,
                EquilibriumLabel::EeMd2
            ]
        );

        let cat = equilibrium_catalog(&p1(), &ControlSettings::new(1.01 * d, 0.0));
        assert_eq!(cat.case, CatalogCase::AboveSecondThreshold);
        assert_eq!(cat.equilibria.len(), 1);
        assert_eq!(cat.equilibria[0].label, EquilibriumLabel::Te);
    }
}
