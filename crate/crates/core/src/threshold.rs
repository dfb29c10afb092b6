//! Control thresholds in the lure strength.
//!
//! `Y_P*` is where the trapped abundance equilibrium reaches the switching
//! surface. `Y_P**` is the largest lure strength for which the cubic
//! `psi` still meets the line `eta`, found as the maximum of
//! `psi(I) / (eta_scale (1 - I/K))`; the same construction on `psi_tilde`
//! gives the auxiliary bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{cubic_structure, endemic_state};
use crate::error::ThresholdError;
use crate::params::{ControlSettings, ModelParameters};
use crate::roots;

const PROFILE_GRID: usize = 4096;
const PROFILE_MARGIN: f64 = 1e-9;
const GOLDEN_TOL: f64 = 1e-10;
const NEWTON_AGREEMENT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CubicKind {
    /// Cubic of the switched model.
    Psi,
    /// Cubic of the auxiliary monotone system.
    PsiTilde,
}

fn star_inputs(p: &ModelParameters) -> Result<(f64, f64), ThresholdError> {
    let ee = endemic_state(p).map_err(|e| ThresholdError::NoThreshold(e.to_string()))?;
    let excess = p.gamma * ee.males - ee.mating;
    if !(excess > 0.0) {
        return Err(ThresholdError::NoThreshold(format!(
            "males are not abundant at the endemic state (gamma M* - Y* = {excess})"
        )));
    }
    Ok((ee.immature, excess))
}

/// `mu_M (gamma M* - Y*) / (mu_M + alpha)`.
pub fn yp_star(p: &ModelParameters, alpha: f64) -> Result<f64, ThresholdError> {
    let (_, excess) = star_inputs(p)?;
    Ok(p.mu_m * excess / (p.mu_m + alpha))
}

/// [`yp_star`] with `gamma M* - Y*` written through the per-immature
/// coefficients of the endemic state.
pub fn yp_star_expanded(p: &ModelParameters, alpha: f64) -> Result<f64, ThresholdError> {
    let (i_star, _) = star_inputs(p)?;
    let per_i = p.gamma * (1.0 - p.r) * p.nu_i / p.mu_m
        - p.r * p.nu_i * (p.delta + p.mu_f) / p.female_denominator();
    Ok(p.mu_m / (p.mu_m + alpha) * per_i * i_star)
}

/// A tangency of the cubic with the lure line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangencyThreshold {
    pub kind: CubicKind,
    /// Threshold from maximising the lure profile.
    pub yp: f64,
    pub tangency_i: f64,
    /// Same point from Newton's method on the tangency system.
    pub newton_yp: f64,
    pub newton_i: f64,
}

/// Solves `cubic = eta`, `cubic' = eta'` for `(I, Y_P)` starting from a guess.
fn newton_tangency(
    cs: &crate::equilibrium::CubicStructure,
    kind: CubicKind,
    mut i: f64,
    mut yp: f64,
) -> Option<(f64, f64)> {
    let kappa = cs.eta_scale;
    let k = cs.k;
    for _ in 0..50 {
        let f1 = cs.value(kind, i) - kappa * (1.0 - i / k) * yp;
        let f2 = cs.derivative(kind, i) + kappa * yp / k;
        let a11 = cs.derivative(kind, i) + kappa * yp / k;
        let a12 = -kappa * (1.0 - i / k);
        let a21 = cs.second_derivative(kind, i);
        let a22 = kappa / k;
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let di = (f1 * a22 - a12 * f2) / det;
        let dyp = (a11 * f2 - a21 * f1) / det;
        i -= di;
        yp -= dyp;
        if di.abs() <= 1e-14 * i.abs().max(1.0) && dyp.abs() <= 1e-14 * yp.abs().max(1.0) {
            return Some((i, yp));
        }
    }
    Some((i, yp))
}

/// Largest lure strength at which `cubic = eta` still has a root in the
/// admissible interval, cross-checked by Newton's method.
pub fn yp_double_star(
    p: &ModelParameters,
    alpha: f64,
    kind: CubicKind,
) -> Result<TangencyThreshold, ThresholdError> {
    let cs = cubic_structure(p, &ControlSettings::new(0.0, alpha));
    let upper = cs.upper(kind);
    if !(upper > 0.0) {
        return Err(ThresholdError::NoThreshold(format!(
            "admissible interval (0, {upper}) is empty"
        )));
    }
    let profile = |i: f64| cs.value(kind, i) / (cs.eta_scale * (1.0 - i / cs.k));
    let lo = PROFILE_MARGIN * upper;
    let hi = (1.0 - PROFILE_MARGIN) * upper;
    let grid: Vec<f64> = roots::linspace(lo, hi, PROFILE_GRID).collect();
    let (best, max) =
        grid.iter()
            .map(|&i| profile(i))
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
            );
    if !(max > 0.0) || best == 0 || best == PROFILE_GRID {
        return Err(ThresholdError::Unbracketed {
            upper,
            max,
            at: grid[best],
        });
    }
    let (tangency_i, yp) =
        roots::golden_section_max(profile, grid[best - 1], grid[best + 1], GOLDEN_TOL);
    let (newton_i, newton_yp) =
        newton_tangency(&cs, kind, tangency_i, yp).ok_or(ThresholdError::CrossCheck {
            ratio: yp,
            newton: f64::NAN,
        })?;
    if !((newton_yp - yp).abs() <= NEWTON_AGREEMENT * yp) {
        return Err(ThresholdError::CrossCheck {
            ratio: yp,
            newton: newton_yp,
        });
    }
    Ok(TangencyThreshold {
        kind,
        yp,
        tangency_i,
        newton_yp,
        newton_i,
    })
}

/// All thresholds at one trapping rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub alpha: f64,
    pub yp_star: f64,
    pub yp_double_star: f64,
    pub yp_double_star_tilde: f64,
    pub tangency_i: f64,
    pub tangency_i_tilde: f64,
}

impl ThresholdReport {
    /// `Y_P**(tilde) - Y_P**`, how loose the auxiliary bound is.
    pub fn gap(&self) -> f64 {
        self.yp_double_star_tilde - self.yp_double_star
    }
}

pub fn threshold_report(
    p: &ModelParameters,
    alpha: f64,
) -> Result<ThresholdReport, ThresholdError> {
    let star = yp_star(p, alpha)?;
    let dstar = yp_double_star(p, alpha, CubicKind::Psi)?;
    let tilde = yp_double_star(p, alpha, CubicKind::PsiTilde)?;
    Ok(ThresholdReport {
        alpha,
        yp_star: star,
        yp_double_star: dstar.yp,
        yp_double_star_tilde: tilde.yp,
        tangency_i: dstar.tangency_i,
        tangency_i_tilde: tilde.tangency_i,
    })
}

/// Thresholds for each trapping rate, in input order. A failing rate yields
/// an error in its row and does not stop the others.
pub fn threshold_sweep(
    p: &ModelParameters,
    alphas: &[f64],
) -> Vec<(f64, Result<ThresholdReport, ThresholdError>)> {
    alphas
        .par_iter()
        .map(|&alpha| (alpha, threshold_report(p, alpha)))
        .collect()
}
