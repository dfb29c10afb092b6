//! Long-run behaviour: attractor labels, basins of attraction, equilibrium
//! branches against the lure strength and the monotone comparison bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{endemic_state, equilibrium_catalog, EquilibriumLabel, Stability};
use crate::integrator::{integrate, integrate_until, IntegrationError, SolverOptions};
use crate::model::{Model, PopulationState, StateVector, SystemVariant};
use crate::params::{ControlSettings, ModelParameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AttractorLabel {
    Equilibrium(EquilibriumLabel),
    Nonconvergent,
}

impl AttractorLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AttractorLabel::Equilibrium(l) => l.as_str(),
            AttractorLabel::Nonconvergent => "nonconvergent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttractorOptions {
    pub t_max: f64,
    /// Time a trajectory must stay near an equilibrium to be labelled.
    pub dwell: f64,
    /// Neighbourhood radius relative to `max(1, |e|)`.
    pub rel_radius: f64,
    pub solver: SolverOptions,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        Self {
            t_max: 20_000.0,
            dwell: 50.0,
            rel_radius: 1e-3,
            solver: SolverOptions {
                h_max: 50.0,
                ..SolverOptions::with_tolerances(1e-6, 1e-9)
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttractorOutcome {
    pub label: AttractorLabel,
    pub final_time: f64,
    pub final_state: PopulationState,
}

/// Stable equilibria of the switched model that a trajectory can settle on.
pub fn stable_targets(
    p: &ModelParameters,
    c: &ControlSettings,
) -> Vec<(EquilibriumLabel, StateVector)> {
    equilibrium_catalog(p, c)
        .stable()
        .map(|e| (e.label, e.state.to_vector()))
        .collect()
}

fn classify_against(
    model: &Model,
    targets: &[(EquilibriumLabel, StateVector)],
    y0: &StateVector,
    opts: &AttractorOptions,
) -> Result<AttractorOutcome, IntegrationError> {
    let mut current: Option<(usize, f64)> = None;
    let mut settled: Option<usize> = None;
    let near = |x: &StateVector| {
        targets
            .iter()
            .position(|(_, e)| (x - e).amax() <= opts.rel_radius * e.amax().max(1.0))
    };
    if let Some(k) = near(y0) {
        current = Some((k, 0.0));
    }
    let traj = integrate_until(model, y0, 0.0, opts.t_max, &opts.solver, |t, x| {
        match (near(x), current) {
            (Some(k), Some((j, since))) if k == j => {
                if t - since >= opts.dwell {
                    settled = Some(k);
                    return true;
                }
            }
            (Some(k), _) => current = Some((k, t)),
            (None, _) => current = None,
        }
        false
    })?;
    let label = match settled {
        Some(k) => AttractorLabel::Equilibrium(targets[k].0),
        None => AttractorLabel::Nonconvergent,
    };
    Ok(AttractorOutcome {
        label,
        final_time: traj.final_time(),
        final_state: traj.final_state(),
    })
}

/// Integrates the switched control model from `y0` until it dwells near
/// one of its stable equilibria, or reports non-convergence at `t_max`.
pub fn classify_attractor(
    p: &ModelParameters,
    c: &ControlSettings,
    y0: &PopulationState,
    opts: &AttractorOptions,
) -> Result<AttractorOutcome, IntegrationError> {
    let model = Model::new(SystemVariant::FullControl, *p, *c);
    classify_against(&model, &stable_targets(p, c), &y0.to_vector(), opts)
}

/// How grid coordinates map to an initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Projection {
    /// First coordinate `M`, second the adult-female total `Y + F`, split
    /// in the endemic proportions, with `I` scaled by the same factor.
    MalesFemales,
    /// Two state components (0 = I, 1 = Y, 2 = F, 3 = M) varied on top of
    /// a fixed base state.
    Components {
        first: usize,
        second: usize,
        base: [f64; 4],
    },
}

impl Projection {
    pub fn axis_names(&self) -> (&'static str, &'static str) {
        const NAMES: [&str; 4] = ["I", "Y", "F", "M"];
        match self {
            Projection::MalesFemales => ("M", "Y+F"),
            Projection::Components { first, second, .. } => (NAMES[*first], NAMES[*second]),
        }
    }

    pub fn state(&self, p: &ModelParameters, u: f64, v: f64) -> PopulationState {
        match self {
            Projection::MalesFemales => {
                let ee = endemic_state(p).unwrap_or(PopulationState::new(1.0, 1.0, 1.0, 1.0));
                let total = ee.mating + ee.fertilised;
                let s = v / total;
                PopulationState::new(s * ee.immature, s * ee.mating, s * ee.fertilised, u)
            }
            Projection::Components {
                first,
                second,
                base,
            } => {
                let mut x = *base;
                x[*first] = u;
                x[*second] = v;
                PopulationState::from(x)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinSpec {
    pub projection: Projection,
    pub first_range: (f64, f64),
    pub second_range: (f64, f64),
    pub first_points: usize,
    pub second_points: usize,
    pub attractor: AttractorOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinCell {
    pub first: f64,
    pub second: f64,
    pub label: AttractorLabel,
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Attractor label at every grid point, ordered with the second coordinate
/// varying fastest. Points whose integration fails are `Nonconvergent`.
pub fn basin_grid(p: &ModelParameters, c: &ControlSettings, spec: &BasinSpec) -> Vec<BasinCell> {
    let model = Model::new(SystemVariant::FullControl, *p, *c);
    let targets = stable_targets(p, c);
    let us = axis(spec.first_range, spec.first_points);
    let vs = axis(spec.second_range, spec.second_points);
    let points: Vec<(f64, f64)> = us
        .iter()
        .flat_map(|&u| vs.iter().map(move |&v| (u, v)))
        .collect();
    points
        .par_iter()
        .map(|&(u, v)| {
            let y0 = spec.projection.state(p, u, v).to_vector();
            let label = classify_against(&model, &targets, &y0, &spec.attractor)
                .map(|o| o.label)
                .unwrap_or(AttractorLabel::Nonconvergent);
            BasinCell {
                first: u,
                second: v,
                label,
            }
        })
        .collect()
}

pub fn count_label(cells: &[BasinCell], label: AttractorLabel) -> usize {
    cells.iter().filter(|c| c.label == label).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationPoint {
    pub yp: f64,
    pub label: EquilibriumLabel,
    /// Adult females `Y + F` at the equilibrium.
    pub females: f64,
    pub immature: f64,
    pub stability: Stability,
}

/// Every equilibrium of the switched model at each lure strength.
pub fn bifurcation_curve(p: &ModelParameters, alpha: f64, lures: &[f64]) -> Vec<BifurcationPoint> {
    let rows: Vec<Vec<BifurcationPoint>> = lures
        .par_iter()
        .map(|&yp| {
            equilibrium_catalog(p, &ControlSettings::new(yp, alpha))
                .equilibria
                .iter()
                .map(|e| BifurcationPoint {
                    yp,
                    label: e.label,
                    females: e.state.females(),
                    immature: e.state.immature,
                    stability: e.stability,
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub holds: bool,
    /// Largest `x_i - x_tilde_i - tol` over the checked times (negative
    /// when the bound holds strictly).
    pub max_excess: f64,
    pub worst_time: f64,
    pub worst_component: usize,
    pub times_checked: usize,
    /// Final states of the switched and auxiliary runs.
    pub final_full: PopulationState,
    pub final_auxiliary: PopulationState,
}

/// Integrates the switched control model and the auxiliary monotone system
/// from the same state and checks `x(t) <= x_tilde(t)` componentwise, with
/// tolerance `1e-6 (1 + |x_tilde(t)|)`, at the accepted steps of both runs.
pub fn verify_comparison_bound(
    p: &ModelParameters,
    c: &ControlSettings,
    y0: &PopulationState,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<ComparisonReport, IntegrationError> {
    let full = integrate(
        &Model::new(SystemVariant::FullControl, *p, *c),
        &y0.to_vector(),
        0.0,
        t_end,
        opts,
    )?;
    let aux = integrate(
        &Model::new(SystemVariant::AuxiliaryMonotone, *p, *c),
        &y0.to_vector(),
        0.0,
        t_end,
        opts,
    )?;
    let mut times: Vec<f64> = full.times.iter().chain(&aux.times).copied().collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    let mut worst_component = 0;
    for &t in &times {
        let x = full.state_at(t);
        let z = aux.state_at(t);
        let tol = 1e-6 * (1.0 + z.amax());
        for i in 0..4 {
            let excess = x[i] - z[i] - tol;
            if excess > max_excess {
                max_excess = excess;
                worst_time = t;
                worst_component = i;
            }
        }
    }
    Ok(ComparisonReport {
        holds: max_excess <= 0.0,
        max_excess,
        worst_time,
        worst_component,
        times_checked: times.len(),
        final_full: full.final_state(),
        final_auxiliary: aux.final_state(),
    })
}
