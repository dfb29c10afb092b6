//! Adaptive TR-BDF2 integration with dense output, plus a fixed-step RK4
//! reference.
//!
//! One step of size `h` takes a trapezoidal stage to `t + gamma h` and a
//! BDF2 stage to `t + h`, with `gamma = 2 - sqrt 2` so that both stages
//! share the iteration matrix `I - (gamma/2) h J`. The local error estimate
//! is the usual divided-difference formula filtered through that matrix.

use nalgebra::{Matrix4, LU, U4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{classify_regime, Model, PopulationState, Regime, StateVector, SystemVariant};

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
const D: f64 = GAMMA / 2.0;
/// Leading error constant of the scheme.
const ERR_CONST: f64 = (-3.0 * GAMMA * GAMMA + 4.0 * GAMMA - 2.0) / (12.0 * (2.0 - GAMMA));
const NEWTON_MAX_ITER: usize = 10;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub t_end: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_init: 1e-2,
            h_min: 1e-12,
            h_max: 10.0,
            t_end: 2000.0,
            max_steps: 2_000_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(format!(
                "tolerances must be positive (rel_tol {}, abs_tol {})",
                self.rel_tol, self.abs_tol
            ));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(format!(
                "step sizes must satisfy 0 < h_min <= h_init <= h_max (got {}, {}, {})",
                self.h_min, self.h_init, self.h_max
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(format!(
                "t_end must be finite and >= 0 (got {})",
                self.t_end
            ));
        }
        if self.max_steps == 0 {
            return Err("max_steps must be positive".into());
        }
        Ok(())
    }

    /// Newton stops when the update is below this fraction of `max(1, |z|)`.
    fn newton_tol(&self) -> f64 {
        0.1 * self.rel_tol.min(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub newton_failures: usize,
    pub jacobian_evals: usize,
    /// Jacobians taken by finite differences because the analytic one was
    /// undefined.
    pub fd_jacobians: usize,
    pub rhs_evals: usize,
}

/// A slightly negative component set to zero after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClampEvent {
    pub t: f64,
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeCrossing {
    pub t: f64,
    pub from: Regime,
    pub to: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub derivatives: Vec<StateVector>,
    pub stats: StepStats,
    pub clamps: Vec<ClampEvent>,
    /// Crossings of the switching surface `gamma M = Y + Y_P`.
    pub crossings: Vec<RegimeCrossing>,
}

impl Trajectory {
    fn start(t0: f64, y0: StateVector, f0: StateVector) -> Self {
        Self {
            times: vec![t0],
            states: vec![y0],
            derivatives: vec![f0],
            stats: StepStats::default(),
            clamps: Vec::new(),
            crossings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has a start point")
    }

    pub fn final_state(&self) -> PopulationState {
        PopulationState::from_vector(self.states.last().expect("trajectory has a start point"))
    }

    /// Cubic Hermite interpolation on the accepted steps. Times outside the
    /// integrated range are clamped to its ends.
    pub fn state_at(&self, t: f64) -> StateVector {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.states[0];
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        self.states[k] * h00
            + self.derivatives[k] * (h10 * h)
            + self.states[k + 1] * h01
            + self.derivatives[k + 1] * (h11 * h)
    }

    pub fn resample(&self, times: &[f64]) -> Vec<StateVector> {
        times.iter().map(|&t| self.state_at(t)).collect()
    }

    /// Sign changes of `gamma M - (Y + Y_P)` between accepted steps, located
    /// by linear interpolation.
    pub fn regime_crossings(&self, model: &Model) -> Vec<RegimeCrossing> {
        detect_regime_crossings(model, &self.times, &self.states)
    }
}

pub fn detect_regime_crossings(
    model: &Model,
    times: &[f64],
    states: &[StateVector],
) -> Vec<RegimeCrossing> {
    let margin = |x: &StateVector| model.params.gamma * x[3] - (x[1] + model.control.lure);
    let regime = |x: &StateVector| {
        classify_regime(
            &model.params,
            &model.control,
            &PopulationState::from_vector(x),
        )
    };
    let mut out = Vec::new();
    let mut last = 0;
    for k in 1..states.len() {
        let from = regime(&states[last]);
        let to = regime(&states[k]);
        if to == Regime::Boundary {
            continue;
        }
        if from != to && from != Regime::Boundary {
            let (g0, g1) = (margin(&states[k - 1]), margin(&states[k]));
            let w = if g0 != g1 { g0 / (g0 - g1) } else { 0.5 };
            let t = times[k - 1] + w.clamp(0.0, 1.0) * (times[k] - times[k - 1]);
            out.push(RegimeCrossing { t, from, to });
        }
        last = k;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("step size {h:e} fell below the minimum at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("{source}")]
    Step {
        source: StepError,
        /// Accepted steps up to the failure.
        partial: Box<Trajectory>,
    },
    #[error("reference solution diverged at t = {t} (norm {norm:e})")]
    Diverged { t: f64, norm: f64 },
    #[error("invalid integration interval [{t0}, {t_end}] or step")]
    InvalidInterval { t0: f64, t_end: f64 },
}

impl IntegrationError {
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            IntegrationError::Step { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Solves `z - d h f(z) = rhs` by damped Newton with a fixed iteration matrix.
enum NewtonOutcome {
    Converged(StateVector),
    Failed,
}

/// TR-BDF2 stepper that can be advanced one accepted step at a time.
pub struct TrBdf2 {
    model: Model,
    opts: SolverOptions,
    t: f64,
    y: StateVector,
    f: StateVector,
    h: f64,
    positivity: [bool; 4],
    pub stats: StepStats,
    pub clamps: Vec<ClampEvent>,
}

impl TrBdf2 {
    pub fn new(model: Model, t0: f64, y0: StateVector, opts: SolverOptions) -> Self {
        let f = model.rhs(&y0);
        // the decoupled Y of the uncontrolled scarcity system may turn negative
        let positivity = if model.variant == SystemVariant::ScarcityNoControl {
            [true, false, true, true]
        } else {
            [true; 4]
        };
        Self {
            model,
            opts,
            t: t0,
            y: y0,
            f,
            h: opts.h_init.min(opts.h_max),
            positivity,
            stats: StepStats {
                rhs_evals: 1,
                ..StepStats::default()
            },
            clamps: Vec::new(),
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> StateVector {
        self.y
    }

    pub fn derivative(&self) -> StateVector {
        self.f
    }

    fn rhs(&mut self, x: &StateVector) -> StateVector {
        self.stats.rhs_evals += 1;
        self.model.rhs(x)
    }

    fn jacobian(&mut self, x: &StateVector) -> Matrix4<f64> {
        self.stats.jacobian_evals += 1;
        match self.model.jacobian(x) {
            Ok(j) => j,
            Err(_) => {
                self.stats.fd_jacobians += 1;
                self.stats.rhs_evals += 8;
                self.model.jacobian_fd(x)
            }
        }
    }

    fn weights(&self, a: &StateVector, b: &StateVector) -> StateVector {
        StateVector::from_fn(|i, _| {
            self.opts.abs_tol + self.opts.rel_tol * a[i].abs().max(b[i].abs())
        })
    }

    fn newton(
        &mut self,
        lu: &LU<f64, U4, U4>,
        h: f64,
        rhs_const: &StateVector,
        guess: StateVector,
        w: &StateVector,
    ) -> NewtonOutcome {
        let tol = self.opts.newton_tol();
        let residual = |s: &mut Self, z: &StateVector| z - s.rhs(z) * (D * h) - rhs_const;
        let mut z = guess;
        let mut g = residual(self, &z);
        let mut prev_norm = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let Some(dz) = lu.solve(&(-g)) else {
                return NewtonOutcome::Failed;
            };
            let norm = dz.amax();
            if !norm.is_finite() || norm > 2.0 * prev_norm {
                return NewtonOutcome::Failed;
            }
            // damp the update while the residual grows
            let g_norm = g.component_div(w).amax();
            let mut lambda = 1.0;
            let mut z_new = z + dz;
            let mut g_new = residual(self, &z_new);
            for _ in 0..4 {
                if g_new.component_div(w).amax() <= g_norm || !g_norm.is_finite() {
                    break;
                }
                lambda *= 0.5;
                z_new = z + dz * lambda;
                g_new = residual(self, &z_new);
            }
            z = z_new;
            g = g_new;
            if norm * lambda <= tol * z.amax().max(1.0) {
                return NewtonOutcome::Converged(z);
            }
            prev_norm = norm;
        }
        NewtonOutcome::Failed
    }

    /// One attempt at a step of size `h`; returns the new state, its
    /// derivative and the scaled error norm.
    fn attempt(&mut self, h: f64) -> Option<(StateVector, StateVector, f64)> {
        let mut jac = self.jacobian(&self.y.clone());
        let mut refreshed = false;
        loop {
            let iter_matrix = Matrix4::identity() - jac * (D * h);
            let lu = iter_matrix.lu();
            let w = self.weights(&self.y, &self.y);

            let trap_const = self.y + self.f * (D * h);
            let guess = self.y + self.f * (GAMMA * h);
            let stage = match self.newton(&lu, h, &trap_const, guess, &w) {
                NewtonOutcome::Converged(z) => z,
                NewtonOutcome::Failed => {
                    self.stats.newton_failures += 1;
                    if refreshed {
                        return None;
                    }
                    refreshed = true;
                    jac = self.jacobian(&(self.y + self.f * (GAMMA * h)));
                    continue;
                }
            };
            let f_stage = self.rhs(&stage);

            let c_stage = 1.0 / (GAMMA * (2.0 - GAMMA));
            let c_prev = (1.0 - GAMMA) * (1.0 - GAMMA) / (GAMMA * (2.0 - GAMMA));
            let bdf_const = stage * c_stage - self.y * c_prev;
            let guess = self.y + self.f * h;
            let y_new = match self.newton(&lu, h, &bdf_const, guess, &w) {
                NewtonOutcome::Converged(z) => z,
                NewtonOutcome::Failed => {
                    self.stats.newton_failures += 1;
                    if refreshed {
                        return None;
                    }
                    refreshed = true;
                    jac = self.jacobian(&stage);
                    continue;
                }
            };
            let f_new = self.rhs(&y_new);

            let raw = ((f_new - f_stage) / (1.0 - GAMMA) - (f_stage - self.f) / GAMMA)
                * (2.0 * ERR_CONST * h);
            let est = lu.solve(&raw).unwrap_or(raw);
            let w = self.weights(&self.y, &y_new);
            let err = est.component_div(&w).amax();
            return Some((y_new, f_new, err));
        }
    }

    /// Advances by one accepted step without passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<(), StepError> {
        let mut h = self.h.min(self.opts.h_max);
        loop {
            let remaining = t_limit - self.t;
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h < self.opts.h_min && !last {
                return Err(StepError::StepSizeUnderflow { t: self.t, h });
            }
            let outcome = self.attempt(h);
            let Some((mut y_new, f_new, err)) = outcome else {
                self.stats.rejected += 1;
                h *= 0.25;
                continue;
            };
            let finite = y_new.iter().all(|x| x.is_finite());
            let negative = (0..4).any(|i| self.positivity[i] && y_new[i] < -self.opts.abs_tol);
            if !finite || negative {
                self.stats.rejected += 1;
                h *= 0.5;
                continue;
            }
            if !(err <= 1.0) {
                self.stats.rejected += 1;
                let factor = (SAFETY * err.powf(-1.0 / 3.0)).clamp(MIN_FACTOR, 1.0);
                h *= if factor.is_finite() {
                    factor
                } else {
                    MIN_FACTOR
                };
                continue;
            }

            let t_new = if last { t_limit } else { self.t + h };
            let mut clamped = false;
            for i in 0..4 {
                if self.positivity[i] && y_new[i] < 0.0 {
                    self.clamps.push(ClampEvent {
                        t: t_new,
                        component: i,
                        value: y_new[i],
                    });
                    y_new[i] = 0.0;
                    clamped = true;
                }
            }
            self.f = if clamped { self.rhs(&y_new) } else { f_new };
            self.y = y_new;
            self.t = t_new;
            self.stats.accepted += 1;
            let factor = if err > 0.0 {
                (SAFETY * err.powf(-1.0 / 3.0)).clamp(MIN_FACTOR, MAX_FACTOR)
            } else {
                MAX_FACTOR
            };
            // keep the pre-truncation size so a short final step does not shrink h
            let base = if last { self.h.max(h) } else { h };
            self.h = (base * factor).min(self.opts.h_max);
            return Ok(());
        }
    }
}

fn check_interval(t0: f64, t_end: f64) -> Result<(), IntegrationError> {
    if t0.is_finite() && t_end.is_finite() && t_end >= t0 {
        Ok(())
    } else {
        Err(IntegrationError::InvalidInterval { t0, t_end })
    }
}

/// Integrates `model` from `y0` at `t0` to `t_end`, recording every step.
pub fn integrate(
    model: &Model,
    y0: &StateVector,
    t0: f64,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<Trajectory, IntegrationError> {
    integrate_until(model, y0, t0, t_end, opts, |_, _| false)
}

/// As [`integrate`], stopping early after the first step where `stop`
/// returns true.
pub fn integrate_until<S: FnMut(f64, &StateVector) -> bool>(
    model: &Model,
    y0: &StateVector,
    t0: f64,
    t_end: f64,
    opts: &SolverOptions,
    mut stop: S,
) -> Result<Trajectory, IntegrationError> {
    check_interval(t0, t_end)?;
    let mut stepper = TrBdf2::new(*model, t0, *y0, *opts);
    let mut traj = Trajectory::start(t0, *y0, stepper.derivative());
    while stepper.time() < t_end {
        let result = if traj.len() > opts.max_steps {
            Err(StepError::MaxSteps { t: stepper.time() })
        } else {
            stepper.step(t_end)
        };
        if let Err(source) = result {
            traj.stats = stepper.stats;
            traj.clamps = stepper.clamps;
            return Err(IntegrationError::Step {
                source,
                partial: Box::new(traj),
            });
        }
        traj.times.push(stepper.time());
        traj.states.push(stepper.state());
        traj.derivatives.push(stepper.derivative());
        if stop(stepper.time(), &stepper.state()) {
            break;
        }
    }
    traj.stats = stepper.stats;
    traj.clamps = stepper.clamps;
    traj.crossings = detect_regime_crossings(model, &traj.times, &traj.states);
    Ok(traj)
}

/// Integrates `variant` from `s0` over `[0, opts.t_end]`.
pub fn simulate(
    variant: SystemVariant,
    p: &crate::params::ModelParameters,
    c: &crate::params::ControlSettings,
    s0: &PopulationState,
    opts: &SolverOptions,
) -> Result<Trajectory, IntegrationError> {
    integrate(
        &Model::new(variant, *p, *c),
        &s0.to_vector(),
        0.0,
        opts.t_end,
        opts,
    )
}

/// Classical fixed-step RK4, recording every `record_every`-th step and the
/// final point.
pub fn integrate_reference(
    model: &Model,
    y0: &StateVector,
    t0: f64,
    t_end: f64,
    h: f64,
    record_every: usize,
) -> Result<Trajectory, IntegrationError> {
    check_interval(t0, t_end)?;
    if !(h > 0.0) || record_every == 0 {
        return Err(IntegrationError::InvalidInterval { t0, t_end });
    }
    let steps = ((t_end - t0) / h).round() as usize;
    let h = if steps > 0 {
        (t_end - t0) / steps as f64
    } else {
        0.0
    };
    let mut y = *y0;
    let mut traj = Trajectory::start(t0, y, model.rhs(&y));
    for n in 1..=steps {
        let t = t0 + (n - 1) as f64 * h;
        let k1 = model.rhs(&y);
        let k2 = model.rhs(&(y + k1 * (0.5 * h)));
        let k3 = model.rhs(&(y + k2 * (0.5 * h)));
        let k4 = model.rhs(&(y + k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        traj.stats.rhs_evals += 4;
        traj.stats.accepted += 1;
        let norm = y.amax();
        if !norm.is_finite() || norm > 1e12 {
            return Err(IntegrationError::Diverged { t: t + h, norm });
        }
        if n % record_every == 0 || n == steps {
            traj.times
                .push(if n == steps { t_end } else { t0 + n as f64 * h });
            traj.states.push(y);
            traj.derivatives.push(model.rhs(&y));
        }
    }
    traj.crossings = detect_regime_crossings(model, &traj.times, &traj.states);
    Ok(traj)
}
