//! Experiment runners shared by the subcommands and `repro`.

use std::io;
use std::path::{Path, PathBuf};

use matdyn::equilibrium::{equilibrium_catalog, Stability};
use matdyn::integrator::simulate as integrate_variant;
use matdyn::phase::{
    basin_grid, bifurcation_curve, count_label, verify_comparison_bound, AttractorLabel, BasinSpec,
};
use matdyn::threshold::{threshold_sweep, ThresholdReport};
use matdyn::{ControlSettings, PopulationState};
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::output::{self, write_failed_marker};
use crate::repro;
use crate::svg::{Plot, Series, Style, PALETTE};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    /// 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numerical(_) | RunError::Io(_) => 2,
        }
    }
}

/// Files written and lines to print.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl RunOutput {
    fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }
}

/// Records a numerical failure next to the partial output.
pub fn numerical_failure(out: &Path, name: &str, message: String) -> RunError {
    if let Err(e) = write_failed_marker(out, name, &message) {
        return RunError::Io(e);
    }
    RunError::Numerical(message)
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    experiment: Experiment,
    out: &Path,
) -> Result<RunOutput, RunError> {
    match experiment {
        Experiment::Simulate => simulate(cfg, out),
        Experiment::Equilibria => equilibria(cfg, out),
        Experiment::Thresholds => thresholds(cfg, out),
        Experiment::Bifurcation => bifurcation(cfg, out),
        Experiment::Basins => basins(cfg, out),
        Experiment::VerifyBounds => verify_bounds(cfg, out),
        Experiment::Repro => match &cfg.repro.id {
            Some(id) => repro::run(id, out, cfg.plots),
            None => Err(ConfigError::Invalid {
                field: "repro.id".into(),
                message: format!(
                    "required for the repro experiment; one of {}",
                    repro::IDS.join(", ")
                ),
            }
            .into()),
        },
    }
}

/// Control settings seen by a variant: the uncontrolled ones ignore lures.
fn effective_control(cfg: &ExperimentConfig) -> ControlSettings {
    if cfg.simulate.variant.uses_control() {
        cfg.control
    } else {
        ControlSettings::NONE
    }
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, RunError> {
    let mut res = RunOutput::default();
    let c = effective_control(cfg);
    let path = out.join("trajectory.csv");
    let traj = match integrate_variant(
        cfg.simulate.variant,
        &cfg.parameters,
        &c,
        &cfg.initial_state(),
        &cfg.solver,
    ) {
        Ok(t) => t,
        Err(e) => {
            if let Some(partial) = e.partial() {
                res.files.push(output::write_trajectory(
                    &path,
                    &cfg.parameters,
                    &c,
                    partial,
                    cfg.simulate.output_step,
                )?);
            }
            return Err(numerical_failure(out, "trajectory", e.to_string()));
        }
    };
    res.files.push(output::write_trajectory(
        &path,
        &cfg.parameters,
        &c,
        &traj,
        cfg.simulate.output_step,
    )?);
    let last = traj.final_state();
    res.say(format!(
        "t = {:.1}: I = {:.4}, Y = {:.4}, F = {:.4}, M = {:.4}",
        traj.final_time(),
        last.immature,
        last.mating,
        last.fertilised,
        last.males
    ));
    res.say(format!(
        "{} accepted steps, {} rejected, {} regime crossings, {} clamps",
        traj.stats.accepted,
        traj.stats.rejected,
        traj.crossings.len(),
        traj.clamps.len()
    ));
    if cfg.plots {
        let mut plot = Plot::new(
            &format!("{} trajectory", cfg.simulate.variant_name()),
            "t (days)",
            "population",
        );
        for (k, name) in ["I", "Y", "F", "M"].iter().enumerate() {
            let pts = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(t, x)| (*t, x[k]))
                .collect();
            plot.add(Series::new(*name, pts, Style::Line, PALETTE[k]));
        }
        res.files.push(plot.save(&out.join("trajectory.svg"))?);
    }
    Ok(res)
}

pub fn equilibria(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, RunError> {
    let mut res = RunOutput::default();
    let report = equilibrium_catalog(&cfg.parameters, &cfg.control);
    res.files.push(output::write_equilibria(
        &out.join("equilibria.csv"),
        &report,
    )?);
    res.say(format!(
        "Y_P = {}, alpha = {}: {:?}",
        cfg.control.lure, cfg.control.alpha, report.case
    ));
    if let (Some(s), Some(d)) = (report.yp_star, report.yp_double_star) {
        res.say(format!("Y_P* = {s:.3}, Y_P** = {d:.3}"));
    }
    for e in &report.equilibria {
        let x = e.state;
        res.say(format!(
            "{:<8} ({:.4}, {:.4}, {:.4}, {:.4}) {} {}",
            e.label.as_str(),
            x.immature,
            x.mating,
            x.fertilised,
            x.males,
            e.region.as_str(),
            e.stability.as_str()
        ));
    }
    for w in &report.warnings {
        res.say(format!("warning: {w}"));
    }
    Ok(res)
}

/// Threshold sweep; rows that fail are reported and flag the output.
pub fn threshold_rows(
    cfg: &ExperimentConfig,
    alphas: &[f64],
) -> (Vec<ThresholdReport>, Vec<String>) {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (alpha, r) in threshold_sweep(&cfg.parameters, alphas) {
        match r {
            Ok(r) => rows.push(r),
            Err(e) => failures.push(format!("alpha = {alpha}: {e}")),
        }
    }
    (rows, failures)
}

pub fn threshold_plot(rows: &[ThresholdReport]) -> Plot {
    let mut plot = Plot::new("Lure thresholds against trapping rate", "alpha", "Y_P");
    plot.log_y = true;
    let col = |f: fn(&ThresholdReport) -> f64| rows.iter().map(|r| (r.alpha, f(r))).collect();
    plot.add(Series::new(
        "Y_P*",
        col(|r| r.yp_star),
        Style::Line,
        PALETTE[0],
    ));
    plot.add(Series::new(
        "Y_P**",
        col(|r| r.yp_double_star),
        Style::Line,
        PALETTE[1],
    ));
    plot.add(Series::new(
        "auxiliary Y_P**",
        col(|r| r.yp_double_star_tilde),
        Style::Dotted,
        PALETTE[2],
    ));
    plot
}

pub fn thresholds(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, RunError> {
    let mut res = RunOutput::default();
    let (rows, failures) = threshold_rows(cfg, &cfg.thresholds.alphas);
    res.files.push(output::write_thresholds(
        &out.join("thresholds.csv"),
        &rows,
    )?);
    for r in &rows {
        res.say(format!(
            "alpha = {:<6} Y_P* = {:>12.3}  Y_P** = {:>14.3}  auxiliary = {:>14.3}",
            r.alpha, r.yp_star, r.yp_double_star, r.yp_double_star_tilde
        ));
    }
    if cfg.plots && !rows.is_empty() {
        res.files
            .push(threshold_plot(&rows).save(&out.join("thresholds.svg"))?);
    }
    if !failures.is_empty() {
        return Err(numerical_failure(out, "thresholds", failures.join("\n")));
    }
    Ok(res)
}

/// Bifurcation diagram, solid for stable branches and dotted otherwise.
pub fn bifurcation_plot(rows: &[matdyn::phase::BifurcationPoint], title: &str) -> Plot {
    let mut plot = Plot::new(title, "Y_P", "Y + F at equilibrium");
    plot.log_x = true;
    let mut keys: Vec<(matdyn::equilibrium::EquilibriumLabel, Stability)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.label, r.stability)) {
            keys.push((r.label, r.stability));
        }
    }
    for (k, (label, stability)) in keys.iter().enumerate() {
        let pts = rows
            .iter()
            .filter(|r| r.label == *label && r.stability == *stability)
            .map(|r| (r.yp, r.females))
            .collect();
        let style = if *stability == Stability::AsymptoticallyStable {
            Style::Line
        } else {
            Style::Dotted
        };
        let name = format!("{} ({})", label.as_str(), stability.as_str());
        plot.add(Series::new(name, pts, style, PALETTE[k % PALETTE.len()]));
    }
    plot
}

pub fn bifurcation(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, RunError> {
    let mut res = RunOutput::default();
    let alpha = cfg.bifurcation.alpha.unwrap_or(cfg.control.alpha);
    let rows = bifurcation_curve(&cfg.parameters, alpha, &cfg.bifurcation.lures());
    res.files.push(output::write_bifurcation(
        &out.join("bifurcation.csv"),
        &rows,
    )?);
    res.say(format!(
        "{} equilibrium rows over {} lure values",
        rows.len(),
        cfg.bifurcation.points
    ));
    if cfg.plots {
        let plot = bifurcation_plot(
            &rows,
            &format!("Equilibria against lure strength, alpha = {alpha}"),
        );
        res.files.push(plot.save(&out.join("bifurcation.svg"))?);
    }
    Ok(res)
}

pub fn basin_plot(cells: &[matdyn::phase::BasinCell], axes: (&str, &str), title: &str) -> Plot {
    let mut plot = Plot::new(title, axes.0, axes.1);
    let mut labels: Vec<AttractorLabel> = Vec::new();
    for c in cells {
        if !labels.contains(&c.label) {
            labels.push(c.label);
        }
    }
    labels.sort_by_key(|l| l.as_str());
    let te = AttractorLabel::Equilibrium(matdyn::equilibrium::EquilibriumLabel::Te);
    let mut other = 0;
    for label in &labels {
        let pts = cells
            .iter()
            .filter(|c| c.label == *label)
            .map(|c| (c.first, c.second))
            .collect();
        let series = if *label == te {
            Series::new(label.as_str(), pts, Style::Circles, PALETTE[1])
        } else {
            other += 1;
            let colour = [PALETTE[0], PALETTE[4], PALETTE[3]][(other - 1) % 3];
            Series::new(label.as_str(), pts, Style::Crosses, colour)
        };
        plot.add(series);
    }
    plot
}

pub fn basins(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, RunError> {
    let mut res = RunOutput::default();
    let b = &cfg.basins;
    let spec = BasinSpec {
        projection: b.projection.to_projection(),
        first_range: (b.first_range[0], b.first_range[1]),
        second_range: (b.second_range[0], b.second_range[1]),
        first_points: b.first_points,
        second_points: b.second_points,
        attractor: b.attractor,
    };
    let cells = basin_grid(&cfg.parameters, &cfg.control, &spec);
    res.files
        .push(output::write_basins(&out.join("basins.csv"), &cells)?);
    let mut labels: Vec<AttractorLabel> = cells.iter().map(|c| c.label).collect();
    labels.sort_by_key(|l| l.as_str());
    labels.dedup();
    for l in &labels {
        res.say(format!("{}: {} cells", l.as_str(), count_label(&cells, *l)));
    }
    if cfg.plots {
        let title = format!(
            "Basins, Y_P = {}, alpha = {}",
            cfg.control.lure, cfg.control.alpha
        );
        let plot = basin_plot(&cells, spec.projection.axis_names(), &title);
        res.files.push(plot.save(&out.join("basins.svg"))?);
    }
    let stuck = count_label(&cells, AttractorLabel::Nonconvergent);
    if stuck > 0 {
        return Err(numerical_failure(
            out,
            "basins",
            format!("{stuck} grid points did not settle on a stable equilibrium"),
        ));
    }
    Ok(res)
}

pub fn verify_bounds(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, RunError> {
    let mut res = RunOutput::default();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for x0 in &cfg.verify_bounds.initial_states {
        match verify_comparison_bound(
            &cfg.parameters,
            &cfg.control,
            &PopulationState::from(*x0),
            cfg.verify_bounds.t_end,
            &cfg.solver,
        ) {
            Ok(r) => rows.push((*x0, r)),
            Err(e) => failures.push(format!("{x0:?}: {e}")),
        }
    }
    res.files
        .push(output::write_bounds(&out.join("bounds.csv"), &rows)?);
    let held = rows.iter().filter(|(_, r)| r.holds).count();
    res.say(format!(
        "comparison bound holds on {held} of {} initial states",
        rows.len()
    ));
    if !failures.is_empty() {
        return Err(numerical_failure(out, "bounds", failures.join("\n")));
    }
    if held < rows.len() {
        return Err(numerical_failure(
            out,
            "bounds",
            "switched solution exceeds the auxiliary bound".into(),
        ));
    }
    Ok(res)
}
