//! Pinned reproductions of the reference numerical experiments.
//!
//! Each id writes CSV (and SVG) files to `<out>/<id>/`, prints its headline
//! values and a PASS/FAIL verdict against the acceptance tolerances, and
//! records the verdict in `<out>/<id>/verdict.txt`.

use std::fs;
use std::path::Path;

use matdyn::equilibrium::{
    endemic_equilibrium, endemic_state, equilibrium_catalog, CatalogCase, EquilibriumLabel,
};
use matdyn::integrator::{integrate, SolverOptions, Trajectory};
use matdyn::model::classify_regime;
use matdyn::phase::{
    basin_grid, bifurcation_curve, classify_attractor, count_label, AttractorLabel,
    AttractorOptions, BasinSpec, Projection,
};
use matdyn::reproduction::reproduction_report;
use matdyn::threshold::{threshold_report, yp_double_star, yp_star, CubicKind, ThresholdReport};
use matdyn::{ControlSettings, Model, ModelParameters, PopulationState, SystemVariant};
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{self, num, state_fields, CsvFile, TRAJECTORY_COLUMNS};
use crate::run::{
    basin_plot, bifurcation_plot, numerical_failure, threshold_plot, threshold_rows, RunError,
    RunOutput,
};
use crate::svg::{Plot, Series, Style, PALETTE};

pub const IDS: [&str; 11] = [
    "n0",
    "ee-star",
    "fig3",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "fig10",
    "fig11",
    "fig12",
    "reduction49",
];

/// Lure strengths below `Y_P*` used for the low-effort runs, per trapping
/// rate (the 49% comparison is made against these).
const LOW_LURE: [(f64, f64); 2] = [(0.0, 5500.0), (0.1, 500.0)];

/// Phase-plane starting points as `(M, Y + F)`, lifted with the endemic
/// proportions.
const PHASE_STARTS: [(f64, f64); 12] = [
    (2.0, 0.1),
    (20.0, 0.2),
    (50.0, 10.0),
    (200.0, 50.0),
    (1500.0, 100.0),
    (100.0, 1500.0),
    (800.0, 800.0),
    (2000.0, 2000.0),
    (3000.0, 500.0),
    (500.0, 3000.0),
    (1200.0, 2500.0),
    (2500.0, 1200.0),
];

/// Interior starting points for the uncontrolled runs, `(I, Y, F, M)`.
const FREE_STARTS: [[f64; 4]; 10] = [
    [50.0, 10.0, 10.0, 10.0],
    [900.0, 50.0, 50.0, 1800.0],
    [200.0, 1000.0, 100.0, 50.0],
    [1000.0, 300.0, 2500.0, 300.0],
    [10.0, 1.0, 5.0, 2.0],
    [600.0, 600.0, 600.0, 600.0],
    [100.0, 2000.0, 2000.0, 2000.0],
    [5.0, 1.0, 1.0, 40.0],
    [400.0, 100.0, 1500.0, 3000.0],
    [950.0, 10.0, 2000.0, 100.0],
];

struct Report<'a> {
    dir: &'a Path,
    out: RunOutput,
    verdicts: Vec<(String, bool)>,
}

impl<'a> Report<'a> {
    fn new(dir: &'a Path) -> Self {
        Self {
            dir,
            out: RunOutput::default(),
            verdicts: Vec::new(),
        }
    }

    fn say(&mut self, line: impl Into<String>) {
        self.out.summary.push(line.into());
    }

    fn check(&mut self, name: &str, pass: bool) {
        self.say(format!("{}: {name}", if pass { "PASS" } else { "FAIL" }));
        self.verdicts.push((name.to_string(), pass));
    }

    fn file(&mut self, path: std::path::PathBuf) {
        self.out.files.push(path);
    }

    fn finish(mut self) -> Result<RunOutput, RunError> {
        let pass = self.verdicts.iter().all(|(_, p)| *p);
        let mut text = String::new();
        for (name, p) in &self.verdicts {
            text.push_str(&format!("{} {name}\n", if *p { "PASS" } else { "FAIL" }));
        }
        text.push_str(if pass {
            "overall PASS\n"
        } else {
            "overall FAIL\n"
        });
        let path = self.dir.join("verdict.txt");
        fs::write(&path, text)?;
        self.out.files.push(path);
        self.say(format!("overall {}", if pass { "PASS" } else { "FAIL" }));
        Ok(self.out)
    }
}

fn p1() -> ModelParameters {
    ModelParameters::reference()
}

fn unknown(id: &str) -> RunError {
    ConfigError::Invalid {
        field: "repro id".into(),
        message: format!("unknown id `{id}`; available: {}", IDS.join(", ")),
    }
    .into()
}

pub fn run(id: &str, out: &Path, plots: bool) -> Result<RunOutput, RunError> {
    if !IDS.contains(&id) {
        return Err(unknown(id));
    }
    let dir = out.join(id);
    fs::create_dir_all(&dir)?;
    let rep = Report::new(&dir);
    match id {
        "n0" => n0(rep),
        "ee-star" => ee_star(rep),
        "fig3" => fig3(rep, plots),
        "fig6" => fig6(rep, plots),
        "fig7" => fig7(rep, plots),
        "fig8" => fig8(rep, plots),
        "fig9" => fig9(rep, plots),
        "fig10" => phase_portraits(rep, plots, 0.9999, "fig10"),
        "fig11" => phase_portraits(rep, plots, 1.0001, "fig11"),
        "fig12" => fig12(rep, plots),
        "reduction49" => reduction49(rep),
        _ => Err(unknown(id)),
    }
}

fn n0(mut rep: Report) -> Result<RunOutput, RunError> {
    let r =
        reproduction_report(&p1()).map_err(|e| numerical_failure(rep.dir, "n0", e.to_string()))?;
    let mut csv = CsvFile::create(&rep.dir.join("n0.csv"), &["quantity", "value"])?;
    csv.row(["N0", &num(r.n0)])?;
    csv.row(["N0_ngm", &num(r.n0_ngm)])?;
    csv.row(["N0_scarcity", &num(r.n0_hat)])?;
    rep.file(csv.finish()?);
    rep.say(format!(
        "N0 = {:.6} (rounded {}), next-generation route {:.6}",
        r.n0,
        r.n0.round(),
        r.n0_ngm
    ));
    rep.check("N0 rounds to 122", r.n0.round() == 122.0);
    rep.check(
        "closed form and spectral radius agree to 1e-10",
        (r.n0 - r.n0_ngm).abs() <= 1e-10 * r.n0,
    );
    rep.finish()
}

fn ee_star(mut rep: Report) -> Result<RunOutput, RunError> {
    let p = p1();
    let ee = endemic_equilibrium(&p)
        .map_err(|e| numerical_failure(rep.dir, "ee-star", e.to_string()))?;
    let report = equilibrium_catalog(&p, &ControlSettings::NONE);
    rep.file(output::write_equilibria(
        &rep.dir.join("equilibria.csv"),
        &report,
    )?);
    let x = ee.state.to_array();
    let rounded = x.map(f64::round);
    rep.say(format!(
        "EE* = ({:.4}, {:.4}, {:.4}, {:.4}) rounds to ({}, {}, {}, {})",
        x[0], x[1], x[2], x[3], rounded[0], rounded[1], rounded[2], rounded[3]
    ));
    rep.say(format!(
        "residual {:.3e}, stability {}",
        ee.residual,
        ee.stability.as_str()
    ));
    rep.check(
        "EE* rounds to (992, 319, 1407, 1498)",
        rounded == [992.0, 319.0, 1407.0, 1498.0],
    );
    rep.check("residual below 1e-9 K", ee.residual <= 1e-9 * p.k);
    rep.finish()
}

/// Integrates the switched model from each start, in parallel, for plotting.
fn trajectories(
    variant: SystemVariant,
    p: &ModelParameters,
    c: &ControlSettings,
    starts: &[PopulationState],
    t_end: f64,
) -> Result<Vec<Trajectory>, String> {
    let opts = SolverOptions {
        h_max: 20.0,
        ..SolverOptions::with_tolerances(1e-6, 1e-9)
    };
    let model = Model::new(variant, *p, *c);
    starts
        .par_iter()
        .map(|s| integrate(&model, &s.to_vector(), 0.0, t_end, &opts).map_err(|e| e.to_string()))
        .collect()
}

fn write_trajectory_set(
    path: &Path,
    p: &ModelParameters,
    c: &ControlSettings,
    trajs: &[Trajectory],
) -> std::io::Result<std::path::PathBuf> {
    let mut header = vec!["ic"];
    header.extend(TRAJECTORY_COLUMNS);
    let mut csv = CsvFile::create(path, &header)?;
    for (k, tr) in trajs.iter().enumerate() {
        for (t, x) in tr.times.iter().zip(&tr.states) {
            let [i, y, f, m] = state_fields(x);
            let regime = classify_regime(p, c, &PopulationState::from_vector(x));
            csv.row([
                k.to_string(),
                num(*t),
                i,
                y,
                f,
                m,
                regime.as_str().to_string(),
            ])?;
        }
    }
    csv.finish()
}

/// Trajectories in the `M x (Y + F)` plane, coloured by their attractor.
fn phase_plot(
    title: &str,
    trajs: &[Trajectory],
    labels: &[AttractorLabel],
    stable: &[(EquilibriumLabel, PopulationState)],
) -> Plot {
    let mut plot = Plot::new(title, "M", "Y + F");
    let colour = |l: &AttractorLabel| match l {
        AttractorLabel::Equilibrium(EquilibriumLabel::Te) => PALETTE[1],
        AttractorLabel::Nonconvergent => PALETTE[4],
        _ => PALETTE[0],
    };
    let mut seen: Vec<AttractorLabel> = Vec::new();
    for (tr, l) in trajs.iter().zip(labels) {
        let pts: Vec<(f64, f64)> = tr.states.iter().map(|x| (x[3], x[1] + x[2])).collect();
        let mut line = Series::new(
            format!("to {}", l.as_str()),
            pts.clone(),
            Style::Line,
            colour(l),
        );
        if seen.contains(l) {
            line = line.unlabelled();
        } else {
            seen.push(*l);
        }
        plot.add(line);
        plot.add(Series::new("start", vec![pts[0]], Style::Circles, colour(l)).unlabelled());
    }
    for (label, s) in stable {
        plot.add(Series::new(
            format!("{} (stable)", label.as_str()),
            vec![(s.males, s.females())],
            Style::Squares,
            PALETTE[2],
        ));
    }
    plot
}

fn fig3(mut rep: Report, plots: bool) -> Result<RunOutput, RunError> {
    let p = p1();
    let ee = endemic_state(&p).map_err(|e| numerical_failure(rep.dir, "fig3", e.to_string()))?;
    let starts: Vec<PopulationState> = FREE_STARTS
        .iter()
        .map(|x| PopulationState::from(*x))
        .collect();
    let trajs = trajectories(
        SystemVariant::FullNoControl,
        &p,
        &ControlSettings::NONE,
        &starts,
        2000.0,
    )
    .map_err(|e| numerical_failure(rep.dir, "fig3", e))?;
    rep.file(write_trajectory_set(
        &rep.dir.join("trajectories.csv"),
        &p,
        &ControlSettings::NONE,
        &trajs,
    )?);
    let target = ee.to_vector();
    let scale = target.amax();
    let worst = trajs
        .iter()
        .map(|t| (t.final_state().to_vector() - target).amax() / scale)
        .fold(0.0, f64::max);
    rep.say(format!(
        "{} starts, worst relative distance to EE* at t = 2000: {worst:.3e}",
        starts.len()
    ));
    if plots {
        let labels = vec![AttractorLabel::Equilibrium(EquilibriumLabel::EeStar); trajs.len()];
        let plot = phase_plot(
            "No control",
            &trajs,
            &labels,
            &[(EquilibriumLabel::EeStar, ee)],
        );
        rep.file(plot.save(&rep.dir.join("phase.svg"))?);
    }
    rep.check("all starts within 1e-3 of EE* by t = 2000", worst <= 1e-3);
    rep.finish()
}

fn fig6(mut rep: Report, plots: bool) -> Result<RunOutput, RunError> {
    let p = p1();
    let alpha = 0.0;
    let star = yp_star(&p, alpha).map_err(|e| numerical_failure(rep.dir, "fig6", e.to_string()))?;
    let dstar = yp_double_star(&p, alpha, CubicKind::Psi)
        .map_err(|e| numerical_failure(rep.dir, "fig6", e.to_string()))?
        .yp;
    let mut lures: Vec<f64> = (0..=240)
        .map(|k| 10f64.powf(2.0 + 4.5 * k as f64 / 240.0))
        .collect();
    lures.extend([0.99 * star, 1.01 * star, 0.999 * dstar, 1.001 * dstar]);
    lures.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows = bifurcation_curve(&p, alpha, &lures);
    rep.file(output::write_bifurcation(
        &rep.dir.join("bifurcation.csv"),
        &rows,
    )?);
    rep.say(format!(
        "Y_P* = {star:.3}, Y_P** = {dstar:.3}, {} rows",
        rows.len()
    ));

    use matdyn::equilibrium::Stability::{AsymptoticallyStable as S, Unstable as U};
    use EquilibriumLabel::*;
    let mut mismatches = 0;
    for &yp in &lures {
        let mut got: Vec<_> = rows
            .iter()
            .filter(|r| r.yp == yp)
            .map(|r| (r.label, r.stability))
            .collect();
        got.sort_by_key(|(l, _)| l.as_str());
        let mut want = if yp < star {
            vec![(Te, S), (EeMd1, U), (EeSharp, S)]
        } else if yp < dstar {
            vec![(Te, S), (EeMd1, U), (EeMd2, S)]
        } else {
            vec![(Te, S)]
        };
        want.sort_by_key(|(l, _)| l.as_str());
        if got != want {
            mismatches += 1;
            rep.say(format!("Y_P = {yp:.3}: got {got:?}"));
        }
    }
    if plots {
        let plot = bifurcation_plot(&rows, "Equilibria against lure strength, alpha = 0");
        rep.file(plot.save(&rep.dir.join("bifurcation.svg"))?);
    }
    rep.check(
        "branch structure: EE# stable below Y_P*, stable EE_MD2 up to Y_P**, TE alone above",
        mismatches == 0,
    );
    rep.finish()
}

fn sweep(rep: &Report, name: &str, alphas: &[f64]) -> Result<Vec<ThresholdReport>, RunError> {
    let cfg = ExperimentConfig::default();
    let (rows, failures) = threshold_rows(&cfg, alphas);
    if !failures.is_empty() {
        return Err(numerical_failure(rep.dir, name, failures.join("\n")));
    }
    Ok(rows)
}

fn alpha_grid() -> Vec<f64> {
    (0..=40).map(|k| k as f64 * 0.005).collect()
}

fn fig7(mut rep: Report, plots: bool) -> Result<RunOutput, RunError> {
    let rows = sweep(&rep, "fig7", &alpha_grid())?;
    rep.file(output::write_thresholds(
        &rep.dir.join("thresholds.csv"),
        &rows,
    )?);
    let at = |a: f64| {
        rows.iter()
            .find(|r| (r.alpha - a).abs() < 1e-12)
            .copied()
            .unwrap()
    };
    let (r0, r1) = (at(0.0), at(0.1));
    for r in [r0, r1] {
        rep.say(format!(
            "alpha = {}: Y_P* = {:.3}, Y_P** = {:.3}",
            r.alpha, r.yp_star, r.yp_double_star
        ));
    }
    let (ratio_star, ratio_dstar) = (
        r1.yp_star / r0.yp_star,
        r1.yp_double_star / r0.yp_double_star,
    );
    rep.say(format!(
        "ratios alpha 0.1 / alpha 0: {ratio_star:.5}, {ratio_dstar:.5}"
    ));
    if plots {
        rep.file(threshold_plot(&rows).save(&rep.dir.join("thresholds.svg"))?);
        let mut star = Plot::new("Y_P* against trapping rate", "alpha", "Y_P*");
        star.add(Series::new(
            "Y_P*",
            rows.iter().map(|r| (r.alpha, r.yp_star)).collect(),
            Style::Line,
            PALETTE[0],
        ));
        rep.file(star.save(&rep.dir.join("yp_star.svg"))?);
        let mut dstar = Plot::new("Y_P** against trapping rate", "alpha", "Y_P**");
        dstar.add(Series::new(
            "Y_P**",
            rows.iter().map(|r| (r.alpha, r.yp_double_star)).collect(),
            Style::Line,
            PALETTE[1],
        ));
        rep.file(dstar.save(&rep.dir.join("yp_dstar.svg"))?);
    }
    rep.check(
        "Y_P* = 5673 and 588 within 1",
        (r0.yp_star - 5673.0).abs() <= 1.0 && (r1.yp_star - 588.0).abs() <= 1.0,
    );
    rep.check(
        "Y_P** = 987735 and 102462 within 0.1%",
        (r0.yp_double_star / 987735.0 - 1.0).abs() <= 1e-3
            && (r1.yp_double_star / 102462.0 - 1.0).abs() <= 1e-3,
    );
    let band = |x: f64| (0.095..=0.115).contains(&x);
    rep.check(
        "trapping at 0.1 cuts both thresholds by about 90%",
        band(ratio_star) && band(ratio_dstar),
    );
    rep.finish()
}

fn fig12(mut rep: Report, plots: bool) -> Result<RunOutput, RunError> {
    let rows = sweep(&rep, "fig12", &alpha_grid())?;
    let mut csv = CsvFile::create(
        &rep.dir.join("gap.csv"),
        &["alpha", "yp_dstar", "yp_dstar_tilde", "gap"],
    )?;
    for r in &rows {
        csv.row([
            num(r.alpha),
            num(r.yp_double_star),
            num(r.yp_double_star_tilde),
            num(r.gap()),
        ])?;
    }
    rep.file(csv.finish()?);
    for r in rows
        .iter()
        .filter(|r| r.alpha == 0.0 || (r.alpha - 0.1).abs() < 1e-12)
    {
        rep.say(format!(
            "alpha = {}: Y_P** = {:.1}, auxiliary = {:.1}, gap = {:.1}",
            r.alpha,
            r.yp_double_star,
            r.yp_double_star_tilde,
            r.gap()
        ));
    }
    if plots {
        let mut plot = Plot::new("Gap between auxiliary and switched Y_P**", "alpha", "gap");
        plot.log_y = true;
        plot.add(Series::new(
            "gap",
            rows.iter().map(|r| (r.alpha, r.gap())).collect(),
            Style::Line,
            PALETTE[0],
        ));
        rep.file(plot.save(&rep.dir.join("gap.svg"))?);
    }
    let in_range: Vec<&ThresholdReport> = rows.iter().filter(|r| r.alpha <= 0.1 + 1e-12).collect();
    let outside: Vec<f64> = in_range
        .iter()
        .filter(|r| !(1e3..=1e5).contains(&r.gap()))
        .map(|r| r.alpha)
        .collect();
    if !outside.is_empty() {
        rep.say(format!("gap outside [1e3, 1e5] at alpha = {outside:?}"));
    }
    rep.check(
        "gap positive at every alpha",
        rows.iter().all(|r| r.gap() > 0.0),
    );
    rep.check(
        "gap within [1e3, 1e5] for alpha in [0, 0.1]",
        outside.is_empty(),
    );
    rep.finish()
}

fn lifted(p: &ModelParameters, starts: &[(f64, f64)]) -> Vec<PopulationState> {
    starts
        .iter()
        .map(|&(m, yf)| Projection::MalesFemales.state(p, m, yf))
        .collect()
}

struct PhaseRun {
    trajs: Vec<Trajectory>,
    labels: Vec<AttractorLabel>,
}

fn phase_run(
    rep: &Report,
    name: &str,
    p: &ModelParameters,
    c: &ControlSettings,
    starts: &[PopulationState],
    attractor: &AttractorOptions,
) -> Result<PhaseRun, RunError> {
    let trajs = trajectories(SystemVariant::FullControl, p, c, starts, 3000.0)
        .map_err(|e| numerical_failure(rep.dir, name, e))?;
    let labels = starts
        .par_iter()
        .map(|s| classify_attractor(p, c, s, attractor).map(|o| o.label))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| numerical_failure(rep.dir, name, e.to_string()))?;
    Ok(PhaseRun { trajs, labels })
}

fn stable_points(
    p: &ModelParameters,
    c: &ControlSettings,
) -> Vec<(EquilibriumLabel, PopulationState)> {
    equilibrium_catalog(p, c)
        .stable()
        .map(|e| (e.label, e.state))
        .collect()
}

fn tag(alpha: f64) -> String {
    format!("alpha{alpha}")
}

fn fig8(mut rep: Report, plots: bool) -> Result<RunOutput, RunError> {
    let p = p1();
    let ee = endemic_state(&p).map_err(|e| numerical_failure(rep.dir, "fig8", e.to_string()))?;
    let starts = lifted(&p, &PHASE_STARTS);
    for (alpha, lure) in LOW_LURE {
        let c = ControlSettings::new(lure, alpha);
        let cat = equilibrium_catalog(&p, &c);
        let stable = stable_points(&p, &c);
        let run = phase_run(&rep, "fig8", &p, &c, &starts, &AttractorOptions::default())?;
        rep.file(write_trajectory_set(
            &rep.dir.join(format!("trajectories_{}.csv", tag(alpha))),
            &p,
            &c,
            &run.trajs,
        )?);
        let sharp = cat.find(EquilibriumLabel::EeSharp).map(|e| e.state);
        if let Some(s) = sharp {
            rep.say(format!(
                "alpha = {alpha}, Y_P = {lure}: EE# = ({:.2}, {:.2}, {:.2}, {:.2})",
                s.immature, s.mating, s.fertilised, s.males
            ));
        }
        let to_te = run
            .labels
            .iter()
            .filter(|l| **l == AttractorLabel::Equilibrium(EquilibriumLabel::Te))
            .count();
        rep.say(format!("{to_te} of {} starts go extinct", starts.len()));
        if plots {
            let title = format!("Y_P = {lure}, alpha = {alpha}");
            let plot = phase_plot(&title, &run.trajs, &run.labels, &stable);
            rep.file(plot.save(&rep.dir.join(format!("phase_{}.svg", tag(alpha))))?);
        }

        let labels: Vec<EquilibriumLabel> = stable.iter().map(|(l, _)| *l).collect();
        rep.check(
            &format!("alpha = {alpha}: below Y_P*, stable set is TE and EE#"),
            cat.case == CatalogCase::BelowFirstThreshold
                && labels == [EquilibriumLabel::Te, EquilibriumLabel::EeSharp],
        );
        let all_settle = run.labels.iter().all(|l| {
            matches!(
                l,
                AttractorLabel::Equilibrium(EquilibriumLabel::Te | EquilibriumLabel::EeSharp)
            )
        });
        rep.check(
            &format!("alpha = {alpha}: every start settles on TE or EE#"),
            all_settle,
        );
        if let Some(s) = sharp {
            let same_females = (s.females() - ee.females()).abs() <= 1e-9 * ee.females();
            if alpha == 0.0 {
                let same = (s.to_vector() - ee.to_vector()).amax() <= 1e-9 * ee.max_norm();
                rep.check("alpha = 0: EE# coincides with EE*", same);
            } else {
                rep.check(
                    &format!("alpha = {alpha}: EE# has fewer males and the same females as EE*"),
                    s.males < ee.males && same_females,
                );
            }
        }
    }
    rep.finish()
}

fn fig9(mut rep: Report, plots: bool) -> Result<RunOutput, RunError> {
    let p = p1();
    let mut counts = Vec::new();
    for alpha in [0.0, 0.1] {
        let c = ControlSettings::new(5500.0, alpha);
        let spec = BasinSpec {
            projection: Projection::MalesFemales,
            first_range: (0.0, 30.0),
            second_range: (0.0, 3.0),
            first_points: 50,
            second_points: 50,
            attractor: AttractorOptions::default(),
        };
        let cells = basin_grid(&p, &c, &spec);
        rep.file(output::write_basins(
            &rep.dir.join(format!("basins_{}.csv", tag(alpha))),
            &cells,
        )?);
        let te = count_label(&cells, AttractorLabel::Equilibrium(EquilibriumLabel::Te));
        let stuck = count_label(&cells, AttractorLabel::Nonconvergent);
        rep.say(format!(
            "alpha = {alpha}, Y_P = 5500: {te} of {} cells go to TE ({stuck} unsettled)",
            cells.len()
        ));
        if plots {
            let plot = basin_plot(
                &cells,
                ("M", "Y + F"),
                &format!("Basin of TE, Y_P = 5500, alpha = {alpha}"),
            );
            rep.file(plot.save(&rep.dir.join(format!("basins_{}.svg", tag(alpha))))?);
        }
        counts.push(te);
    }
    rep.check("trapping enlarges the basin of TE", counts[1] > counts[0]);
    rep.finish()
}

/// Trajectories at `factor * Y_P**` for both trapping rates.
fn phase_portraits(
    mut rep: Report,
    plots: bool,
    factor: f64,
    name: &str,
) -> Result<RunOutput, RunError> {
    let p = p1();
    let starts = lifted(&p, &PHASE_STARTS);
    let attractor = AttractorOptions {
        t_max: 200_000.0,
        ..AttractorOptions::default()
    };
    for alpha in [0.0, 0.1] {
        let dstar = yp_double_star(&p, alpha, CubicKind::Psi)
            .map_err(|e| numerical_failure(rep.dir, name, e.to_string()))?
            .yp;
        let c = ControlSettings::new(factor * dstar, alpha);
        let stable = stable_points(&p, &c);
        let run = phase_run(&rep, name, &p, &c, &starts, &attractor)?;
        rep.file(write_trajectory_set(
            &rep.dir.join(format!("trajectories_{}.csv", tag(alpha))),
            &p,
            &c,
            &run.trajs,
        )?);
        let to_te = run
            .labels
            .iter()
            .filter(|l| **l == AttractorLabel::Equilibrium(EquilibriumLabel::Te))
            .count();
        rep.say(format!(
            "alpha = {alpha}, Y_P = {factor} x {dstar:.1}: {to_te} of {} starts go extinct",
            starts.len()
        ));
        for (l, s) in &stable {
            rep.say(format!(
                "  stable {}: ({:.2}, {:.2}, {:.2}, {:.2})",
                l.as_str(),
                s.immature,
                s.mating,
                s.fertilised,
                s.males
            ));
        }
        if plots {
            let title = format!("Y_P = {factor} Y_P**, alpha = {alpha}");
            let plot = phase_plot(&title, &run.trajs, &run.labels, &stable);
            rep.file(plot.save(&rep.dir.join(format!("phase_{}.svg", tag(alpha))))?);
        }
        let labels: Vec<EquilibriumLabel> = stable.iter().map(|(l, _)| *l).collect();
        if factor < 1.0 {
            rep.check(
                &format!("alpha = {alpha}: stable set is TE and EE_MD2"),
                labels == [EquilibriumLabel::Te, EquilibriumLabel::EeMd2],
            );
            rep.check(
                &format!("alpha = {alpha}: every start settles on TE or EE_MD2"),
                run.labels.iter().all(|l| {
                    matches!(
                        l,
                        AttractorLabel::Equilibrium(EquilibriumLabel::Te | EquilibriumLabel::EeMd2)
                    )
                }),
            );
        } else {
            rep.check(
                &format!("alpha = {alpha}: TE is the only equilibrium"),
                labels == [EquilibriumLabel::Te],
            );
            rep.check(
                &format!("alpha = {alpha}: every start goes extinct"),
                to_te == starts.len(),
            );
        }
    }
    rep.finish()
}

fn reduction49(mut rep: Report) -> Result<RunOutput, RunError> {
    let p = p1();
    let ee =
        endemic_state(&p).map_err(|e| numerical_failure(rep.dir, "reduction49", e.to_string()))?;
    let mut csv = CsvFile::create(
        &rep.dir.join("reduction.csv"),
        &[
            "alpha",
            "yp",
            "yf_controlled",
            "yf_uncontrolled",
            "reduction",
            "lure_increase_percent",
        ],
    )?;
    let mut ok = true;
    for (alpha, low) in LOW_LURE {
        let report = threshold_report(&p, alpha)
            .map_err(|e| numerical_failure(rep.dir, "reduction49", e.to_string()))?;
        let yp = 0.9999 * report.yp_double_star;
        let cat = equilibrium_catalog(&p, &ControlSettings::new(yp, alpha));
        let Some(md2) = cat
            .find(EquilibriumLabel::EeMd2)
            .filter(|e| e.stability == matdyn::equilibrium::Stability::AsymptoticallyStable)
        else {
            return Err(numerical_failure(
                rep.dir,
                "reduction49",
                format!("no stable EE_MD2 at alpha = {alpha}"),
            ));
        };
        let reduction = 1.0 - md2.state.females() / ee.females();
        let increase = 100.0 * (yp / low - 1.0);
        csv.row([
            num(alpha),
            num(yp),
            num(md2.state.females()),
            num(ee.females()),
            num(reduction),
            num(increase),
        ])?;
        rep.say(format!(
            "alpha = {alpha}: Y + F = {:.2} vs {:.2}, reduction {:.2}%, lure {yp:.1} is {increase:.0}% above {low}",
            md2.state.females(),
            ee.females(),
            100.0 * reduction
        ));
        ok &= (reduction - 0.49).abs() <= 0.02;
    }
    rep.file(csv.finish()?);
    rep.check(
        "female reduction at 0.9999 Y_P** is 49% within 2 points",
        ok,
    );
    rep.finish()
}
