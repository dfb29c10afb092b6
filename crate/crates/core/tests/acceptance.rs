//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::io::Write;

use matdyn::equilibrium::{endemic_state, equilibrium_catalog, md_equilibria};
use matdyn::integrator::{integrate, integrate_reference, SolverOptions};
use matdyn::model::{check_cooperative, classify_regime, Regime};
use matdyn::phase::{
    basin_grid, classify_attractor, count_label, verify_comparison_bound, AttractorLabel,
    AttractorOptions, BasinSpec, Projection,
};
use matdyn::reproduction::{basic_offspring_number, next_generation_offspring_number};
use matdyn::threshold::{yp_double_star, yp_star, CubicKind};
use matdyn::{
    equilibrium::EquilibriumLabel, ControlSettings, Model, ModelParameters, PopulationState,
    StateVector, SystemVariant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p1() -> ModelParameters {
    ModelParameters::reference()
}

/// Written to stderr directly so the line shows even when output is captured.
fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id:>2} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn interior_state(rng: &mut ChaCha8Rng, k: f64) -> PopulationState {
    PopulationState::new(
        rng.random_range(1.0..k),
        rng.random_range(1.0..2000.0),
        rng.random_range(1.0..2000.0),
        rng.random_range(1.0..2000.0),
    )
}

#[test]
fn criterion_01_offspring_number() {
    let p = p1();
    let n0 = basic_offspring_number(&p);
    let ngm = next_generation_offspring_number(&p).unwrap();
    let agree = rel(ngm.value, n0) <= 1e-10;
    let rounded = n0.round();
    verdict(
        1,
        "offspring number",
        rounded == 122.0 && agree,
        format!(
            "N0 = {n0:.6}, nearest integer {rounded}, NGM spectral radius {:.12} (rel diff {:.1e})",
            ngm.value,
            rel(ngm.value, n0)
        ),
    );
}

#[test]
fn criterion_02_endemic_equilibrium() {
    let p = p1();
    let cat = equilibrium_catalog(&p, &ControlSettings::NONE);
    let ee = cat
        .find(EquilibriumLabel::EeStar)
        .expect("endemic equilibrium present");
    let rounded = ee.state.to_array().map(f64::round);
    let pass = rounded == [992.0, 319.0, 1407.0, 1498.0] && ee.residual <= 1e-9 * p.k;
    verdict(
        2,
        "endemic equilibrium",
        pass,
        format!("EE* = {rounded:?}, residual {:.2e}", ee.residual),
    );
}

#[test]
fn criterion_03_first_threshold() {
    let s0 = yp_star(&p1(), 0.0).unwrap();
    let s1 = yp_star(&p1(), 0.1).unwrap();
    let pass = (s0 - 5673.0).abs() <= 1.0 && (s1 - 588.0).abs() <= 1.0;
    verdict(
        3,
        "first threshold",
        pass,
        format!("Y_P*(0) = {s0:.3}, Y_P*(0.1) = {s1:.3}"),
    );
}

#[test]
fn criterion_04_second_threshold() {
    let d0 = yp_double_star(&p1(), 0.0, CubicKind::Psi).unwrap().yp;
    let d1 = yp_double_star(&p1(), 0.1, CubicKind::Psi).unwrap().yp;
    let pass = rel(d0, 987_735.0) <= 1e-3 && rel(d1, 102_462.0) <= 1e-3;
    verdict(
        4,
        "second threshold",
        pass,
        format!(
            "Y_P**(0) = {d0:.2} (rel {:.1e}), Y_P**(0.1) = {d1:.2} (rel {:.1e})",
            rel(d0, 987_735.0),
            rel(d1, 102_462.0)
        ),
    );
}

#[test]
fn criterion_05_trapping_leverage() {
    let p = p1();
    let star = yp_star(&p, 0.1).unwrap() / yp_star(&p, 0.0).unwrap();
    let dstar = yp_double_star(&p, 0.1, CubicKind::Psi).unwrap().yp
        / yp_double_star(&p, 0.0, CubicKind::Psi).unwrap().yp;
    let inside = |x: f64| (0.095..=0.115).contains(&x);
    verdict(
        5,
        "trapping leverage",
        inside(star) && inside(dstar),
        format!("Y_P* ratio {star:.5}, Y_P** ratio {dstar:.5}"),
    );
}

#[test]
fn criterion_06_threshold_bracketing() {
    let mut detail = Vec::new();
    let mut pass = true;
    for alpha in [0.0, 0.1] {
        let d = yp_double_star(&p1(), alpha, CubicKind::Psi).unwrap().yp;
        let below = md_equilibria(&p1(), &ControlSettings::new(0.9999 * d, alpha))
            .unwrap()
            .len();
        let above = md_equilibria(&p1(), &ControlSettings::new(1.0001 * d, alpha))
            .unwrap()
            .len();
        pass &= below == 2 && above == 0;
        detail.push(format!("alpha {alpha}: {below} roots below, {above} above"));
    }
    verdict(6, "threshold bracketing", pass, detail.join("; "));
}

#[test]
fn criterion_07_female_reduction() {
    let p = p1();
    let d = yp_double_star(&p, 0.0, CubicKind::Psi).unwrap().yp;
    let ee = endemic_state(&p).unwrap();
    let cat = equilibrium_catalog(&p, &ControlSettings::new(0.9999 * d, 0.0));
    let positive_stable: Vec<_> = cat
        .stable()
        .filter(|e| e.label != EquilibriumLabel::Te)
        .collect();
    let Some(stable) = positive_stable.first() else {
        verdict(
            7,
            "female reduction",
            false,
            "no positive stable equilibrium".into(),
        );
        return;
    };
    let reduction = 1.0 - stable.state.females() / ee.females();
    verdict(
        7,
        "female reduction",
        (reduction - 0.49).abs() <= 0.02,
        format!(
            "{} Y+F = {:.2} vs Y*+F* = {:.2}: reduction {:.2}%",
            stable.label,
            stable.state.females(),
            ee.females(),
            100.0 * reduction
        ),
    );
}

#[test]
fn criterion_08_auxiliary_bound_gap() {
    let mut pass = true;
    let mut detail = Vec::new();
    for k in 0..=10 {
        let alpha = 0.01 * k as f64;
        let d = yp_double_star(&p1(), alpha, CubicKind::Psi).unwrap().yp;
        let dt = yp_double_star(&p1(), alpha, CubicKind::PsiTilde)
            .unwrap()
            .yp;
        let gap = dt - d;
        let ok = dt > d && (1e3..=1e5).contains(&gap);
        if !ok || k == 0 || k == 10 {
            detail.push(format!(
                "alpha {alpha:.2}: Y_P** {d:.0}, tilde {dt:.0}, gap {gap:.0}"
            ));
        }
        pass &= ok;
    }
    verdict(8, "auxiliary bound gap", pass, detail.join("; "));
}

#[test]
fn criterion_09_convergence_suite() {
    let p = p1();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ee = endemic_state(&p).unwrap().to_vector();
    let model = Model::new(SystemVariant::FullNoControl, p, ControlSettings::NONE);
    let mut reached_ee = 0;
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let s0 = interior_state(&mut rng, p.k);
        let traj = integrate(
            &model,
            &s0.to_vector(),
            0.0,
            2000.0,
            &SolverOptions::default(),
        )
        .unwrap();
        let err = (traj.final_state().to_vector() - ee).amax() / ee.amax();
        worst = worst.max(err);
        if err <= 1e-3 {
            reached_ee += 1;
        }
    }

    let yp = 1.05 * yp_double_star(&p, 0.0, CubicKind::Psi).unwrap().yp;
    let control = ControlSettings::new(yp, 0.0);
    let opts = AttractorOptions::default();
    let mut reached_te = 0;
    let mut slowest = 0.0_f64;
    for _ in 0..10 {
        let s0 = interior_state(&mut rng, p.k);
        let out = classify_attractor(&p, &control, &s0, &opts).unwrap();
        slowest = slowest.max(out.final_time);
        if out.label == AttractorLabel::Equilibrium(EquilibriumLabel::Te) {
            reached_te += 1;
        }
    }
    verdict(
        9,
        "convergence suite",
        reached_ee == 10 && reached_te == 10,
        format!(
            "{reached_ee}/10 reach EE* by t=2000 (worst rel {worst:.1e}); {reached_te}/10 reach TE at Y_P = 1.05 Y_P** (slowest t = {slowest:.0})"
        ),
    );
}

#[test]
fn criterion_10_comparison_bound() {
    let p = p1();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut checked = 0;
    let mut failures = Vec::new();
    let opts = SolverOptions::default();
    for _ in 0..5 {
        let control =
            ControlSettings::new(rng.random_range(100.0..2e6), rng.random_range(0.0..0.2));
        for _ in 0..20 {
            let s0 = interior_state(&mut rng, p.k);
            let report = verify_comparison_bound(&p, &control, &s0, 1000.0, &opts).unwrap();
            checked += 1;
            if !report.holds {
                failures.push(format!(
                    "Y_P {:.0} alpha {:.3}: excess {:.2e} at t {:.1}",
                    control.lure, control.alpha, report.max_excess, report.worst_time
                ));
            }
        }
    }
    verdict(
        10,
        "comparison bound",
        failures.is_empty(),
        format!(
            "{} of {checked} runs bounded{}",
            checked - failures.len(),
            failures
                .iter()
                .map(|f| format!("; {f}"))
                .collect::<String>()
        ),
    );
}

#[test]
fn criterion_11_cooperativity() {
    let p = p1();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cooperative = [
        SystemVariant::AbundanceNoControl,
        SystemVariant::ScarcityNoControl,
        SystemVariant::AbundanceControl,
        SystemVariant::AuxiliaryMonotone,
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for v in cooperative {
        let control = ControlSettings::new(rng.random_range(1.0..1e5), rng.random_range(0.0..0.2));
        let samples: Vec<PopulationState> = (0..1000)
            .map(|_| {
                PopulationState::new(
                    rng.random_range(0.0..=p.k),
                    rng.random_range(0.0..3000.0),
                    rng.random_range(0.0..3000.0),
                    rng.random_range(0.0..3000.0),
                )
            })
            .collect();
        let report = check_cooperative(v, &p, &control, &samples);
        pass &= report.cooperative && report.samples_checked == 1000;
        detail.push(format!("{v:?} {}/1000", report.samples_checked));
    }

    // the switched control system in the scarcity region
    let control = ControlSettings::new(500.0, 0.1);
    let samples: Vec<PopulationState> = (0..1000)
        .map(|_| interior_state(&mut rng, p.k))
        .filter(|s| classify_regime(&p, &control, s) == Regime::Scarcity)
        .collect();
    let report = check_cooperative(SystemVariant::FullControl, &p, &control, &samples);
    let counterexample = report.worst.as_ref().map(|w| (w.row, w.col, w.value));
    pass &= counterexample.is_some();
    detail.push(format!("full control counterexample {counterexample:?}"));
    verdict(11, "cooperativity", pass, detail.join("; "));
}

#[test]
fn criterion_12_cross_solver() {
    let p = p1();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let control = ControlSettings::new(3000.0, 0.05);
    let model = Model::new(SystemVariant::FullControl, p, control);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let s0 = interior_state(&mut rng, p.k).to_vector();
        let stiff = integrate(&model, &s0, 0.0, 200.0, &SolverOptions::default()).unwrap();
        let reference = integrate_reference(&model, &s0, 0.0, 200.0, 0.01, 100).unwrap();
        for (t, y) in reference.times.iter().zip(&reference.states) {
            let err = (stiff.state_at(*t) - y).amax() / y.amax().max(1.0);
            worst = worst.max(err);
        }
    }

    // step halving on the smooth abundance branch
    let smooth = Model::new(SystemVariant::AbundanceNoControl, p, ControlSettings::NONE);
    let s0 = StateVector::new(100.0, 50.0, 50.0, 80.0);
    let run = |h: f64| {
        integrate_reference(&smooth, &s0, 0.0, 20.0, h, usize::MAX)
            .unwrap()
            .final_state()
            .to_vector()
    };
    let (y1, y2, y4) = (run(0.1), run(0.05), run(0.025));
    let order_ratio = (y1 - y2).amax() / (y2 - y4).amax();

    verdict(
        12,
        "cross-solver oracle",
        worst <= 1e-4 && (14.0..=18.0).contains(&order_ratio),
        format!("max rel deviation {worst:.2e}; RK4 halving ratio {order_ratio:.2}"),
    );
}

#[test]
fn criterion_13_basin_monotonicity() {
    let p = p1();
    let spec = BasinSpec {
        projection: Projection::MalesFemales,
        first_range: (0.0, 30.0),
        second_range: (0.0, 3.0),
        first_points: 50,
        second_points: 50,
        attractor: AttractorOptions::default(),
    };
    let te = AttractorLabel::Equilibrium(EquilibriumLabel::Te);
    let without = basin_grid(&p, &ControlSettings::new(5500.0, 0.0), &spec);
    let with = basin_grid(&p, &ControlSettings::new(5500.0, 0.1), &spec);
    let (n0, n1) = (count_label(&without, te), count_label(&with, te));
    let nc = count_label(&without, AttractorLabel::Nonconvergent)
        + count_label(&with, AttractorLabel::Nonconvergent);
    verdict(
        13,
        "basin monotonicity",
        n1 > n0,
        format!("TE cells {n0}/2500 at alpha 0, {n1}/2500 at alpha 0.1; nonconvergent {nc}"),
    );
}
