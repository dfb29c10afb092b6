use matdyn::equilibrium::{
    check_assumptions, cubic_roots, cubic_structure, endemic_state, equilibrium_catalog,
    md_equilibria, tilde_equilibria, Stability, STABILITY_BAND,
};
use matdyn::linalg::spectral_abscissa;
use matdyn::reproduction::{basic_offspring_number, scarcity_offspring_number};
use matdyn::threshold::{threshold_report, yp_double_star, yp_star, CubicKind};
use matdyn::{ControlSettings, ModelParameters};
use proptest::prelude::*;

fn p1() -> ModelParameters {
    ModelParameters::reference()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn catalog_points_are_equilibria(yp in 1.0f64..2e6, alpha in 0.0f64..0.3) {
        let cat = equilibrium_catalog(&p1(), &ControlSettings::new(yp, alpha));
        prop_assert!(cat.warnings.is_empty(), "{:?}", cat.warnings);
        for e in &cat.equilibria {
            prop_assert!(e.residual_ok(), "{} residual {}", e.label, e.residual);
            let abscissa = spectral_abscissa(&e.eigenvalues);
            match e.stability {
                Stability::AsymptoticallyStable => prop_assert!(abscissa < -STABILITY_BAND),
                Stability::Unstable => prop_assert!(abscissa > STABILITY_BAND),
                Stability::NotClassified => {}
            }
        }
    }

    #[test]
    fn root_count_steps_at_tangency(alpha in 0.0f64..0.5) {
        let d = yp_double_star(&p1(), alpha, CubicKind::Psi).unwrap().yp;
        let cs = cubic_structure(&p1(), &ControlSettings::new(0.0, alpha));
        prop_assert_eq!(cubic_roots(&cs, CubicKind::Psi, d * (1.0 - 1e-3)).len(), 2);
        prop_assert_eq!(cubic_roots(&cs, CubicKind::Psi, d * (1.0 + 1e-3)).len(), 0);
        let dt = yp_double_star(&p1(), alpha, CubicKind::PsiTilde).unwrap().yp;
        prop_assert_eq!(cubic_roots(&cs, CubicKind::PsiTilde, dt * (1.0 - 1e-4)).len(), 2);
        prop_assert_eq!(cubic_roots(&cs, CubicKind::PsiTilde, dt * (1.0 + 1e-4)).len(), 0);
    }

    #[test]
    fn md_roots_straddle_endemic_level(frac in 0.02f64..0.98, alpha in 0.0f64..0.2) {
        let p = p1();
        let i_star = endemic_state(&p).unwrap().immature;
        let star = yp_star(&p, alpha).unwrap();
        let dstar = yp_double_star(&p, alpha, CubicKind::Psi).unwrap().yp;

        let below = md_equilibria(&p, &ControlSettings::new(frac * star, alpha)).unwrap();
        prop_assert_eq!(below.len(), 2);
        prop_assert!(below[0].state.immature < i_star && i_star < below[1].state.immature);

        let between = md_equilibria(&p, &ControlSettings::new(star + frac * (dstar - star), alpha)).unwrap();
        prop_assert_eq!(between.len(), 2);
        prop_assert!(between[1].state.immature < i_star);
        prop_assert!(between.iter().all(|e| e.admissible));
    }

    #[test]
    fn auxiliary_equilibria_are_ordered(frac in 0.01f64..0.99) {
        let dt = yp_double_star(&p1(), 0.0, CubicKind::PsiTilde).unwrap().yp;
        let pts = tilde_equilibria(&p1(), &ControlSettings::new(frac * dt, 0.0)).unwrap();
        prop_assert_eq!(pts.len(), 2);
        prop_assert!(pts[0].state.le(&pts[1].state));
        for e in &pts {
            prop_assert!(e.residual_ok());
        }
    }

    #[test]
    fn offspring_number_ignores_capacity_and_mating_capacity(k in 1.0f64..1e5, gamma in 0.1f64..20.0) {
        let base = basic_offspring_number(&p1());
        let n = basic_offspring_number(&ModelParameters { k, gamma, ..p1() });
        prop_assert!((n - base).abs() <= 1e-12 * base);
    }
}

#[test]
fn offspring_number_monotonicity() {
    let p = p1();
    let n = basic_offspring_number(&p);
    let bump = |f: &dyn Fn(&mut ModelParameters)| {
        let mut q = p;
        f(&mut q);
        basic_offspring_number(&q)
    };
    assert!(bump(&|q| q.b *= 1.001) > n);
    assert!(bump(&|q| q.nu_y *= 1.001) > n);
    assert!(bump(&|q| q.mu_i *= 1.001) < n);
    assert!(scarcity_offspring_number(&p) > n);
}

#[test]
fn assumption_consequences_hold_where_assumptions_do() {
    for b in [2.0, 5.0, 9.272, 20.0] {
        for r in [0.3, 0.5, 0.57, 0.7] {
            let a = check_assumptions(&ModelParameters { b, r, ..p1() });
            if a.both_hold() {
                assert!(
                    a.scarcity_n0_above_one && a.scarcity_point_in_abundance,
                    "b {b} r {r}"
                );
            }
        }
    }
}

#[test]
fn threshold_ordering() {
    for alpha in [0.0, 0.05, 0.1, 0.5] {
        let r = threshold_report(&p1(), alpha).unwrap();
        assert!(r.yp_star < r.yp_double_star && r.yp_double_star < r.yp_double_star_tilde);
        assert!(r.gap() > 0.0);
    }
}
