//! Basic offspring numbers: closed forms and the next-generation construction.

use nalgebra::Matrix4;

use crate::error::EquilibriumError;
use crate::linalg;
use crate::params::ModelParameters;

/// Basic offspring number of the male-abundance system,
/// `b r nu_I nu_Y / ((mu_I + nu_I) D)`.
pub fn basic_offspring_number(p: &ModelParameters) -> f64 {
    p.b * p.r * p.nu_i * p.nu_y / ((p.mu_i + p.nu_i) * p.female_denominator())
}

/// Basic offspring number of the decoupled male-scarcity system.
pub fn scarcity_offspring_number(p: &ModelParameters) -> f64 {
    p.b * p.gamma * (1.0 - p.r) * p.nu_i * p.nu_y
        / ((p.nu_i + p.mu_i) * (p.delta + p.mu_f) * p.mu_m)
}

/// Next-generation operator pieces at the trivial equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct NextGeneration {
    /// Spectral radius of `R T^-1`.
    pub value: f64,
    /// Jacobian of new recruitment (`b` at row I, column F).
    pub recruitment: Matrix4<f64>,
    /// Jacobian of the transfer terms.
    pub transfer: Matrix4<f64>,
    /// `(R T^-1)[I, I]`: the only nonzero eigenvalue of the rank-one product.
    pub rank_one_value: f64,
}

pub fn recruitment_matrix(p: &ModelParameters) -> Matrix4<f64> {
    let mut r = Matrix4::zeros();
    r[(0, 2)] = p.b;
    r
}

pub fn transfer_matrix(p: &ModelParameters) -> Matrix4<f64> {
    #[rustfmt::skip]
    let t = Matrix4::new(
        p.nu_i + p.mu_i, 0.0, 0.0, 0.0,
        -p.r * p.nu_i, p.nu_y + p.mu_y, -p.delta, 0.0,
        0.0, -p.nu_y, p.delta + p.mu_f, 0.0,
        -(1.0 - p.r) * p.nu_i, 0.0, 0.0, p.mu_m,
    );
    t
}

pub fn next_generation_offspring_number(
    p: &ModelParameters,
) -> Result<NextGeneration, EquilibriumError> {
    let recruitment = recruitment_matrix(p);
    let transfer = transfer_matrix(p);
    let inverse = transfer
        .try_inverse()
        .ok_or(EquilibriumError::SingularTransfer)?;
    let operator = recruitment * inverse;
    let value = linalg::spectral_radius(&operator).ok_or(EquilibriumError::EigenFailure)?;
    Ok(NextGeneration {
        value,
        recruitment,
        transfer,
        rank_one_value: operator[(0, 0)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionReport {
    pub n0: f64,
    pub n0_hat: f64,
    pub n0_ngm: f64,
    pub recruitment: Matrix4<f64>,
    pub transfer: Matrix4<f64>,
}

pub fn reproduction_report(p: &ModelParameters) -> Result<ReproductionReport, EquilibriumError> {
    let ngm = next_generation_offspring_number(p)?;
    Ok(ReproductionReport {
        n0: basic_offspring_number(p),
        n0_hat: scarcity_offspring_number(p),
        n0_ngm: ngm.value,
        recruitment: ngm.recruitment,
        transfer: ngm.transfer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1() -> ModelParameters {
        ModelParameters::reference()
    }

    #[test]
    fn reference_offspring_number() {
        let n0 = basic_offspring_number(&p1());
        // hand evaluation: 9.272*0.57*(1/24.6)*0.5 / ((1/15+1/24.6)*0.0081666522)
        assert!((n0 - 122.56).abs() < 0.05, "{n0}");
    }

    #[test]
    fn zero_recruitment_gives_zero() {
        let p = ModelParameters { b: 0.0, ..p1() };
        assert_eq!(basic_offspring_number(&p), 0.0);
        let p = ModelParameters { gamma: 0.0, ..p1() };
        assert_eq!(scarcity_offspring_number(&p), 0.0);
    }

    #[test]
    fn scarcity_offspring_number_reference() {
        let n = scarcity_offspring_number(&p1());
        assert!((n - 2303.0).abs() < 0.5, "{n}");
        assert!(n / basic_offspring_number(&p1()) > 1.0);
    }

    #[test]
    fn next_generation_matches_closed_form() {
        let ngm = next_generation_offspring_number(&p1()).unwrap();
        let n0 = basic_offspring_number(&p1());
        assert!((ngm.value - n0).abs() <= 1e-10 * n0);
        assert!((ngm.rank_one_value - n0).abs() <= 1e-10 * n0);
        let nonzero: Vec<_> = ngm.recruitment.iter().filter(|x| **x != 0.0).collect();
        assert_eq!(nonzero, vec![&p1().b]);
    }

    #[test]
    fn no_remating_limit() {
        let p = ModelParameters { delta: 0.0, ..p1() };
        let expected =
            p.b * p.r * p.nu_i * p.nu_y / ((p.mu_i + p.nu_i) * (p.nu_y + p.mu_y) * p.mu_f);
        let ngm = next_generation_offspring_number(&p).unwrap();
        assert!((basic_offspring_number(&p) - expected).abs() <= 1e-12 * expected);
        assert!((ngm.value - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn independent_of_capacity_and_mating_capacity() {
        let n0 = basic_offspring_number(&p1());
        let p = ModelParameters {
            k: 12345.0,
            gamma: 0.3,
            ..p1()
        };
        assert_eq!(basic_offspring_number(&p), n0);
    }

    #[test]
    fn monotone_in_rates() {
        let n0 = basic_offspring_number(&p1());
        let eps = 1e-4;
        assert!(
            basic_offspring_number(&ModelParameters {
                b: p1().b * (1.0 + eps),
                ..p1()
            }) > n0
        );
        assert!(
            basic_offspring_number(&ModelParameters {
                nu_y: p1().nu_y * (1.0 + eps),
                ..p1()
            }) > n0
        );
        assert!(
            basic_offspring_number(&ModelParameters {
                mu_i: p1().mu_i * (1.0 + eps),
                ..p1()
            }) < n0
        );
    }

    fn params_strategy() -> impl Strategy<Value = ModelParameters> {
        (
            0.1..50.0f64,
            0.05..0.95f64,
            (0.005..0.5f64, 0.005..0.1f64, 0.005..0.1f64, 0.005..0.1f64),
            (0.01..0.5f64, 0.05..2.0f64, 0.0..0.5f64),
        )
            .prop_map(|(b, r, (mu_i, mu_y, mu_f, mu_m), (nu_i, nu_y, delta))| {
                ModelParameters {
                    b,
                    r,
                    k: 1000.0,
                    gamma: 4.0,
                    mu_i,
                    mu_y,
                    mu_f,
                    mu_m,
                    nu_i,
                    nu_y,
                    delta: delta.max(1e-3),
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn closed_form_equals_spectral_radius(p in params_strategy()) {
            let n0 = basic_offspring_number(&p);
            let ngm = next_generation_offspring_number(&p).unwrap();
            prop_assert!(n0 > 0.0);
            prop_assert!((n0 - ngm.value).abs() <= 1e-10 * n0, "{} vs {}", n0, ngm.value);
        }

        #[test]
        fn denominator_is_positive(p in params_strategy()) {
            let d = p.female_denominator();
            prop_assert!(d > 0.0);
            prop_assert!((d - p.female_denominator_expanded()).abs() <= 1e-14 * d.max(1.0));
        }
    }
}
