//! Small dense eigenvalue helpers built on nalgebra's real Schur form.

use nalgebra::linalg::Schur;
use nalgebra::Matrix4;
use num_complex::Complex64;

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 500;

/// Eigenvalues of a real 4x4 matrix via Hessenberg reduction and shifted
/// QR. `None` if the iteration does not converge.
pub fn eigenvalues(m: &Matrix4<f64>) -> Option<Vec<Complex64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let schur = Schur::try_new(*m, SCHUR_EPS, SCHUR_MAX_ITER)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(m: &Matrix4<f64>) -> Option<f64> {
    eigenvalues(m).map(|ev| ev.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_matrix_eigenvalues_are_its_diagonal() {
        #[rustfmt::skip]
        let m = Matrix4::new(
            -1.0, 0.0, 0.0, 0.0,
            2.0, -3.0, 0.0, 0.0,
            0.5, 1.0, 4.0, 0.0,
            7.0, 0.0, 1.0, -0.25,
        );
        let mut ev: Vec<f64> = eigenvalues(&m).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [-3.0, -1.0, -0.25, 4.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((spectral_radius(&m).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_block_gives_complex_pair() {
        #[rustfmt::skip]
        let m = Matrix4::new(
            0.0, -2.0, 0.0, 0.0,
            2.0, 0.0, 0.0, 0.0,
            0.0, 0.0, -1.0, 0.0,
            0.0, 0.0, 0.0, -5.0,
        );
        let ev = eigenvalues(&m).unwrap();
        assert!(ev
            .iter()
            .any(|z| (z.im - 2.0).abs() < 1e-12 && z.re.abs() < 1e-12));
        assert_eq!(
            spectral_abscissa(&ev).max(0.0),
            spectral_abscissa(&ev).abs().max(0.0)
        );
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut m = Matrix4::identity();
        m[(0, 1)] = f64::NAN;
        assert!(eigenvalues(&m).is_none());
    }
}
