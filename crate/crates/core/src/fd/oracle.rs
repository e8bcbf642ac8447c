//! Log-det mutual information for jointly Gaussian linear models.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoopError, Result};

fn log2_det_pd(m: &DMatrix<Complex64>) -> Result<f64> {
    if !m.is_square() {
        return Err(CoopError::LengthMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    // Hermitian Cholesky with an explicit pivot check
    let n = m.nrows();
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let mut acc = 0.0;
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)].conj();
        }
        if !(pivot.re > 0.0) || pivot.im.abs() > 1e-9 * pivot.re.abs().max(1.0) {
            return Err(CoopError::NotPositiveDefinite);
        }
        let d = pivot.re.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        acc += d.log2();
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(2.0 * acc)
}

/// `I(X; Y) = log2 det Σ_Y − log2 det Σ_{Y|X}` for Gaussian `Y`.
pub fn gaussian_mi_oracle(
    sigma_y: &DMatrix<Complex64>,
    sigma_y_given_x: &DMatrix<Complex64>,
) -> Result<f64> {
    if sigma_y.shape() != sigma_y_given_x.shape() {
        return Err(CoopError::LengthMismatch {
            expected: sigma_y.nrows(),
            got: sigma_y_given_x.nrows(),
        });
    }
    Ok(log2_det_pd(sigma_y)? - log2_det_pd(sigma_y_given_x)?)
}

/// `Y = A·U + Z` with independent unit-power streams `U` and unit white noise `Z`.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    /// outputs × streams
    pub gains: DMatrix<Complex64>,
}

impl LinearGaussianModel {
    pub fn new(gains: DMatrix<Complex64>) -> Self {
        LinearGaussianModel { gains }
    }

    /// From real coefficients, row-major `outputs × streams`.
    pub fn from_real(outputs: usize, streams: usize, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != outputs * streams {
            return Err(CoopError::LengthMismatch {
                expected: outputs * streams,
                got: coeffs.len(),
            });
        }
        Ok(LinearGaussianModel {
            gains: DMatrix::from_row_iterator(
                outputs,
                streams,
                coeffs.iter().map(|&c| Complex64::new(c, 0.0)),
            ),
        })
    }

    /// Output covariance with the listed streams present (noise always present).
    pub fn covariance(&self, streams: &[usize]) -> DMatrix<Complex64> {
        let n = self.gains.nrows();
        let mut cov = DMatrix::<Complex64>::identity(n, n);
        for &s in streams {
            let col = self.gains.column(s);
            cov += &col * col.adjoint();
        }
        cov
    }

    /// `I(U_desired; Y | U_known)`; all remaining streams act as noise.
    pub fn mutual_information(&self, desired: &[usize], known: &[usize]) -> Result<f64> {
        let k = self.gains.ncols();
        for &s in desired.iter().chain(known) {
            if s >= k {
                return Err(CoopError::invalid(format!(
                    "stream index {s} out of range for {k} streams"
                )));
            }
        }
        let noise: Vec<usize> = (0..k)
            .filter(|s| !desired.contains(s) && !known.contains(s))
            .collect();
        let mut present = noise.clone();
        present.extend_from_slice(desired);
        Ok(self.log2_det_plus_identity(&present) - self.log2_det_plus_identity(&noise))
    }

    /// `log2 det(I + A_S A_S^H)` from the singular values of `A_S`.
    ///
    /// Forming the covariance first loses the small eigenvalues once gains
    /// reach ~1e8; the singular values keep them.
    fn log2_det_plus_identity(&self, streams: &[usize]) -> f64 {
        if streams.is_empty() {
            return 0.0;
        }
        let a = self.gains.select_columns(streams);
        a.singular_values()
            .iter()
            .map(|s| (s * s).ln_1p())
            .sum::<f64>()
            / std::f64::consts::LN_2
    }
}
