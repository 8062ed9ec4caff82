//! Zero-threshold 1-bit complex quantizer and its Bussgang linear model
//! `r = sqrt(gamma) y + z`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Quantization-noise variance of the 1-bit quantizer, `1 - 2/pi`.
pub const SIGMA_Z_SQ: f64 = 1.0 - FRAC_2_PI;

#[inline]
fn sign(x: f64) -> f64 {
    // sign(0) maps to +1
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Quantizes one sample to `(±1 ± j)/sqrt(2)`.
#[inline]
pub fn quantize_sample(y: Complex64) -> Complex64 {
    Complex64::new(sign(y.re) * FRAC_1_SQRT_2, sign(y.im) * FRAC_1_SQRT_2)
}

pub fn quantize(y: &Array2<Complex64>) -> Array2<Complex64> {
    y.mapv(quantize_sample)
}

/// Linear-model parameters of the receive chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerModel {
    pub gamma: f64,
    pub sigma_z_sq: f64,
    /// Input variance the gain was computed for.
    pub sigma_in_sq: f64,
}

impl QuantizerModel {
    /// Infinite-resolution chain: `gamma = 1`, no quantization noise.
    pub fn unquantized(sigma_in_sq: f64) -> Self {
        Self { gamma: 1.0, sigma_z_sq: 0.0, sigma_in_sq }
    }

    pub fn is_quantized(&self) -> bool {
        self.sigma_z_sq > 0.0
    }
}

/// Bussgang gain `gamma = 2 / (pi sigma_in^2)` for a Gaussian input of the
/// given variance.
pub fn bussgang_params(sigma_in_sq: f64) -> Result<QuantizerModel> {
    if !(sigma_in_sq.is_finite() && sigma_in_sq > 0.0) {
        return Err(Error::ModelDomain(format!("input variance must be positive, got {sigma_in_sq}")));
    }
    Ok(QuantizerModel { gamma: FRAC_2_PI / sigma_in_sq, sigma_z_sq: SIGMA_Z_SQ, sigma_in_sq })
}

/// Where the Bussgang gain takes its input variance from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// `kappa0 rho + 1`, the model variance.
    #[default]
    Model,
    /// Sample variance of the realized block.
    Sample,
}

/// Mean `|y|^2` over a block.
pub fn sample_variance(y: &Array2<Complex64>) -> f64 {
    crate::stats::sum(y.iter().map(|z| z.norm_sqr())) / y.len() as f64
}
