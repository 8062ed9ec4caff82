//! Link-level Monte Carlo simulator and closed-form analytics for the uplink
//! of 1-bit quantized multicell massive MIMO with superimposed pilots.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: hexagonal layout, user drops, relative large-scale gains
//!   and the network moments `zeta1 = E{kappa0}`, `zeta2 = E{kappa0^2}`,
//!   `zeta3 = E{kappa1}`.
//! - [`waveform`]: Fourier pilot books, Gaussian data and the superimposed
//!   transmit frame.
//! - [`channel`]: i.i.d. Rayleigh fading and the unquantized received block.
//! - [`quantizer`]: zero-threshold 1-bit complex quantizer and its Bussgang
//!   linear model.
//! - [`estimation`]: LMMSE channel estimation (QSP, UQSP, QTP) and MSE.
//! - [`detection`]: MRC, pilot removal and Monte Carlo achievable rates.
//! - [`analytics`]: closed-form effective SINRs, optimal power split and
//!   asymptotic limits, each implemented twice (displayed closed form and
//!   assembled from its constituent moments).
//! - [`harness`]: experiment specs, presets and CSV output.

pub mod analytics;
pub mod channel;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod quantizer;
pub mod rng;
pub mod stats;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Converts a dB value to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
