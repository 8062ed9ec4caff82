//! LMMSE channel estimation for superimposed pilots (quantized and
//! unquantized) and for the time-multiplexed baseline, plus Monte Carlo and
//! closed-form estimation MSE.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{BlockComponents, ChannelRealization};
use crate::error::{Error, Result};
use crate::geometry::{drop_users, LargeScaleRealization, NetworkConfig};
use crate::quantizer::{bussgang_params, quantize, sample_variance, QuantizerModel, VarianceMode, SIGMA_Z_SQ};
use crate::rng::{complex_normal_matrix, SeedTree, DROP, GEOMETRY, PILOTS, TRIAL};
use crate::stats::{mean_stderr, MeanEstimate};
use crate::waveform::{make_data, make_pilot_book, PilotBook, QtpPilotBook};

/// Transmission and receiver scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Superimposed pilots, 1-bit receiver.
    Qsp,
    /// Superimposed pilots, infinite-resolution receiver.
    Uqsp,
    /// Time-multiplexed pilots, 1-bit receiver.
    Qtp,
}

impl Scheme {
    pub fn is_quantized(self) -> bool {
        !matches!(self, Scheme::Uqsp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Qsp => "qsp",
            Scheme::Uqsp => "uqsp",
            Scheme::Qtp => "qtp",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qsp" => Ok(Scheme::Qsp),
            "uqsp" => Ok(Scheme::Uqsp),
            "qtp" => Ok(Scheme::Qtp),
            other => Err(Error::Parse(format!("unknown scheme `{other}` (expected qsp, uqsp or qtp)"))),
        }
    }
}

/// Linear model of the receive chain for a block of the given variance.
pub fn receive_model(quantized: bool, sigma_in_sq: f64) -> Result<QuantizerModel> {
    if quantized {
        bussgang_params(sigma_in_sq)
    } else {
        Ok(QuantizerModel::unquantized(sigma_in_sq))
    }
}

/// Applies the receive chain to `y` and returns the chain output together
/// with the linear model used for it.
pub fn apply_receiver(
    y: Array2<Complex64>,
    quantized: bool,
    model_variance: f64,
    mode: VarianceMode,
) -> Result<(Array2<Complex64>, QuantizerModel)> {
    if !quantized {
        return Ok((y, QuantizerModel::unquantized(model_variance)));
    }
    let var = match mode {
        VarianceMode::Model => model_variance,
        VarianceMode::Sample => sample_variance(&y),
    };
    Ok((quantize(&y), bussgang_params(var)?))
}

/// LMMSE gain for a user of relative gain `theta`; the estimate
/// `gain * R c*` targets `sqrt(theta) h`. With `theta = 1` this is the gain of
/// a target-cell user.
pub fn lmmse_gain(alpha: f64, rho: f64, t: usize, kappa0: f64, theta: f64, q: &QuantizerModel) -> f64 {
    let g = q.gamma;
    let apg = alpha * rho * g;
    apg.sqrt() * theta / (apg * t as f64 * theta + (1.0 - alpha) * g * rho * kappa0 + g + q.sigma_z_sq)
}

/// Gain `xi'` of a target-cell user.
pub fn lmmse_gain_qsp(alpha: f64, rho: f64, t: usize, kappa0: f64, q: &QuantizerModel) -> f64 {
    lmmse_gain(alpha, rho, t, kappa0, 1.0, q)
}

/// Per-user gains in user order.
pub fn lmmse_gains(alpha: f64, rho: f64, t: usize, drop: &LargeScaleRealization, q: &QuantizerModel) -> Vec<f64> {
    drop.theta.iter().map(|&th| lmmse_gain(alpha, rho, t, drop.kappa0, th, q)).collect()
}

/// Per-realization error variance `1 - T sqrt(alpha rho gamma) xi`.
pub fn per_realization_mse(alpha: f64, rho: f64, t: usize, kappa0: f64, q: &QuantizerModel) -> f64 {
    1.0 - t as f64 * (alpha * rho * q.gamma).sqrt() * lmmse_gain_qsp(alpha, rho, t, kappa0, q)
}

/// Error variance in closed form, `1 - a rho / (a rho + ((1-a) rho kappa0 +
/// sigma_z^2/gamma + 1)/T)`.
pub fn mse_closed_form(alpha: f64, rho: f64, t: usize, kappa0: f64, q: &QuantizerModel) -> f64 {
    let ar = alpha * rho;
    1.0 - ar / (ar + ((1.0 - alpha) * rho * kappa0 + q.sigma_z_sq / q.gamma + 1.0) / t as f64)
}

/// Approximate upper bound on the network-averaged estimation MSE of the
/// quantized receiver.
pub fn mse_bound_multicell(alpha: f64, rho: f64, t: usize, zeta1: f64) -> f64 {
    let c = SIGMA_Z_SQ * std::f64::consts::FRAC_PI_2;
    let ar = alpha * rho;
    1.0 - ar / (ar + (((1.0 - alpha) + c) * rho * zeta1 + c + 1.0) / t as f64)
}

/// Channel estimates for a set of users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// `M x n` estimates, one column per estimated user.
    pub h_hat: Array2<Complex64>,
    /// LMMSE gain applied per column.
    pub xi: Vec<f64>,
    pub scheme: Scheme,
}

/// Pilot-correlator estimate `h_hat_i = xi_i R c_i*` for the first
/// `xi.len()` users of `pilots`.
pub fn estimate_channel(r: &Array2<Complex64>, pilots: &Array2<Complex64>, xi: &[f64], scheme: Scheme) -> Result<ChannelEstimate> {
    let n = xi.len();
    if pilots.ncols() != r.ncols() || n > pilots.nrows() {
        return Err(Error::Shape(format!(
            "block {:?}, pilots {:?}, {n} gains",
            r.dim(),
            pilots.dim()
        )));
    }
    let c_h = pilots.slice(s![..n, ..]).t().mapv(|z| z.conj());
    let mut h_hat = r.dot(&c_h);
    for (mut col, &x) in h_hat.columns_mut().into_iter().zip(xi) {
        col.mapv_inplace(|z| z * x);
    }
    Ok(ChannelEstimate { h_hat, xi: xi.to_vec(), scheme })
}

/// Gains of the time-multiplexed estimator: for user `i`,
/// `sqrt(rho gamma) theta_i / (rho gamma tau S_i + gamma + sigma_z^2)` where
/// `S_i` sums `theta` over all users sharing the sequence of `i`.
pub fn qtp_gains(rho: f64, drop: &LargeScaleRealization, book: &QtpPilotBook, q: &QuantizerModel) -> Vec<f64> {
    let theta = drop.theta_flat();
    let tau = book.tau() as f64;
    let g = q.gamma;
    (0..theta.len())
        .map(|i| {
            let shared: f64 = book.sharing(i).map(|u| theta[u]).sum();
            (rho * g).sqrt() * theta[i] / (rho * g * tau * shared + g + q.sigma_z_sq)
        })
        .collect()
}

/// Estimates from the `M x tau` training block of the time-multiplexed
/// baseline. Users sharing a sequence get contaminated estimates.
pub fn estimate_channel_qtp(r_train: &Array2<Complex64>, book: &QtpPilotBook, xi: &[f64]) -> Result<ChannelEstimate> {
    if book.tau() != book.users_per_cell {
        return Err(Error::config("tau", "training length must equal users per cell"));
    }
    if r_train.ncols() != book.tau() {
        return Err(Error::Shape(format!("training block has {} symbols, tau = {}", r_train.ncols(), book.tau())));
    }
    estimate_channel(r_train, &book.c, xi, Scheme::Qtp)
}

/// Trial counts for Monte Carlo runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    /// Large-scale drops.
    pub n_outer: usize,
    /// Small-scale fading, data and noise draws per drop.
    pub n_inner: usize,
}

impl TrialCounts {
    pub fn validate(&self) -> Result<()> {
        if self.n_outer == 0 {
            return Err(Error::config("n_outer", "must be at least 1"));
        }
        if self.n_inner == 0 {
            return Err(Error::config("n_inner", "must be at least 1"));
        }
        Ok(())
    }
}

/// Randomness layout shared by the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSetup {
    pub counts: TrialCounts,
    pub seed: u64,
    /// Draw a new pilot book for every drop instead of one per experiment.
    pub redraw_pilots: bool,
    pub variance_mode: VarianceMode,
}

impl McSetup {
    pub fn new(counts: TrialCounts, seed: u64) -> Self {
        Self { counts, seed, redraw_pilots: false, variance_mode: VarianceMode::Model }
    }

    pub(crate) fn root(&self) -> SeedTree {
        SeedTree::new(self.seed)
    }

    pub(crate) fn drop_node(&self, drop: usize) -> SeedTree {
        self.root().path(DROP, drop as u64)
    }

    pub(crate) fn trial_node(&self, drop: usize, trial: usize) -> SeedTree {
        self.drop_node(drop).path(TRIAL, trial as u64)
    }

    /// Large-scale realization of drop `i`; `L = 1` is the plain single-cell
    /// model.
    pub(crate) fn draw_drop(&self, cfg: &NetworkConfig, drop: usize) -> Result<LargeScaleRealization> {
        if cfg.cells == 1 {
            return Ok(LargeScaleRealization::single_cell(cfg.users_per_cell));
        }
        drop_users(cfg, &mut self.drop_node(drop).child(GEOMETRY).stream())
    }

    pub(crate) fn pilot_book(&self, cfg: &NetworkConfig, drop: usize) -> Result<PilotBook> {
        let node = if self.redraw_pilots {
            self.root().path(PILOTS, drop as u64)
        } else {
            self.root().child(PILOTS)
        };
        make_pilot_book(cfg.total_users(), cfg.coherence, &mut node.stream())
    }
}

/// Fading, data and noise of one small-scale trial.
pub(crate) struct Trial {
    pub channel: ChannelRealization,
    pub data: Array2<Complex64>,
    pub noise: Array2<Complex64>,
}

impl Trial {
    pub fn draw(node: SeedTree, cfg: &NetworkConfig, drop: &LargeScaleRealization, symbols: usize) -> Self {
        let mut rng = node.stream();
        let channel = ChannelRealization::draw(cfg.antennas, drop.amplitudes(), &mut rng);
        let data = make_data(cfg.total_users(), symbols, &mut rng);
        let noise = complex_normal_matrix(cfg.antennas, symbols, &mut rng);
        Self { channel, data, noise }
    }
}

/// Monte Carlo channel-estimation MSE of the target cell's users with
/// superimposed pilots at `cfg.alpha`, averaged over antennas, users,
/// trials and drops. The standard error is taken across drops.
pub fn mse_monte_carlo(cfg: &NetworkConfig, scheme: Scheme, setup: &McSetup) -> Result<MeanEstimate> {
    cfg.validate()?;
    setup.counts.validate()?;
    if scheme == Scheme::Qtp {
        return Err(Error::config("scheme", "MSE Monte Carlo covers superimposed pilots only"));
    }
    let k = cfg.users_per_cell;
    let per_drop: Vec<f64> = (0..setup.counts.n_outer)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let drop = setup.draw_drop(cfg, i)?;
            let book = setup.pilot_book(cfg, i)?;
            let mut acc = 0.0;
            for j in 0..setup.counts.n_inner {
                let trial = Trial::draw(setup.trial_node(i, j), cfg, &drop, cfg.coherence);
                let parts = BlockComponents::new(&trial.channel, &book.c, &trial.data, trial.noise)?;
                let y = parts.assemble(cfg.alpha, cfg.rho);
                let (r, q) = apply_receiver(y, scheme.is_quantized(), drop.kappa0 * cfg.rho + 1.0, setup.variance_mode)?;
                let xi = vec![lmmse_gain_qsp(cfg.alpha, cfg.rho, cfg.coherence, drop.kappa0, &q); k];
                let est = estimate_channel(&r, &book.c, &xi, scheme)?;
                let truth = trial.channel.h.slice(s![.., ..k]);
                acc += crate::stats::sum(est.h_hat.iter().zip(truth.iter()).map(|(a, b)| (a - b).norm_sqr()));
            }
            Ok(acc / (setup.counts.n_inner * k * cfg.antennas) as f64)
        })
        .collect::<Result<_>>()?;
    Ok(mean_stderr(&per_drop))
}
