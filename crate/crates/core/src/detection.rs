//! MRC combining, pilot removal and Monte Carlo achievable rates.
//!
//! Rates use the worst-case uncorrelated-Gaussian-noise bound: the MRC
//! output of a target user is decomposed as `s_hat = a s + b c + e`, where
//! `b c` is the deterministic pilot-induced mean and `e` is uncorrelated
//! with `s`. Per drop, `a`, `b` and the variance of `e` are fitted by least
//! squares over all inner trials, users and symbols, and the drop's rate is
//! `log2(1 + |a|^2 E|s|^2 / var(e))`.

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::BlockComponents;
use crate::error::{Error, Result};
use crate::estimation::{
    apply_receiver, estimate_channel, estimate_channel_qtp, lmmse_gains, qtp_gains, McSetup, Scheme, Trial,
};
use crate::geometry::{LargeScaleRealization, NetworkConfig};
use crate::rng::PILOTS;
use crate::stats::{mean_stderr, CompensatedSum};
use crate::waveform::{make_qtp_pilot_book, PilotBook};

/// MRC outputs `(1/M) H_hat^H R` for every column of `h_hat`, one row per
/// user and one column per symbol.
pub fn mrc_combine(r: &Array2<Complex64>, h_hat: ArrayView2<Complex64>) -> Result<Array2<Complex64>> {
    if r.nrows() != h_hat.nrows() {
        return Err(Error::Shape(format!("block {:?} vs estimates {:?}", r.dim(), h_hat.dim())));
    }
    let m = r.nrows() as f64;
    Ok(h_hat.t().mapv(|z| z.conj() / m).dot(r))
}

/// MRC outputs at a single symbol `t`.
pub fn mrc_combine_at(r: &Array2<Complex64>, h_hat: ArrayView2<Complex64>, t: usize) -> Result<Vec<Complex64>> {
    if r.nrows() != h_hat.nrows() || t >= r.ncols() {
        return Err(Error::Shape(format!("block {:?}, estimates {:?}, t = {t}", r.dim(), h_hat.dim())));
    }
    let m = r.nrows() as f64;
    let col = r.column(t);
    Ok(h_hat
        .columns()
        .into_iter()
        .map(|h| h.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum::<Complex64>() / m)
        .collect())
}

/// Subtracts the estimated pilot contribution,
/// `R - sqrt(alpha rho gamma) H_hat C`.
pub fn remove_pilots(
    r: &Array2<Complex64>,
    h_hat: &Array2<Complex64>,
    pilots: &Array2<Complex64>,
    alpha: f64,
    rho: f64,
    gamma: f64,
) -> Result<Array2<Complex64>> {
    if h_hat.ncols() != pilots.nrows() || pilots.ncols() != r.ncols() || h_hat.nrows() != r.nrows() {
        return Err(Error::Shape(format!(
            "block {:?}, estimates {:?}, pilots {:?}",
            r.dim(),
            h_hat.dim(),
            pilots.dim()
        )));
    }
    if alpha == 0.0 {
        return Ok(r.clone());
    }
    let scale = (alpha * rho * gamma).sqrt();
    let mut out = h_hat.dot(pilots);
    ndarray::Zip::from(&mut out).and(r).for_each(|o, &y| *o = y - *o * scale);
    Ok(out)
}

/// Running sums for the effective-channel fit `s_hat = a s + b c + e`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SinrAccumulator {
    s_hat2: f64,
    s2: f64,
    c2: f64,
    a_s: Complex64,
    a_c: Complex64,
    g_sc: Complex64,
    n: usize,
}

/// Fitted effective channel of one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSinr {
    pub a_hat: Complex64,
    pub noise_var: f64,
    /// Mean data power `E|s|^2` of the samples.
    pub signal_power: f64,
    pub sinr: f64,
    pub n: usize,
}

impl EffectiveSinr {
    pub fn rate_bits(&self) -> f64 {
        (1.0 + self.sinr).log2()
    }
}

impl SinrAccumulator {
    /// Adds one sample; `c` is the known pilot symbol (0 if none).
    #[inline]
    pub fn add(&mut self, s_hat: Complex64, s: Complex64, c: Complex64) {
        self.s_hat2 += s_hat.norm_sqr();
        self.s2 += s.norm_sqr();
        self.c2 += c.norm_sqr();
        self.a_s += s.conj() * s_hat;
        self.a_c += c.conj() * s_hat;
        self.g_sc += s.conj() * c;
        self.n += 1;
    }

    /// Adds `K x T` blocks of outputs, data and pilots.
    pub fn add_block(&mut self, s_hat: &Array2<Complex64>, s: ArrayView2<Complex64>, c: ArrayView2<Complex64>) {
        ndarray::Zip::from(s_hat).and(s).and(c).for_each(|&y, &s, &c| self.add(y, s, c));
    }

    pub fn merge(&mut self, other: &Self) {
        self.s_hat2 += other.s_hat2;
        self.s2 += other.s2;
        self.c2 += other.c2;
        self.a_s += other.a_s;
        self.a_c += other.a_c;
        self.g_sc += other.g_sc;
        self.n += other.n;
    }

    fn residual(&self, a: Complex64, b: Complex64) -> f64 {
        self.s_hat2 + a.norm_sqr() * self.s2 + b.norm_sqr() * self.c2
            - 2.0 * (a.conj() * self.a_s).re
            - 2.0 * (b.conj() * self.a_c).re
            + 2.0 * (a.conj() * b * self.g_sc).re
    }

    /// Least-squares fit of `a` and `b`; `a` is projected onto the real axis
    /// when its imaginary part is below three standard errors.
    pub fn finish(&self) -> Result<EffectiveSinr> {
        if self.n == 0 || self.s2 == 0.0 {
            return Err(Error::DegenerateNoise);
        }
        let fit_b = |a: Complex64| {
            if self.c2 > 0.0 {
                (self.a_c - a * self.g_sc.conj()) / self.c2
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        let mut a = if self.c2 > 0.0 {
            let det = self.s2 * self.c2 - self.g_sc.norm_sqr();
            (self.a_s * self.c2 - self.g_sc * self.a_c) / det
        } else {
            self.a_s / self.s2
        };
        let mut b = fit_b(a);
        let dof = self.n as f64 - if self.c2 > 0.0 { 2.0 } else { 1.0 };
        let noise_var = self.residual(a, b).max(0.0) / dof;
        let se = (noise_var / (2.0 * self.s2)).sqrt();
        if a.im.abs() < 3.0 * se {
            a = Complex64::new(a.re, 0.0);
            b = fit_b(a);
        }
        let noise_var = self.residual(a, b).max(0.0) / dof;
        if !(noise_var > 0.0) {
            return Err(Error::DegenerateNoise);
        }
        let signal_power = self.s2 / self.n as f64;
        Ok(EffectiveSinr {
            a_hat: a,
            noise_var,
            signal_power,
            sinr: a.norm_sqr() * signal_power / noise_var,
            n: self.n,
        })
    }
}

/// Monte Carlo rate of one scheme at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rate_bits: f64,
    /// Effective gain averaged over drops.
    pub a_hat: Complex64,
    /// Effective noise variance averaged over drops.
    pub noise_var: f64,
    /// Total samples entering the fits.
    pub n_trials: usize,
    /// Standard error of `rate_bits` across drops.
    pub stderr: f64,
    pub scheme: Scheme,
    pub pilot_removal: bool,
    /// Pilot power fraction; for the time-multiplexed scheme, the share of
    /// the block spent on training, `tau / T`.
    pub alpha_used: f64,
}

/// Per-drop accumulators for a list of power fractions, sharing every random
/// draw across the list.
fn drop_accumulators(
    cfg: &NetworkConfig,
    scheme: Scheme,
    pilot_removal: bool,
    alphas: &[f64],
    setup: &McSetup,
    drop_idx: usize,
    drop: &LargeScaleRealization,
    book: &PilotBook,
) -> Result<Vec<SinrAccumulator>> {
    let k = cfg.users_per_cell;
    let t = cfg.coherence;
    let quantized = scheme.is_quantized();
    let sigma_y = drop.kappa0 * cfg.rho + 1.0;
    let c_target = book.c.slice(s![..k, ..]);
    let mut accs = vec![SinrAccumulator::default(); alphas.len()];
    for j in 0..setup.counts.n_inner {
        let trial = Trial::draw(setup.trial_node(drop_idx, j), cfg, drop, t);
        let parts = BlockComponents::new(&trial.channel, &book.c, &trial.data, trial.noise)?;
        let s_target = trial.data.slice(s![..k, ..]);
        for (acc, &alpha) in accs.iter_mut().zip(alphas) {
            let y = parts.assemble(alpha, cfg.rho);
            let (r, q) = apply_receiver(y, quantized, sigma_y, setup.variance_mode)?;
            let gains = lmmse_gains(alpha, cfg.rho, t, drop, &q);
            let n_est = if pilot_removal { gains.len() } else { k };
            let est = estimate_channel(&r, &book.c, &gains[..n_est], scheme)?;
            let r = if pilot_removal {
                remove_pilots(&r, &est.h_hat, &book.c, alpha, cfg.rho, q.gamma)?
            } else {
                r
            };
            let s_hat = mrc_combine(&r, est.h_hat.slice(s![.., ..k]))?;
            acc.add_block(&s_hat, s_target, c_target);
        }
    }
    Ok(accs)
}

/// Accumulator for one drop of the time-multiplexed baseline.
fn drop_accumulator_qtp(
    cfg: &NetworkConfig,
    setup: &McSetup,
    drop_idx: usize,
    drop: &LargeScaleRealization,
) -> Result<SinrAccumulator> {
    let k = cfg.users_per_cell;
    let tau = k;
    let data_len = cfg.coherence - tau;
    let node = if setup.redraw_pilots {
        setup.root().path(PILOTS, drop_idx as u64)
    } else {
        setup.root().child(PILOTS)
    };
    let book = make_qtp_pilot_book(k, cfg.cells, &mut node.child(1).stream());
    let sigma_y = drop.kappa0 * cfg.rho + 1.0;
    let zeros = Array2::<Complex64>::zeros((k, data_len));
    let mut acc = SinrAccumulator::default();
    for j in 0..setup.counts.n_inner {
        let trial = Trial::draw(setup.trial_node(drop_idx, j), cfg, drop, cfg.coherence);
        let g = trial.channel.effective();
        let scale = cfg.rho.sqrt();
        let y_train = g.dot(&book.c).mapv(|z| z * scale) + trial.noise.slice(s![.., ..tau]);
        let data = trial.data.slice(s![.., ..data_len]);
        let y_data = g.dot(&data).mapv(|z| z * scale) + trial.noise.slice(s![.., tau..]);
        let (r_train, q) = apply_receiver(y_train, true, sigma_y, setup.variance_mode)?;
        let (r_data, _) = apply_receiver(y_data, true, sigma_y, setup.variance_mode)?;
        let gains = qtp_gains(cfg.rho, drop, &book, &q);
        let est = estimate_channel_qtp(&r_train, &book, &gains[..k])?;
        let s_hat = mrc_combine(&r_data, est.h_hat.view())?;
        acc.add_block(&s_hat, data.slice(s![..k, ..]), zeros.view());
    }
    Ok(acc)
}

fn check_inputs(cfg: &NetworkConfig, setup: &McSetup, alphas: &[f64]) -> Result<()> {
    cfg.validate()?;
    setup.counts.validate()?;
    if alphas.is_empty() {
        return Err(Error::config("alpha", "no power fractions given"));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::config("alpha", format!("must lie in [0, 1], got {a}")));
    }
    Ok(())
}

/// Per-drop effective SINR fits for every power fraction in `alphas`.
pub fn drop_sinrs(
    cfg: &NetworkConfig,
    scheme: Scheme,
    pilot_removal: bool,
    alphas: &[f64],
    setup: &McSetup,
    drop_idx: usize,
) -> Result<Vec<EffectiveSinr>> {
    let drop = setup.draw_drop(cfg, drop_idx)?;
    if scheme == Scheme::Qtp {
        let fit = drop_accumulator_qtp(cfg, setup, drop_idx, &drop)?.finish()?;
        return Ok(vec![fit; alphas.len()]);
    }
    let book = setup.pilot_book(cfg, drop_idx)?;
    drop_accumulators(cfg, scheme, pilot_removal, alphas, setup, drop_idx, &drop, &book)?
        .iter()
        .map(SinrAccumulator::finish)
        .collect()
}

/// Rate of a degenerate operating point: no data energy, or no pilot energy
/// to estimate with.
fn is_trivial(scheme: Scheme, alpha: f64) -> bool {
    scheme != Scheme::Qtp && (alpha == 0.0 || alpha == 1.0)
}

fn prelog(cfg: &NetworkConfig, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Qtp => (cfg.coherence - cfg.users_per_cell) as f64 / cfg.coherence as f64,
        _ => 1.0,
    }
}

fn alpha_reported(cfg: &NetworkConfig, scheme: Scheme, alpha: f64) -> f64 {
    match scheme {
        Scheme::Qtp => cfg.users_per_cell as f64 / cfg.coherence as f64,
        _ => alpha,
    }
}

/// Monte Carlo achievable rate at the fixed power fraction `cfg.alpha`.
pub fn estimate_rate(cfg: &NetworkConfig, scheme: Scheme, pilot_removal: bool, setup: &McSetup) -> Result<RateEstimate> {
    Ok(estimate_rates(cfg, scheme, pilot_removal, &[cfg.alpha], setup)?.remove(0))
}

/// Monte Carlo rates for several power fractions with common random numbers.
pub fn estimate_rates(
    cfg: &NetworkConfig,
    scheme: Scheme,
    pilot_removal: bool,
    alphas: &[f64],
    setup: &McSetup,
) -> Result<Vec<RateEstimate>> {
    check_inputs(cfg, setup, alphas)?;
    let active: Vec<f64> = alphas.iter().copied().filter(|&a| !is_trivial(scheme, a)).collect();
    let per_drop: Vec<Vec<EffectiveSinr>> = if active.is_empty() {
        Vec::new()
    } else {
        (0..setup.counts.n_outer)
            .into_par_iter()
            .map(|i| drop_sinrs(cfg, scheme, pilot_removal, &active, setup, i))
            .collect::<Result<_>>()?
    };
    let scale = prelog(cfg, scheme);
    let n_samples = setup.counts.n_outer * setup.counts.n_inner * cfg.users_per_cell * cfg.coherence;
    let mut out = Vec::with_capacity(alphas.len());
    let mut col = 0;
    for &alpha in alphas {
        if is_trivial(scheme, alpha) {
            out.push(RateEstimate {
                rate_bits: 0.0,
                a_hat: Complex64::new(0.0, 0.0),
                noise_var: f64::NAN,
                n_trials: n_samples,
                stderr: 0.0,
                scheme,
                pilot_removal,
                alpha_used: alpha,
            });
            continue;
        }
        let rates: Vec<f64> = per_drop.iter().map(|d| scale * d[col].rate_bits()).collect();
        let est = mean_stderr(&rates);
        let mut a_sum = Complex64::new(0.0, 0.0);
        let mut v_sum = CompensatedSum::default();
        for d in &per_drop {
            a_sum += d[col].a_hat;
            v_sum.add(d[col].noise_var);
        }
        let n = per_drop.len() as f64;
        out.push(RateEstimate {
            rate_bits: est.mean,
            a_hat: a_sum / n,
            noise_var: v_sum.value() / n,
            n_trials: n_samples,
            stderr: est.stderr,
            scheme,
            pilot_removal,
            alpha_used: alpha_reported(cfg, scheme, alpha),
        });
        col += 1;
    }
    Ok(out)
}

/// Power-fraction grid: a coarse pass followed by one refinement pass around
/// the best coarse point.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid {
    pub coarse: Vec<f64>,
    pub fine_step: f64,
    /// Fine points on each side of the coarse optimum.
    pub fine_points: usize,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self {
            coarse: (1..=19).map(|i| i as f64 * 0.05).collect(),
            fine_step: 0.01,
            fine_points: 4,
        }
    }
}

impl AlphaGrid {
    fn refine(&self, centre: f64) -> Vec<f64> {
        let n = self.fine_points as i64;
        (-n..=n)
            .map(|i| centre + i as f64 * self.fine_step)
            .filter(|&a| a > 0.0 && a < 1.0 && (a - centre).abs() > 1e-12)
            .collect()
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Result of the per-drop power-fraction search.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSearch {
    /// Mean over drops of the maximizing fraction.
    pub alpha_star: f64,
    /// Standard error of `alpha_star` across drops.
    pub alpha_stderr: f64,
    /// Mean over drops of the maximal rate.
    pub rate: RateEstimate,
}

/// Per-drop maximization of the Monte Carlo rate over the power fraction.
pub fn optimize_alpha_mc(
    cfg: &NetworkConfig,
    scheme: Scheme,
    pilot_removal: bool,
    grid: &AlphaGrid,
    setup: &McSetup,
) -> Result<AlphaSearch> {
    check_inputs(cfg, setup, &grid.coarse)?;
    if grid.coarse.iter().any(|&a| a <= 0.0 || a >= 1.0) {
        return Err(Error::config("alpha_grid", "points must lie strictly inside (0, 1)"));
    }
    if scheme == Scheme::Qtp {
        let rate = estimate_rate(cfg, scheme, false, setup)?;
        return Ok(AlphaSearch { alpha_star: rate.alpha_used, alpha_stderr: 0.0, rate });
    }
    let best: Vec<(f64, EffectiveSinr)> = (0..setup.counts.n_outer)
        .into_par_iter()
        .map(|i| -> Result<(f64, EffectiveSinr)> {
            let coarse = drop_sinrs(cfg, scheme, pilot_removal, &grid.coarse, setup, i)?;
            let rates: Vec<f64> = coarse.iter().map(EffectiveSinr::rate_bits).collect();
            let b = argmax(&rates);
            let mut best = (grid.coarse[b], coarse[b]);
            let fine = grid.refine(grid.coarse[b]);
            if !fine.is_empty() {
                let fits = drop_sinrs(cfg, scheme, pilot_removal, &fine, setup, i)?;
                for (a, fit) in fine.into_iter().zip(fits) {
                    if fit.rate_bits() > best.1.rate_bits() {
                        best = (a, fit);
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let alphas: Vec<f64> = best.iter().map(|b| b.0).collect();
    let rates: Vec<f64> = best.iter().map(|b| b.1.rate_bits()).collect();
    let alpha = mean_stderr(&alphas);
    let rate = mean_stderr(&rates);
    let n = best.len() as f64;
    let est = RateEstimate {
        rate_bits: rate.mean,
        a_hat: best.iter().map(|b| b.1.a_hat).sum::<Complex64>() / n,
        noise_var: crate::stats::sum(best.iter().map(|b| b.1.noise_var)) / n,
        n_trials: setup.counts.n_outer * setup.counts.n_inner * cfg.users_per_cell * cfg.coherence,
        stderr: rate.stderr,
        scheme,
        pilot_removal,
        alpha_used: alpha.mean,
    };
    Ok(AlphaSearch { alpha_star: alpha.mean, alpha_stderr: alpha.stderr, rate: est })
}
