//! Closed-form effective SINRs, optimal power split and asymptotic limits.
//!
//! Every SINR exists twice: as its displayed closed-form polynomial
//! (`sinr_*`) and assembled from the MRC-output moments (`sigma_eps_*`,
//! whose reciprocal must equal the closed form). The multicell assembly
//! divided through by the squared Bussgang gain is a polynomial of degree
//! two in `kappa0` and degree one in `kappa1`, so its network average is
//! obtained exactly by substituting the moments `zeta1`, `zeta2`, `zeta3`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::NetworkMoments;
use crate::quantizer::SIGMA_Z_SQ;

const PI2: f64 = PI * PI;

/// Single-cell operating point. Counts are real so limits can be probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleCellInputs {
    pub alpha: f64,
    pub rho: f64,
    pub t: f64,
    pub m: f64,
    pub k: f64,
}

/// Multicell operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MulticellInputs {
    pub alpha: f64,
    pub rho: f64,
    pub t: f64,
    pub m: f64,
    pub moments: NetworkMoments,
}

impl SingleCellInputs {
    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }
}

impl MulticellInputs {
    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }
}

fn check_common(alpha: f64, rho: f64, t: f64, m: f64) -> Result<()> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::config(name, format!("must be positive, got {v}")))
        }
    };
    positive("rho", rho)?;
    positive("coherence", t)?;
    positive("antennas", m)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

fn ratio(num: f64, den: f64, what: &str) -> Result<f64> {
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::ModelDomain(format!("{what}: denominator {den} is not positive")));
    }
    Ok(num / den)
}

/// `log2(1 + sinr)`.
pub fn rate_bits(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Effective SINR of the 1-bit receiver, single cell.
pub fn sinr_qsp_single(p: &SingleCellInputs) -> Result<f64> {
    check_common(p.alpha, p.rho, p.t, p.m)?;
    let SingleCellInputs { alpha: a, rho: r, t, m, k } = *p;
    let ab = 1.0 - a;
    let den = ab * r * r * k * t * m
        + t / 4.0
            * (8.0 * a * ab * r * r - 4.0 * a * k * k * r * r + PI2 * k * k * r * r - 4.0 * a * k * r
                + 2.0 * PI2 * k * r
                + PI2)
        + a * a * k * r * r
        - 2.0 * a * k * r * r
        - PI2 * k * k * r * r / 4.0
        + k * r * r
        - PI2 * k * r / 2.0
        + a * r * t * t * (1.0 + k * r)
        - PI2 / 4.0;
    ratio(ab * a * r * r * t * t * m, den, "single-cell quantized SINR")
}

/// Effective SINR of the infinite-resolution receiver, single cell.
pub fn sinr_uqsp_single(p: &SingleCellInputs) -> Result<f64> {
    check_common(p.alpha, p.rho, p.t, p.m)?;
    let SingleCellInputs { alpha: a, rho: r, t, m, k } = *p;
    let ab = 1.0 - a;
    let den = ab * r * r * k * t * m
        + a * r * (k * r + 1.0) * t * t
        + 2.0 * a * ab * r * r * t
        + ab * r * r * k * k * t
        + (2.0 - a) * r * k * t
        + t
        + ab * ab * r * r * k;
    ratio(ab * a * r * r * t * t * m, den, "single-cell unquantized SINR")
}

/// Effective SINR of the 1-bit receiver with inter-cell interference.
pub fn sinr_qsp_multicell(p: &MulticellInputs) -> Result<f64> {
    check_common(p.alpha, p.rho, p.t, p.m)?;
    let MulticellInputs { alpha: a, rho: r, t, m, moments } = *p;
    let NetworkMoments { zeta1: z1, zeta2: z2, zeta3: z3 } = moments;
    let ab = 1.0 - a;
    let r2 = r * r;
    let den = ab * r2 * m * t * z3
        + ab * ab * r2 * z3
        + (PI2 * r2 * t - PI2 * r2 - 4.0 * a * r2 * t) * z2 / 4.0
        + (4.0 * a * r2 * t * t - 2.0 * PI2 * r - 4.0 * a * r * t + 2.0 * PI2 * r * t) * z1 / 4.0
        + (4.0 * a * r * t * t - 8.0 * a * a * r2 * t + 8.0 * a * r2 * t + PI2 * t - PI2) / 4.0;
    ratio(ab * a * r2 * t * t * m, den, "multicell quantized SINR")
}

/// Effective SINR of the infinite-resolution receiver with inter-cell
/// interference.
pub fn sinr_uqsp_multicell(p: &MulticellInputs) -> Result<f64> {
    check_common(p.alpha, p.rho, p.t, p.m)?;
    let MulticellInputs { alpha: a, rho: r, t, m, moments } = *p;
    let NetworkMoments { zeta1: z1, zeta2: z2, zeta3: z3 } = moments;
    let ab = 1.0 - a;
    let r2 = r * r;
    let den = ab * r2 * m * t * z3
        + ab * ab * r2 * z3
        + ab * r2 * t * z2
        + (a * r2 * t * t + a * r * t + 2.0 * ab * r * t) * z1
        + a * r * t * t
        + 2.0 * a * ab * r2 * t
        + t;
    ratio(ab * a * r2 * t * t * m, den, "multicell unquantized SINR")
}

/// `f(t,t)` of the quantized chain.
pub fn f_tt_quantized() -> f64 {
    1.0
}

/// `f(t,t)` of the unquantized chain, `(M + 1) sigma_y^4 / M`.
pub fn f_tt_unquantized(m: f64, sigma_y_sq: f64) -> f64 {
    (m + 1.0) * sigma_y_sq * sigma_y_sq / m
}

fn interior(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::ModelDomain(format!("normalized noise variance needs alpha in (0, 1), got {alpha}")))
    }
}

/// Normalized effective noise variance of the single-cell MRC output,
/// assembled from its moments with an explicit chain model `(gamma,
/// sigma_z^2)` and fourth-moment term `f_tt`.
pub fn sigma_eps_single_with(p: &SingleCellInputs, gamma: f64, sigma_z_sq: f64, f_tt: f64) -> Result<f64> {
    check_common(p.alpha, p.rho, p.t, p.m)?;
    interior(p.alpha)?;
    let SingleCellInputs { alpha: a, rho: r, t, m, k } = *p;
    let ab = 1.0 - a;
    let sy = k * r + 1.0;
    let r2 = r * r;
    let mu1 = a * a * r2 * m * t * t * (k + m)
        + ab * ab * r2 * k * m * (k * m + k * t + m * t + 1.0)
        + ab * a * r2 * k * m * t * (k + m)
        + ab * a * r2 * m * t * t * (k + m)
        + 2.0 * ab * r * k * m * m
        + 2.0 * ab * a * r2 * m * t * (k * m + 1.0)
        + 2.0 * ab * r * k * m * t
        + a * r * k * m * t
        + 2.0 * a * r * m * m * t
        + a * r * m * t * t
        + m * (m + t)
        - m * (m + 1.0) * sy * sy;
    let xi = (a * r * gamma).sqrt() / (a * r * gamma * t + ab * r * k * gamma + gamma + sigma_z_sq);
    let xi2 = xi * xi;
    let es2 = xi2 * f_tt
        + xi2 * gamma * gamma * mu1 / (m * m)
        + 2.0 * a * r * xi2 * sigma_z_sq * gamma * (t - k)
        + xi2 * sigma_z_sq * sigma_z_sq * (t - 1.0) / m
        + 2.0 * xi2 * gamma * sigma_z_sq * sy * (t - 1.0) / m;
    let gain = (ab * a).sqrt() * r * gamma * xi * t;
    let g2 = gain * gain;
    Ok((es2 - a * r * gamma - g2) / g2)
}

/// Single-cell assembly for the quantized (`quantized = true`) or
/// infinite-resolution chain.
pub fn sigma_eps_single(p: &SingleCellInputs, quantized: bool) -> Result<f64> {
    let sy = p.k * p.rho + 1.0;
    if quantized {
        sigma_eps_single_with(p, 2.0 / (PI * sy), SIGMA_Z_SQ, f_tt_quantized())
    } else {
        sigma_eps_single_with(p, 1.0, 0.0, f_tt_unquantized(p.m, sy))
    }
}

/// Polynomial `c0 + c1 kappa0 + c2 kappa0^2 + d1 kappa1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KappaPoly {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
}

impl KappaPoly {
    pub fn constant(c: f64) -> Self {
        Self { c0: c, ..Default::default() }
    }

    /// `a + b kappa0`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self { c0: a, c1: b, ..Default::default() }
    }

    pub fn kappa1(d: f64) -> Self {
        Self { d1: d, ..Default::default() }
    }

    pub fn eval(&self, kappa0: f64, kappa1: f64) -> f64 {
        self.c0 + self.c1 * kappa0 + self.c2 * kappa0 * kappa0 + self.d1 * kappa1
    }

    /// Expectation over drops, substituting the network moments.
    pub fn expectation(&self, z: &NetworkMoments) -> f64 {
        self.c0 + self.c1 * z.zeta1 + self.c2 * z.zeta2 + self.d1 * z.zeta3
    }

    /// Product of two polynomials; the result must stay within degree two
    /// in `kappa0` and one in `kappa1`.
    pub fn product(&self, o: &Self) -> Self {
        debug_assert!(self.c2 * o.c1 == 0.0 && self.c1 * o.c2 == 0.0 && self.c2 * o.c2 == 0.0);
        debug_assert!(self.d1 * (o.c1 + o.c2 + o.d1) == 0.0 && o.d1 * (self.c1 + self.c2) == 0.0);
        Self {
            c0: self.c0 * o.c0,
            c1: self.c0 * o.c1 + self.c1 * o.c0,
            c2: self.c0 * o.c2 + self.c1 * o.c1 + self.c2 * o.c0,
            d1: self.c0 * o.d1 + self.d1 * o.c0,
        }
    }
}

impl Add for KappaPoly {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { c0: self.c0 + o.c0, c1: self.c1 + o.c1, c2: self.c2 + o.c2, d1: self.d1 + o.d1 }
    }
}

impl Sub for KappaPoly {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl Mul<f64> for KappaPoly {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self { c0: self.c0 * s, c1: self.c1 * s, c2: self.c2 * s, d1: self.d1 * s }
    }
}

/// The multicell normalized noise variance as a polynomial in `kappa0`,
/// `kappa1`, with the Bussgang gain tied to `kappa0 rho + 1`.
pub fn sigma_eps_multicell_poly(alpha: f64, rho: f64, t: f64, m: f64, quantized: bool) -> Result<KappaPoly> {
    check_common(alpha, rho, t, m)?;
    interior(alpha)?;
    let (a, r) = (alpha, rho);
    let ab = 1.0 - a;
    let r2 = r * r;
    let sy = KappaPoly::linear(1.0, r);
    let (sz, inv_gamma, f_tt) = if quantized {
        (SIGMA_Z_SQ, sy * (PI / 2.0), KappaPoly::constant(1.0))
    } else {
        (0.0, KappaPoly::constant(1.0), sy.product(&sy) * ((m + 1.0) / m))
    };
    let mu1p = (KappaPoly {
        c0: a * m * r2 * t * t + 2.0 * a * m * r * t + a * r * t * t - 2.0 * a * a * r2 * t + 2.0 * a * r2 * t + t - 1.0,
        c1: 2.0 * a * m * r2 * t - 2.0 * a * m * r - 2.0 * a * a * m * r2 * t - 2.0 * r + a * r2 * t * t - a * r * t
            + 2.0 * r * t,
        c2: a * a * m * r2 - 2.0 * a * m * r2 - r2 - a * r2 * t + r2 * t,
        d1: 0.0,
    } + KappaPoly::kappa1(ab * r2 * (m * t + ab)))
        * m;
    // Every moment divided by xi^2 gamma^2.
    let inv_g2 = inv_gamma.product(&inv_gamma);
    let es2 = f_tt.product(&inv_g2)
        + mu1p * (1.0 / (m * m))
        + KappaPoly::linear(t, -1.0).product(&inv_gamma) * (2.0 * a * r * sz)
        + inv_g2 * (sz * sz * (t - 1.0) / m)
        + sy.product(&inv_gamma) * (2.0 * sz * (t - 1.0) / m);
    // alpha rho gamma / xi^2 = D^2 with D the gain denominator.
    let d = KappaPoly::linear(a * r * t + 1.0, ab * r) + inv_gamma * sz;
    let scale = 1.0 / (r2 * t * t * ab * a);
    Ok((es2 - d.product(&d)) * scale - KappaPoly::constant(1.0))
}

/// Per-drop multicell normalized noise variance, assembled directly with an
/// explicit `f_tt`. The chain model is derived from `kappa0`.
pub fn sigma_eps_multicell(
    alpha: f64,
    rho: f64,
    t: f64,
    m: f64,
    kappa0: f64,
    kappa1: f64,
    quantized: bool,
    f_tt: f64,
) -> Result<f64> {
    check_common(alpha, rho, t, m)?;
    interior(alpha)?;
    let (a, r) = (alpha, rho);
    let ab = 1.0 - a;
    let r2 = r * r;
    let sy = kappa0 * r + 1.0;
    let (g, sz) = if quantized { (2.0 / (PI * sy), SIGMA_Z_SQ) } else { (1.0, 0.0) };
    let (k0, k1) = (kappa0, kappa1);
    let mu1p = m
        * ((2.0 * a * m * r2 * t - 2.0 * a * m * r - 2.0 * a * a * m * r2 * t - 2.0 * r + a * r2 * t * t - a * r * t
            + 2.0 * r * t)
            * k0
            + (a * a * m * r2 - 2.0 * a * m * r2 - r2 - a * r2 * t + r2 * t) * k0 * k0
            + ab * r2 * (m * t + ab) * k1
            + a * m * r2 * t * t
            + 2.0 * a * m * r * t
            + a * r * t * t
            - 2.0 * a * a * r2 * t
            + 2.0 * a * r2 * t
            + t
            - 1.0);
    let xi = (a * r * g).sqrt() / (a * r * g * t + ab * g * r * k0 + g + sz);
    let xi2 = xi * xi;
    let es2 = xi2 * f_tt
        + xi2 * g * g * mu1p / (m * m)
        + 2.0 * a * r * xi2 * sz * g * (t - k0)
        + xi2 * sz * sz * (t - 1.0) / m
        + 2.0 * xi2 * g * sz * sy * (t - 1.0) / m;
    let gain = xi * g * r * t * (ab * a).sqrt();
    Ok((es2 - a * r * g) / (gain * gain) - 1.0)
}

/// Network-averaged normalized noise variance from the moment polynomial.
pub fn expected_sigma_eps_multicell(p: &MulticellInputs, quantized: bool) -> Result<f64> {
    Ok(sigma_eps_multicell_poly(p.alpha, p.rho, p.t, p.m, quantized)?.expectation(&p.moments))
}

/// Closed-form optimum of the power fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaOptimum {
    pub alpha: f64,
    /// Both roots of the stationarity quadratic, `+` root first.
    pub roots: (f64, f64),
    pub sinr: f64,
}

const CERT_STEP: f64 = 1e-3;

fn select_root(roots: (f64, f64), sinr: impl Fn(f64) -> Result<f64>) -> Result<AlphaOptimum> {
    let mut best: Option<(f64, f64)> = None;
    for a in [roots.0, roots.1] {
        if a.is_finite() && a > 0.0 && a < 1.0 {
            let v = sinr(a)?;
            if best.is_none_or(|b| v > b.1) {
                best = Some((a, v));
            }
        }
    }
    let (alpha, value) = best.ok_or(Error::NoFeasibleRoot(roots.0, roots.1))?;
    for probe in [alpha - CERT_STEP, alpha + CERT_STEP] {
        if probe > 0.0 && probe < 1.0 && sinr(probe)? > value {
            return Err(Error::ModelDomain(format!("stationary point alpha = {alpha} is not a local maximum")));
        }
    }
    Ok(AlphaOptimum { alpha, roots, sinr: value })
}

fn quadratic_roots(num_a: f64, disc: f64, den: f64, sign_first: f64) -> Result<(f64, f64)> {
    if !(disc >= 0.0) {
        return Err(Error::ModelDomain(format!("negative discriminant {disc}")));
    }
    let s = disc.sqrt();
    Ok(((num_a + sign_first * s) / den, (num_a - sign_first * s) / den))
}

/// Optimal power fraction of the single-cell model.
pub fn optimal_alpha_single(p: &SingleCellInputs, quantized: bool) -> Result<AlphaOptimum> {
    check_common(0.5, p.rho, p.t, p.m)?;
    let SingleCellInputs { rho: r, t, m, k, .. } = *p;
    let roots = if quantized {
        let sy = k * r + 1.0;
        let lambda = 4.0 * r * r * k * (m * t + 1.0) + PI2 * sy * sy * (t - 1.0);
        let disc = lambda * sy * (4.0 * r * t * (t - k) + (t - 1.0) * sy * PI2);
        let den = 4.0 * r * (k * r * (t * (k + m - t) + 1.0) - t * (t - k));
        quadratic_roots(lambda, disc, den, 1.0)?
    } else {
        let delta = t * (k * k * r * r + k * r * (m * r + 2.0) + 1.0) + k * r * r;
        let disc = delta * (t * r + 1.0) * (k * r + 1.0) * t;
        let den = r * (k * k * r * t + k * (m * r * t + r - r * t * t + t) - t * t);
        quadratic_roots(delta, disc, den, 1.0)?
    };
    let f = |a: f64| {
        let q = p.with_alpha(a);
        if quantized {
            sinr_qsp_single(&q)
        } else {
            sinr_uqsp_single(&q)
        }
    };
    select_root(roots, f)
}

/// Optimal power fraction of the multicell model.
pub fn optimal_alpha_multicell(p: &MulticellInputs, quantized: bool) -> Result<AlphaOptimum> {
    check_common(0.5, p.rho, p.t, p.m)?;
    let MulticellInputs { rho: r, t, m, moments, .. } = *p;
    let NetworkMoments { zeta1: z1, zeta2: z2, zeta3: z3 } = moments;
    let r2 = r * r;
    let roots = if quantized {
        let common = PI2 * (t - 1.0) * (2.0 * z1 * r + z2 * r2 + 1.0);
        let delta = common + 4.0 * z3 * m * r2 * t + 4.0 * z3 * r2;
        let delta_p = common + 4.0 * r * t * (z1 * r * t - z1 - z2 * r + t);
        let den = 4.0 * r * (z1 * t * (r * t - 1.0) - r * t * (z2 + z3 * m) - z3 * r + t * t);
        quadratic_roots(-delta, delta * delta_p, den, 1.0)?
    } else {
        let delta = 2.0 * r * t * z1 + r2 * t * z2 + (r2 + m * r2 * t) * z3 + t;
        let disc = t * (r * z1 + 1.0) * (r * t + 1.0) * delta;
        let den = r * t * (r * t - 1.0) * z1 - r2 * t * z2 - r * (m * r * t + r) * z3 + r * t * t;
        quadratic_roots(-delta, disc, den, 1.0)?
    };
    let f = |a: f64| {
        let q = p.with_alpha(a);
        if quantized {
            sinr_qsp_multicell(&q)
        } else {
            sinr_uqsp_multicell(&q)
        }
    };
    select_root(roots, f)
}

/// Large-array limit `log2(1 + alpha T / denom)`, with `denom = K` in a
/// single cell and `zeta3` in the multicell network.
pub fn asymptotic_rate_m(alpha: f64, t: f64, denom: f64) -> f64 {
    rate_bits(alpha * t / denom)
}

/// High-SNR limits of the multicell SINRs, `(quantized, unquantized)`.
pub fn asymptotic_sinr_rho(alpha: f64, t: f64, m: f64, z: &NetworkMoments) -> Result<(f64, f64)> {
    check_common(alpha, 1.0, t, m)?;
    let a = alpha;
    let ab = 1.0 - a;
    let num = ab * a * m * t * t;
    let shared = ab * (ab + m * t) * z.zeta3 + 2.0 * ab * a * t;
    let q = num / (a * t * t * z.zeta1 - 0.25 * (4.0 * a * t - PI2 * t + PI2) * z.zeta2 + shared);
    let u = num / (a * t * t * z.zeta1 + ab * t * z.zeta2 + shared);
    if !(q >= 0.0 && u >= 0.0) {
        return Err(Error::ModelDomain("high-SNR limit has a nonpositive denominator".into()));
    }
    Ok((q, u))
}

/// High-SNR rate limits `(quantized, unquantized)` in bits.
pub fn asymptotic_rate_rho(alpha: f64, t: f64, m: f64, z: &NetworkMoments) -> Result<(f64, f64)> {
    let (q, u) = asymptotic_sinr_rho(alpha, t, m, z)?;
    Ok((rate_bits(q), rate_bits(u)))
}
