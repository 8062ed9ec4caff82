//! Hexagonal multicell layout, user drops and network moments.
//!
//! Base stations sit on a flat-top hexagonal tessellation with inter-site
//! distance `sqrt(3) * cell_radius`; BS 0 is at the origin and is the target
//! receiver. Users are uniform over their own hexagon minus a forbidden disk
//! around the serving BS. Under statistical channel-inverse power control
//! only the ratios `theta_0jk = beta_0jk / beta_jjk = (d_0jk / d_jjk)^-eta`
//! matter, so the reference path loss never appears.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeedTree, DROP};
use crate::stats::{mean_stderr, MeanEstimate};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// All scenario parameters of one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Number of cells `L` (1, 7, 19, ... complete hexagonal rings).
    pub cells: usize,
    /// Users per cell `K`.
    pub users_per_cell: usize,
    /// Hexagon circumradius in km.
    pub cell_radius: f64,
    /// Radius of the user-free disk around each BS, km.
    pub forbidden_radius: f64,
    pub pathloss_exponent: f64,
    /// Coherence interval `T` in symbols.
    pub coherence: usize,
    /// BS antennas `M`.
    pub antennas: usize,
    /// Per-user receive SNR after power control, linear.
    pub rho: f64,
    /// Pilot power fraction.
    pub alpha: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            cells: 7,
            users_per_cell: 12,
            cell_radius: 1.8,
            forbidden_radius: 0.1,
            pathloss_exponent: 3.8,
            coherence: 200,
            antennas: 100,
            rho: 0.1,
            alpha: 0.5,
        }
    }
}

impl NetworkConfig {
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.rho = crate::db_to_linear(snr_db);
        self
    }

    /// Total users in the network, `K * L`.
    pub fn total_users(&self) -> usize {
        self.users_per_cell * self.cells
    }

    pub fn validate(&self) -> Result<()> {
        if rings_for_cells(self.cells).is_none() {
            return Err(Error::config(
                "cells",
                format!("must be a complete hexagonal layout (1, 7, 19, 37, ...), got {}", self.cells),
            ));
        }
        if self.users_per_cell == 0 {
            return Err(Error::config("users_per_cell", "must be at least 1"));
        }
        if self.antennas == 0 {
            return Err(Error::config("antennas", "must be at least 1"));
        }
        if self.coherence == 0 {
            return Err(Error::config("coherence", "must be at least 1"));
        }
        if self.total_users() > self.coherence {
            return Err(Error::PilotSupply {
                requested: self.total_users(),
                available: self.coherence,
            });
        }
        if !(self.cell_radius.is_finite() && self.cell_radius > 0.0) {
            return Err(Error::config("cell_radius", "must be positive"));
        }
        if !(self.forbidden_radius >= 0.0 && self.forbidden_radius < self.cell_radius) {
            return Err(Error::config("forbidden_radius", "must lie in [0, cell_radius)"));
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent > 0.0) {
            return Err(Error::config("pathloss_exponent", "must be positive"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::config("rho", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// The subset of fields that determines the large-scale statistics.
    pub fn geometry_key(&self) -> GeometryKey {
        GeometryKey {
            cells: self.cells,
            users_per_cell: self.users_per_cell,
            cell_radius: self.cell_radius,
            forbidden_radius: self.forbidden_radius,
            pathloss_exponent: self.pathloss_exponent,
        }
    }
}

/// Geometry-only view of a [`NetworkConfig`], used to key cached moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryKey {
    pub cells: usize,
    pub users_per_cell: usize,
    pub cell_radius: f64,
    pub forbidden_radius: f64,
    pub pathloss_exponent: f64,
}

fn rings_for_cells(cells: usize) -> Option<usize> {
    (0..64).find(|&n| 1 + 3 * n * (n + 1) == cells)
}

/// BS coordinates (km) for `cells` base stations, BS 0 at the origin,
/// then ring by ring.
pub fn base_stations(cells: usize, cell_radius: f64) -> Result<Vec<[f64; 2]>> {
    let rings = rings_for_cells(cells)
        .ok_or_else(|| Error::config("cells", format!("{cells} is not a complete hexagonal layout")))?;
    // Axial directions for a flat-top layout.
    const DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let to_xy = |q: i64, r: i64| {
        [
            1.5 * cell_radius * q as f64,
            SQRT3 * cell_radius * (r as f64 + q as f64 / 2.0),
        ]
    };
    let mut out = vec![[0.0, 0.0]];
    for ring in 1..=rings as i64 {
        // Start at direction 4 scaled by the ring index and walk the ring.
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for &(dq, dr) in &DIRS {
            for _ in 0..ring {
                out.push(to_xy(q, r));
                q += dq;
                r += dr;
            }
        }
    }
    Ok(out)
}

/// True if `(x, y)` lies inside the flat-top hexagon of circumradius `radius`
/// centred at the origin.
pub fn in_hexagon(x: f64, y: f64, radius: f64) -> bool {
    let (ax, ay) = (x.abs(), y.abs());
    ay <= SQRT3 / 2.0 * radius && SQRT3 * ax + ay <= SQRT3 * radius
}

/// Uniform point in the hexagon minus the forbidden disk, relative to the
/// cell centre. Rejection sampling from the bounding rectangle.
pub fn sample_in_cell<R: Rng + ?Sized>(radius: f64, forbidden: f64, rng: &mut R) -> [f64; 2] {
    let half_h = SQRT3 / 2.0 * radius;
    loop {
        let x = rng.random_range(-radius..=radius);
        let y = rng.random_range(-half_h..=half_h);
        if in_hexagon(x, y, radius) && x.hypot(y) >= forbidden {
            return [x, y];
        }
    }
}

/// One random user drop seen from BS 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleRealization {
    /// `theta[[j, k]] = theta_0jk`; row 0 is identically 1.
    pub theta: Array2<f64>,
    /// `K + sum_{j>=1,k} theta_0jk`.
    pub kappa0: f64,
    /// `K + sum_{j>=1,k} theta_0jk^2`.
    pub kappa1: f64,
}

impl LargeScaleRealization {
    /// Builds a realization from relative gains; row 0 is forced to 1.
    pub fn from_theta(mut theta: Array2<f64>) -> Self {
        theta.row_mut(0).fill(1.0);
        let k = theta.ncols() as f64;
        let cross = theta.slice(ndarray::s![1.., ..]);
        let kappa0 = k + cross.iter().sum::<f64>();
        let kappa1 = k + cross.iter().map(|t| t * t).sum::<f64>();
        Self { theta, kappa0, kappa1 }
    }

    /// Single-cell special case: `L = 1`, all gains 1.
    pub fn single_cell(users: usize) -> Self {
        Self::from_theta(Array2::ones((1, users)))
    }

    pub fn cells(&self) -> usize {
        self.theta.nrows()
    }

    pub fn users_per_cell(&self) -> usize {
        self.theta.ncols()
    }

    /// Gains flattened in user order `j * K + k`.
    pub fn theta_flat(&self) -> Vec<f64> {
        self.theta.iter().copied().collect()
    }

    /// Diagonal of `D0`: `sqrt(theta)` in user order.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.sqrt()).collect()
    }

    pub fn max_cross_theta(&self) -> f64 {
        self.theta
            .slice(ndarray::s![1.., ..])
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Drops `K` users in every cell and computes their gains towards BS 0.
pub fn drop_users<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Result<LargeScaleRealization> {
    cfg.validate()?;
    let bs = base_stations(cfg.cells, cfg.cell_radius)?;
    let k = cfg.users_per_cell;
    let mut theta = Array2::ones((cfg.cells, k));
    for (j, centre) in bs.iter().enumerate().skip(1) {
        for kk in 0..k {
            let [dx, dy] = sample_in_cell(cfg.cell_radius, cfg.forbidden_radius, rng);
            let d_home = dx.hypot(dy);
            let d0 = (centre[0] + dx).hypot(centre[1] + dy);
            theta[[j, kk]] = (d_home / d0).powf(cfg.pathloss_exponent);
        }
    }
    Ok(LargeScaleRealization::from_theta(theta))
}

/// The three network moments consumed by the multicell closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkMoments {
    /// `E{kappa0}`
    pub zeta1: f64,
    /// `E{kappa0^2}`
    pub zeta2: f64,
    /// `E{kappa1}`
    pub zeta3: f64,
}

impl NetworkMoments {
    /// Moments of a network without inter-cell interference.
    pub fn isolated(users: f64) -> Self {
        Self { zeta1: users, zeta2: users * users, zeta3: users }
    }

    /// Values reported for the one-tier, `K = 12` reference network.
    pub fn reference_k12() -> Self {
        Self { zeta1: 1.4116 * 12.0, zeta2: 288.6, zeta3: 1.1656 * 12.0 }
    }
}

/// Monte Carlo estimates of the network moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryStats {
    pub users_per_cell: usize,
    pub n_drops: usize,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    pub se1: f64,
    pub se2: f64,
    pub se3: f64,
}

impl GeometryStats {
    pub fn moments(&self) -> NetworkMoments {
        NetworkMoments { zeta1: self.zeta1, zeta2: self.zeta2, zeta3: self.zeta3 }
    }
}

/// Sample means of `kappa0`, `kappa0^2` and `kappa1` over `n_drops`
/// independent drops. Drop `i` uses stream `seed / DROP / i`.
pub fn estimate_zeta_stats(cfg: &NetworkConfig, n_drops: usize, seed: SeedTree) -> Result<GeometryStats> {
    cfg.validate()?;
    if n_drops == 0 {
        return Err(Error::config("n_drops", "must be at least 1"));
    }
    let kappas: Vec<(f64, f64)> = (0..n_drops)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.path(DROP, i as u64).stream();
            drop_users(cfg, &mut rng).map(|d| (d.kappa0, d.kappa1))
        })
        .collect::<Result<_>>()?;
    let k0: Vec<f64> = kappas.iter().map(|p| p.0).collect();
    let k0sq: Vec<f64> = k0.iter().map(|k| k * k).collect();
    let k1: Vec<f64> = kappas.iter().map(|p| p.1).collect();
    let (m1, m2, m3): (MeanEstimate, MeanEstimate, MeanEstimate) =
        (mean_stderr(&k0), mean_stderr(&k0sq), mean_stderr(&k1));
    Ok(GeometryStats {
        users_per_cell: cfg.users_per_cell,
        n_drops,
        zeta1: m1.mean,
        zeta2: m2.mean,
        zeta3: m3.mean,
        se1: m1.stderr,
        se2: m2.stderr,
        se3: m3.stderr,
    })
}
