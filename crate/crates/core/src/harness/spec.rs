//! Experiment specifications and their strict TOML form.
//!
//! A config file is flat: every key maps onto one field of
//! [`ExperimentSpec`]. Unknown keys are rejected, the seed is mandatory and
//! every scenario parameter not given falls back to the reference network
//! below.
//!
//! | key                 | default | meaning                                  |
//! |---------------------|---------|------------------------------------------|
//! | `cells`             | 7       | cells `L` (1, 7, 19, ...)                |
//! | `users_per_cell`    | 12      | users per cell `K`                       |
//! | `antennas`          | 100     | BS antennas `M`                          |
//! | `coherence`         | 200     | coherence interval `T`                   |
//! | `snr_db`            | -10     | post-power-control receive SNR           |
//! | `alpha`             | 0.5     | pilot power fraction                     |
//! | `cell_radius`       | 1.8     | hexagon circumradius, km                 |
//! | `forbidden_radius`  | 0.1     | user-free radius around each BS, km      |
//! | `pathloss_exponent` | 3.8     |                                          |
//! | `n_outer`           | 50      | large-scale drops per point              |
//! | `n_inner`           | 4       | small-scale trials per drop              |
//! | `zeta_drops`        | 100000  | drops behind the network moments         |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{Scheme, TrialCounts};
use crate::geometry::NetworkConfig;

/// What an experiment computes; each kind has a fixed CSV schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Network moments per `K`.
    Stats,
    /// Closed-form rates and optimal power fractions.
    Analytic,
    /// Channel-estimation MSE against its bound.
    Mse,
    /// Monte Carlo achievable rates.
    Mc,
    /// Monte Carlo and closed-form optimal power fractions.
    AlphaTable,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Stats => "stats",
            ExperimentKind::Analytic => "analytic",
            ExperimentKind::Mse => "mse",
            ExperimentKind::Mc => "mc",
            ExperimentKind::AlphaTable => "alpha_table",
        }
    }
}

/// The swept scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    SnrDb,
    Antennas,
    UsersPerCell,
    Alpha,
    Coherence,
}

/// Closed-form quantities the `analytic` kind can tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticExpr {
    QspSingle,
    UqspSingle,
    QspMulticell,
    UqspMulticell,
    QspSingleOpt,
    UqspSingleOpt,
    QspMulticellOpt,
    UqspMulticellOpt,
    /// Large-array limit of the single-cell rate.
    LimitMSingle,
    /// Large-array limit of the multicell rate.
    LimitMMulticell,
    /// High-SNR limit of the quantized multicell rate.
    LimitRhoQsp,
    /// High-SNR limit of the unquantized multicell rate.
    LimitRhoUqsp,
}

impl AnalyticExpr {
    pub const ALL: [AnalyticExpr; 12] = [
        AnalyticExpr::QspSingle,
        AnalyticExpr::UqspSingle,
        AnalyticExpr::QspMulticell,
        AnalyticExpr::UqspMulticell,
        AnalyticExpr::QspSingleOpt,
        AnalyticExpr::UqspSingleOpt,
        AnalyticExpr::QspMulticellOpt,
        AnalyticExpr::UqspMulticellOpt,
        AnalyticExpr::LimitMSingle,
        AnalyticExpr::LimitMMulticell,
        AnalyticExpr::LimitRhoQsp,
        AnalyticExpr::LimitRhoUqsp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalyticExpr::QspSingle => "qsp_single",
            AnalyticExpr::UqspSingle => "uqsp_single",
            AnalyticExpr::QspMulticell => "qsp_multicell",
            AnalyticExpr::UqspMulticell => "uqsp_multicell",
            AnalyticExpr::QspSingleOpt => "qsp_single_opt",
            AnalyticExpr::UqspSingleOpt => "uqsp_single_opt",
            AnalyticExpr::QspMulticellOpt => "qsp_multicell_opt",
            AnalyticExpr::UqspMulticellOpt => "uqsp_multicell_opt",
            AnalyticExpr::LimitMSingle => "limit_m_single",
            AnalyticExpr::LimitMMulticell => "limit_m_multicell",
            AnalyticExpr::LimitRhoQsp => "limit_rho_qsp",
            AnalyticExpr::LimitRhoUqsp => "limit_rho_uqsp",
        }
    }

    pub fn is_multicell(self) -> bool {
        !matches!(self, AnalyticExpr::QspSingle | AnalyticExpr::UqspSingle | AnalyticExpr::QspSingleOpt | AnalyticExpr::UqspSingleOpt | AnalyticExpr::LimitMSingle)
    }
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::Qsp, Scheme::Uqsp]
}
fn default_pr() -> Vec<bool> {
    vec![false]
}
fn default_cells() -> usize {
    7
}
fn default_k() -> usize {
    12
}
fn default_m() -> usize {
    100
}
fn default_t() -> usize {
    200
}
fn default_snr() -> f64 {
    -10.0
}
fn default_alpha() -> f64 {
    0.5
}
fn default_radius() -> f64 {
    1.8
}
fn default_forbidden() -> f64 {
    0.1
}
fn default_exponent() -> f64 {
    3.8
}
fn default_outer() -> usize {
    50
}
fn default_inner() -> usize {
    4
}
fn default_zeta_drops() -> usize {
    100_000
}
fn default_exprs() -> Vec<AnalyticExpr> {
    AnalyticExpr::ALL.to_vec()
}

/// A fully described experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    /// May be omitted when the CLI subcommand implies it.
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_pr")]
    pub pilot_removal: Vec<bool>,
    /// Maximize the Monte Carlo rate over the power fraction per drop.
    #[serde(default)]
    pub optimize_alpha: bool,
    /// Master seed; required.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,

    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_k")]
    pub users_per_cell: usize,
    #[serde(default = "default_m")]
    pub antennas: usize,
    #[serde(default = "default_t")]
    pub coherence: usize,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_radius")]
    pub cell_radius: f64,
    #[serde(default = "default_forbidden")]
    pub forbidden_radius: f64,
    #[serde(default = "default_exponent")]
    pub pathloss_exponent: f64,

    #[serde(default = "default_outer")]
    pub n_outer: usize,
    #[serde(default = "default_inner")]
    pub n_inner: usize,
    #[serde(default = "default_zeta_drops")]
    pub zeta_drops: usize,
    #[serde(default)]
    pub redraw_pilots: bool,
    /// Bussgang gain from the sample variance of each block.
    #[serde(default)]
    pub sample_variance: bool,

    /// Extra coherence intervals for the `mse` kind; empty means `coherence`.
    #[serde(default)]
    pub coherences: Vec<usize>,
    /// Emit only the bound for coherence intervals too short for orthogonal
    /// pilots instead of rejecting the spec (`mse` kind).
    #[serde(default)]
    pub allow_bound_only: bool,
    /// Add closed-form columns next to Monte Carlo results (`mc` kind).
    #[serde(default)]
    pub analytic_columns: bool,
    #[serde(default = "default_exprs")]
    pub exprs: Vec<AnalyticExpr>,
}

impl ExperimentSpec {
    /// A spec of the given kind over the reference network.
    pub fn new(kind: ExperimentKind, sweep: SweepVar, values: Vec<f64>, seed: u64) -> Self {
        Self {
            name: kind.as_str().to_string(),
            kind: Some(kind),
            sweep,
            values,
            schemes: default_schemes(),
            pilot_removal: default_pr(),
            optimize_alpha: false,
            seed: Some(seed),
            output: None,
            cells: default_cells(),
            users_per_cell: default_k(),
            antennas: default_m(),
            coherence: default_t(),
            snr_db: default_snr(),
            alpha: default_alpha(),
            cell_radius: default_radius(),
            forbidden_radius: default_forbidden(),
            pathloss_exponent: default_exponent(),
            n_outer: default_outer(),
            n_inner: default_inner(),
            zeta_drops: default_zeta_drops(),
            redraw_pilots: false,
            sample_variance: false,
            coherences: Vec::new(),
            allow_bound_only: false,
            analytic_columns: false,
            exprs: default_exprs(),
        }
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind.ok_or_else(|| Error::config("kind", "is missing"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::config("seed", "is missing; every experiment needs an explicit seed"))
    }

    pub fn counts(&self) -> TrialCounts {
        TrialCounts { n_outer: self.n_outer, n_inner: self.n_inner }
    }

    /// The base scenario before the sweep is applied.
    pub fn base_network(&self) -> NetworkConfig {
        NetworkConfig {
            cells: self.cells,
            users_per_cell: self.users_per_cell,
            cell_radius: self.cell_radius,
            forbidden_radius: self.forbidden_radius,
            pathloss_exponent: self.pathloss_exponent,
            coherence: self.coherence,
            antennas: self.antennas,
            rho: crate::db_to_linear(self.snr_db),
            alpha: self.alpha,
        }
    }

    /// Scenario at one sweep value. Integer sweeps require integral values.
    pub fn network_at(&self, value: f64) -> Result<NetworkConfig> {
        let mut cfg = self.base_network();
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() == 0.0 && (1.0..1e9).contains(&v) {
                Ok(v as usize)
            } else {
                Err(Error::config("values", format!("{v} is not a positive integer")))
            }
        };
        match self.sweep {
            SweepVar::SnrDb => cfg.rho = crate::db_to_linear(value),
            SweepVar::Antennas => cfg.antennas = as_count(value)?,
            SweepVar::UsersPerCell => cfg.users_per_cell = as_count(value)?,
            SweepVar::Alpha => cfg.alpha = value,
            SweepVar::Coherence => cfg.coherence = as_count(value)?,
        }
        Ok(cfg)
    }

    /// SNR in dB at one sweep value.
    pub fn snr_db_at(&self, value: f64) -> f64 {
        if self.sweep == SweepVar::SnrDb {
            value
        } else {
            self.snr_db
        }
    }

    /// Coherence intervals covered by the `mse` kind.
    pub fn mse_coherences(&self) -> Vec<usize> {
        if self.coherences.is_empty() {
            vec![self.coherence]
        } else {
            self.coherences.clone()
        }
    }

    /// Checks every field and every sweep point; nothing is computed.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind()?;
        self.seed()?;
        if self.values.is_empty() {
            return Err(Error::config("values", "sweep is empty"));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::config("values", format!("{v} is not finite")));
        }
        if matches!(kind, ExperimentKind::Mc | ExperimentKind::AlphaTable) && self.schemes.is_empty() {
            return Err(Error::config("schemes", "no schemes given"));
        }
        if self.pilot_removal.is_empty() {
            return Err(Error::config("pilot_removal", "no pilot-removal flags given"));
        }
        if kind == ExperimentKind::Analytic && self.exprs.is_empty() {
            return Err(Error::config("exprs", "no expressions given"));
        }
        if self.sweep == SweepVar::Alpha && (self.optimize_alpha || kind == ExperimentKind::AlphaTable) {
            return Err(Error::config("sweep", "cannot sweep alpha while optimizing it"));
        }
        if kind == ExperimentKind::Stats && self.sweep != SweepVar::UsersPerCell {
            return Err(Error::config("sweep", "stats experiments sweep users_per_cell"));
        }
        if kind == ExperimentKind::Stats && self.zeta_drops == 0 {
            return Err(Error::config("zeta_drops", "must be at least 1"));
        }
        if matches!(kind, ExperimentKind::Mc | ExperimentKind::Mse | ExperimentKind::AlphaTable) {
            self.counts().validate()?;
        }
        if self.analytic_columns && self.zeta_drops == 0 {
            return Err(Error::config("zeta_drops", "must be at least 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db", "must be finite"));
        }
        for &v in &self.values {
            let cfg = self.network_at(v)?;
            if kind == ExperimentKind::Mse {
                for t in self.mse_coherences() {
                    let cfg = NetworkConfig { coherence: t, ..cfg.clone() };
                    match cfg.validate() {
                        Err(Error::PilotSupply { .. }) if self.allow_bound_only => {}
                        other => other?,
                    }
                }
            } else if kind == ExperimentKind::Analytic {
                // closed forms need no pilot book
                match cfg.validate() {
                    Err(Error::PilotSupply { .. }) => {}
                    other => other?,
                }
            } else {
                cfg.validate()?;
            }
        }
        Ok(())
    }
}

/// Parses and validates a TOML spec.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// Loads a TOML spec from disk. `kind` fills in (or must agree with) the
/// file's own `kind`.
pub fn load_config(path: &Path, kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    let mut spec: ExperimentSpec = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    match (spec.kind, kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::config("kind", format!("file says `{}`, command says `{}`", a.as_str(), b.as_str())))
        }
        (None, Some(b)) => spec.kind = Some(b),
        _ => {}
    }
    if spec.name.is_empty() {
        spec.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    spec.validate()?;
    Ok(spec)
}
