//! Built-in experiments reproducing the reference tables and figures.
//!
//! Desk budgets finish in about a minute each on one core; publication
//! budgets raise every count to 200 drops x 50 trials and 10^6 geometry
//! drops.

use super::spec::{ExperimentKind, ExperimentSpec, SweepVar};
use crate::error::{Error, Result};
use crate::estimation::Scheme;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = ["table1", "table2", "fig3", "fig4", "fig5", "fig6"];

/// Default master seed of the presets.
pub const PRESET_SEED: u64 = 1;

/// Monte Carlo budget of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Publication,
}

fn spec(name: &str, kind: ExperimentKind, sweep: SweepVar, values: Vec<f64>) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(kind, sweep, values, PRESET_SEED);
    s.name = name.to_string();
    s
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

/// Looks up a preset by name.
pub fn preset(name: &str, scale: Scale) -> Result<ExperimentSpec> {
    use ExperimentKind as K;
    let mut s = match name {
        "table1" => spec(name, K::Stats, SweepVar::UsersPerCell, vec![5.0, 12.0, 15.0, 25.0]),
        "table2" => {
            let mut s = spec(name, K::AlphaTable, SweepVar::Antennas, vec![50.0, 200.0, 600.0, 1000.0]);
            s.schemes = vec![Scheme::Qsp, Scheme::Uqsp];
            s.pilot_removal = vec![false, true];
            s.n_outer = 10;
            s.n_inner = 2;
            s
        }
        "fig3" => {
            let mut s = spec(name, K::Mse, SweepVar::SnrDb, range(-20.0, 0.0, 2.5));
            s.coherences = vec![50, 200];
            s.allow_bound_only = true;
            s.n_outer = 40;
            s.n_inner = 2;
            s
        }
        "fig4" => {
            let mut s = spec(name, K::Mc, SweepVar::SnrDb, range(-20.0, 10.0, 5.0));
            s.schemes = vec![Scheme::Qsp, Scheme::Uqsp, Scheme::Qtp];
            s.pilot_removal = vec![false, true];
            s.optimize_alpha = true;
            s.analytic_columns = true;
            s.n_outer = 10;
            s.n_inner = 2;
            s
        }
        "fig5" => {
            let mut s = spec(name, K::Mc, SweepVar::UsersPerCell, range(4.0, 24.0, 4.0));
            s.schemes = vec![Scheme::Qsp, Scheme::Qtp];
            s.pilot_removal = vec![false];
            s.optimize_alpha = true;
            s.analytic_columns = true;
            s.n_outer = 10;
            s.n_inner = 2;
            s
        }
        "fig6" => {
            let mut s = spec(name, K::Mc, SweepVar::Antennas, (5..=12).map(|e| f64::from(1u32 << e)).collect());
            s.schemes = vec![Scheme::Qsp, Scheme::Uqsp, Scheme::Qtp];
            s.pilot_removal = vec![false];
            s.snr_db = -5.0;
            s.optimize_alpha = true;
            s.analytic_columns = true;
            s.n_outer = 6;
            s.n_inner = 1;
            s
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    if scale == Scale::Publication {
        s.n_outer = 200;
        s.n_inner = 50;
        s.zeta_drops = 1_000_000;
    }
    Ok(s)
}
