//! Experiment orchestration: specs, presets, the moment cache and CSV
//! tables.
//!
//! Each sweep point fans its drops out to the rayon pool; rows are emitted
//! in sweep order, so the table does not depend on scheduling.

pub mod cache;
pub mod presets;
pub mod spec;
pub mod table;

pub use cache::ZetaCache;
pub use presets::{preset, Scale, PRESETS};
pub use spec::{load_config, parse_config, AnalyticExpr, ExperimentKind, ExperimentSpec, SweepVar};
pub use table::{Cell, Table};

use crate::analytics::{self, MulticellInputs, SingleCellInputs};
use crate::detection::{estimate_rate, optimize_alpha_mc, AlphaGrid, RateEstimate};
use crate::error::{Error, Result};
use crate::estimation::{mse_bound_multicell, mse_monte_carlo, McSetup, Scheme};
use crate::geometry::{GeometryStats, NetworkConfig, NetworkMoments};
use crate::quantizer::VarianceMode;

/// Header comment written above every CSV.
pub fn version_comment(spec: &ExperimentSpec) -> String {
    format!("qspsim {} {}", env!("CARGO_PKG_VERSION"), spec.name)
}

/// Runs `spec` on the current rayon pool with an in-memory moment cache.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Table> {
    run_experiment_with(spec, &mut ZetaCache::in_memory())
}

/// Runs `spec` on a dedicated pool of `threads` workers.
pub fn run_experiment_threads(spec: &ExperimentSpec, threads: usize, cache: &mut ZetaCache) -> Result<Table> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| run_experiment_with(spec, cache))
}

pub fn run_experiment_with(spec: &ExperimentSpec, cache: &mut ZetaCache) -> Result<Table> {
    spec.validate()?;
    match spec.kind()? {
        ExperimentKind::Stats => run_stats(spec, cache),
        ExperimentKind::Analytic => run_analytic(spec, cache),
        ExperimentKind::Mse => run_mse(spec, cache),
        ExperimentKind::Mc => run_mc(spec, cache),
        ExperimentKind::AlphaTable => run_alpha_table(spec, cache),
    }
}

fn setup(spec: &ExperimentSpec) -> Result<McSetup> {
    Ok(McSetup {
        counts: spec.counts(),
        seed: spec.seed()?,
        redraw_pilots: spec.redraw_pilots,
        variance_mode: if spec.sample_variance { VarianceMode::Sample } else { VarianceMode::Model },
    })
}

fn moments(spec: &ExperimentSpec, cfg: &NetworkConfig, cache: &mut ZetaCache) -> Result<GeometryStats> {
    cache.get(cfg, spec.zeta_drops, spec.seed()?)
}

fn run_stats(spec: &ExperimentSpec, cache: &mut ZetaCache) -> Result<Table> {
    let seed = spec.seed()?;
    let mut table = Table::new(&["K", "n_drops", "zeta1", "zeta2", "zeta3", "se1", "se2", "se3", "seed"]);
    for &v in &spec.values {
        let cfg = spec.network_at(v)?;
        let s = moments(spec, &cfg, cache)?;
        table.push(vec![
            cfg.users_per_cell.into(),
            s.n_drops.into(),
            s.zeta1.into(),
            s.zeta2.into(),
            s.zeta3.into(),
            s.se1.into(),
            s.se2.into(),
            s.se3.into(),
            seed.into(),
        ]);
    }
    Ok(table)
}

fn single_inputs(cfg: &NetworkConfig) -> SingleCellInputs {
    SingleCellInputs {
        alpha: cfg.alpha,
        rho: cfg.rho,
        t: cfg.coherence as f64,
        m: cfg.antennas as f64,
        k: cfg.users_per_cell as f64,
    }
}

fn multi_inputs(cfg: &NetworkConfig, moments: NetworkMoments) -> MulticellInputs {
    MulticellInputs { alpha: cfg.alpha, rho: cfg.rho, t: cfg.coherence as f64, m: cfg.antennas as f64, moments }
}

/// `(alpha shown, rate in bits)` of one closed-form expression.
pub fn evaluate_expr(expr: AnalyticExpr, cfg: &NetworkConfig, z: &NetworkMoments) -> Result<(f64, f64)> {
    use AnalyticExpr as E;
    let s = single_inputs(cfg);
    let m = multi_inputs(cfg, *z);
    let a = cfg.alpha;
    let t = cfg.coherence as f64;
    Ok(match expr {
        E::QspSingle => (a, analytics::rate_bits(analytics::sinr_qsp_single(&s)?)),
        E::UqspSingle => (a, analytics::rate_bits(analytics::sinr_uqsp_single(&s)?)),
        E::QspMulticell => (a, analytics::rate_bits(analytics::sinr_qsp_multicell(&m)?)),
        E::UqspMulticell => (a, analytics::rate_bits(analytics::sinr_uqsp_multicell(&m)?)),
        E::QspSingleOpt | E::UqspSingleOpt => {
            let o = analytics::optimal_alpha_single(&s, expr == E::QspSingleOpt)?;
            (o.alpha, analytics::rate_bits(o.sinr))
        }
        E::QspMulticellOpt | E::UqspMulticellOpt => {
            let o = analytics::optimal_alpha_multicell(&m, expr == E::QspMulticellOpt)?;
            (o.alpha, analytics::rate_bits(o.sinr))
        }
        E::LimitMSingle => (a, analytics::asymptotic_rate_m(a, t, cfg.users_per_cell as f64)),
        E::LimitMMulticell => (a, analytics::asymptotic_rate_m(a, t, z.zeta3)),
        E::LimitRhoQsp => (a, analytics::asymptotic_rate_rho(a, t, cfg.antennas as f64, z)?.0),
        E::LimitRhoUqsp => (a, analytics::asymptotic_rate_rho(a, t, cfg.antennas as f64, z)?.1),
    })
}

fn run_analytic(spec: &ExperimentSpec, cache: &mut ZetaCache) -> Result<Table> {
    let mut table = Table::new(&["expr", "alpha", "rho", "M", "K", "T", "zeta1", "zeta2", "zeta3", "value_bits"]);
    let needs_moments = spec.exprs.iter().any(|e| e.is_multicell());
    for &v in &spec.values {
        let cfg = spec.network_at(v)?;
        let z = if needs_moments {
            moments(spec, &cfg, cache)?.moments()
        } else {
            NetworkMoments::isolated(cfg.users_per_cell as f64)
        };
        for &expr in &spec.exprs {
            let (alpha, value) = evaluate_expr(expr, &cfg, &z)?;
            let zcell = |x: f64| if expr.is_multicell() { Cell::Float(x) } else { Cell::Empty };
            table.push(vec![
                expr.name().into(),
                alpha.into(),
                cfg.rho.into(),
                cfg.antennas.into(),
                cfg.users_per_cell.into(),
                cfg.coherence.into(),
                zcell(z.zeta1),
                zcell(z.zeta2),
                zcell(z.zeta3),
                value.into(),
            ]);
        }
    }
    Ok(table)
}

fn run_mse(spec: &ExperimentSpec, cache: &mut ZetaCache) -> Result<Table> {
    let setup = setup(spec)?;
    let mut table = Table::new(&["snr_db", "T", "alpha", "empirical_mse", "bound_mse", "stderr"]);
    for &v in &spec.values {
        let base = spec.network_at(v)?;
        let zeta1 = moments(spec, &base, cache)?.zeta1;
        for t in spec.mse_coherences() {
            let cfg = NetworkConfig { coherence: t, ..base.clone() };
            let bound = mse_bound_multicell(cfg.alpha, cfg.rho, t, zeta1);
            let (emp, se) = if cfg.total_users() <= t {
                let e = mse_monte_carlo(&cfg, Scheme::Qsp, &setup)?;
                (Cell::Float(e.mean), Cell::Float(e.stderr))
            } else {
                (Cell::Empty, Cell::Empty)
            };
            table.push(vec![spec.snr_db_at(v).into(), t.into(), cfg.alpha.into(), emp, bound.into(), se]);
        }
    }
    Ok(table)
}

/// Closed-form rate matching a Monte Carlo row: at the closed-form optimum
/// when the power fraction is optimized, else at the row's fraction.
fn analytic_rate(cfg: &NetworkConfig, scheme: Scheme, optimized: bool, z: &NetworkMoments) -> Result<Option<f64>> {
    let quantized = match scheme {
        Scheme::Qsp => true,
        Scheme::Uqsp => false,
        Scheme::Qtp => return Ok(None),
    };
    let expr = match (cfg.cells == 1, quantized, optimized) {
        (true, true, false) => AnalyticExpr::QspSingle,
        (true, false, false) => AnalyticExpr::UqspSingle,
        (true, true, true) => AnalyticExpr::QspSingleOpt,
        (true, false, true) => AnalyticExpr::UqspSingleOpt,
        (false, true, false) => AnalyticExpr::QspMulticell,
        (false, false, false) => AnalyticExpr::UqspMulticell,
        (false, true, true) => AnalyticExpr::QspMulticellOpt,
        (false, false, true) => AnalyticExpr::UqspMulticellOpt,
    };
    Ok(Some(evaluate_expr(expr, cfg, z)?.1))
}

/// Limit column: high-SNR limit when sweeping SNR, else the large-array
/// limit, both at the row's power fraction.
fn limit_rate(cfg: &NetworkConfig, scheme: Scheme, sweep: SweepVar, alpha: f64, z: &NetworkMoments) -> Result<Option<f64>> {
    if scheme == Scheme::Qtp {
        return Ok(None);
    }
    let t = cfg.coherence as f64;
    if sweep == SweepVar::SnrDb {
        let (q, u) = analytics::asymptotic_rate_rho(alpha, t, cfg.antennas as f64, z)?;
        Ok(Some(if scheme == Scheme::Qsp { q } else { u }))
    } else {
        Ok(Some(analytics::asymptotic_rate_m(alpha, t, z.zeta3)))
    }
}

/// Monte Carlo rate at one scenario, optimized over alpha if requested.
pub fn mc_point(spec: &ExperimentSpec, cfg: &NetworkConfig, scheme: Scheme, pr: bool) -> Result<RateEstimate> {
    let setup = setup(spec)?;
    if spec.optimize_alpha {
        Ok(optimize_alpha_mc(cfg, scheme, pr, &AlphaGrid::default(), &setup)?.rate)
    } else {
        estimate_rate(cfg, scheme, pr, &setup)
    }
}

fn combos(spec: &ExperimentSpec) -> Vec<(Scheme, bool)> {
    let mut out = Vec::new();
    for &scheme in &spec.schemes {
        for &pr in &spec.pilot_removal {
            // the time-multiplexed baseline has no pilots to remove
            if scheme == Scheme::Qtp && pr && spec.pilot_removal.contains(&false) {
                continue;
            }
            out.push((scheme, pr && scheme != Scheme::Qtp));
        }
    }
    out
}

fn run_mc(spec: &ExperimentSpec, cache: &mut ZetaCache) -> Result<Table> {
    let seed = spec.seed()?;
    let mut header = vec![
        "scheme", "pilot_removal", "M", "K", "L", "T", "snr_db", "alpha", "rate_bits", "stderr", "n_outer", "n_inner", "seed",
    ];
    if spec.analytic_columns {
        header.extend(["analytic_bits", "limit_bits"]);
    }
    let mut table = Table::new(&header);
    for &v in &spec.values {
        let cfg = spec.network_at(v)?;
        let z = if spec.analytic_columns { Some(moments(spec, &cfg, cache)?.moments()) } else { None };
        for (scheme, pr) in combos(spec) {
            let est = mc_point(spec, &cfg, scheme, pr)?;
            let mut row: Vec<Cell> = vec![
                scheme.as_str().into(),
                pr.into(),
                cfg.antennas.into(),
                cfg.users_per_cell.into(),
                cfg.cells.into(),
                cfg.coherence.into(),
                spec.snr_db_at(v).into(),
                est.alpha_used.into(),
                est.rate_bits.into(),
                est.stderr.into(),
                spec.n_outer.into(),
                spec.n_inner.into(),
                seed.into(),
            ];
            if let Some(z) = &z {
                row.push(analytic_rate(&cfg, scheme, spec.optimize_alpha, z)?.into());
                row.push(limit_rate(&cfg, scheme, spec.sweep, est.alpha_used, z)?.into());
            }
            table.push(row);
        }
    }
    Ok(table)
}

fn run_alpha_table(spec: &ExperimentSpec, cache: &mut ZetaCache) -> Result<Table> {
    let seed = spec.seed()?;
    let setup = setup(spec)?;
    let mut table = Table::new(&[
        "M", "scheme", "pilot_removal", "alpha_mc", "alpha_stderr", "alpha_analytic", "rate_bits", "stderr", "n_outer",
        "n_inner", "seed",
    ]);
    for &v in &spec.values {
        let cfg = spec.network_at(v)?;
        let z = moments(spec, &cfg, cache)?.moments();
        for (scheme, pr) in combos(spec) {
            let found = optimize_alpha_mc(&cfg, scheme, pr, &AlphaGrid::default(), &setup)?;
            let analytic = match scheme {
                Scheme::Qtp => None,
                _ => {
                    let expr = if scheme == Scheme::Qsp { AnalyticExpr::QspMulticellOpt } else { AnalyticExpr::UqspMulticellOpt };
                    let expr = match (cfg.cells == 1, expr) {
                        (true, AnalyticExpr::QspMulticellOpt) => AnalyticExpr::QspSingleOpt,
                        (true, _) => AnalyticExpr::UqspSingleOpt,
                        (false, e) => e,
                    };
                    Some(evaluate_expr(expr, &cfg, &z)?.0)
                }
            };
            table.push(vec![
                cfg.antennas.into(),
                scheme.as_str().into(),
                pr.into(),
                found.alpha_star.into(),
                found.alpha_stderr.into(),
                analytic.into(),
                found.rate.rate_bits.into(),
                found.rate.stderr.into(),
                spec.n_outer.into(),
                spec.n_inner.into(),
                seed.into(),
            ]);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_table_schema() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Stats, SweepVar::UsersPerCell, vec![5.0, 12.0], 1);
        spec.zeta_drops = 100;
        let t = run_experiment(&spec).unwrap();
        assert_eq!(t.header.join(","), "K,n_drops,zeta1,zeta2,zeta3,se1,se2,se3,seed");
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1][0], Cell::Int(12));
    }

    #[test]
    fn analytic_table_schema() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Analytic, SweepVar::Antennas, vec![50.0, 100.0], 1);
        spec.zeta_drops = 100;
        let t = run_experiment(&spec).unwrap();
        assert_eq!(t.header.join(","), "expr,alpha,rho,M,K,T,zeta1,zeta2,zeta3,value_bits");
        assert_eq!(t.rows.len(), 2 * AnalyticExpr::ALL.len());
        let single = t.rows_where("expr", "qsp_single").next().unwrap();
        assert_eq!(single[6], Cell::Empty);
    }

    #[test]
    fn mse_table_keeps_bound_only_rows() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Mse, SweepVar::SnrDb, vec![-10.0], 1);
        spec.coherences = vec![50, 200];
        spec.allow_bound_only = true;
        spec.zeta_drops = 100;
        spec.n_outer = 2;
        spec.n_inner = 1;
        let t = run_experiment(&spec).unwrap();
        assert_eq!(t.header.join(","), "snr_db,T,alpha,empirical_mse,bound_mse,stderr");
        assert_eq!(t.rows[0][3], Cell::Empty);
        assert!(t.rows[1][3].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn mc_table_schema_and_qtp_rows() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Mc, SweepVar::SnrDb, vec![-10.0], 1);
        spec.antennas = 16;
        spec.schemes = vec![Scheme::Qsp, Scheme::Qtp];
        spec.pilot_removal = vec![false, true];
        spec.n_outer = 2;
        spec.n_inner = 1;
        let t = run_experiment(&spec).unwrap();
        assert_eq!(t.header.join(","), "scheme,pilot_removal,M,K,L,T,snr_db,alpha,rate_bits,stderr,n_outer,n_inner,seed");
        let schemes: Vec<String> = t.rows.iter().map(|r| format!("{}/{}", r[0].render(), r[1].render())).collect();
        assert_eq!(schemes, ["qsp/false", "qsp/true", "qtp/false"]);
    }
}
