//! `qspsim` command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qspsim::harness::{self, load_config, preset, ExperimentKind, ExperimentSpec, Scale, SweepVar, ZetaCache};
use qspsim::Result;

#[derive(Parser)]
#[command(name = "qspsim", version, about = "Superimposed-pilot massive MIMO simulator with one-bit ADCs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Network-moment statistics over random user drops.
    Stats(Opts),
    /// Closed-form rates, optimal power fractions and limits.
    Analytic(Opts),
    /// Channel-estimation MSE: Monte Carlo against the bound.
    Mse(Opts),
    /// Monte Carlo achievable rates.
    Mc(Opts),
    /// A built-in experiment (table1, table2, fig3, fig4, fig5, fig6).
    Preset {
        name: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML experiment spec.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Publication-size Monte Carlo budgets (presets only).
    #[arg(long)]
    publication: bool,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

/// Default sweep of a subcommand run without a config file.
fn default_spec(kind: ExperimentKind, seed: u64) -> ExperimentSpec {
    match kind {
        ExperimentKind::Stats => ExperimentSpec::new(kind, SweepVar::UsersPerCell, vec![5.0, 12.0, 15.0, 25.0], seed),
        ExperimentKind::Analytic => ExperimentSpec::new(kind, SweepVar::Antennas, vec![50.0, 100.0, 200.0, 500.0, 1000.0], seed),
        _ => ExperimentSpec::new(kind, SweepVar::SnrDb, vec![-20.0, -15.0, -10.0, -5.0, 0.0], seed),
    }
}

fn build_spec(kind: ExperimentKind, opts: &Opts) -> Result<ExperimentSpec> {
    let mut spec = match &opts.config {
        Some(path) => load_config(path, Some(kind))?,
        None => {
            let seed = opts.seed.ok_or_else(|| qspsim::Error::InvalidConfig {
                field: "seed".into(),
                reason: "is missing; pass --seed or a config with `seed`".into(),
            })?;
            default_spec(kind, seed)
        }
    };
    if let Some(seed) = opts.seed {
        spec.seed = Some(seed);
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    let (spec, opts) = match &cli.command {
        Command::Stats(o) => (build_spec(ExperimentKind::Stats, o)?, o),
        Command::Analytic(o) => (build_spec(ExperimentKind::Analytic, o)?, o),
        Command::Mse(o) => (build_spec(ExperimentKind::Mse, o)?, o),
        Command::Mc(o) => (build_spec(ExperimentKind::Mc, o)?, o),
        Command::Preset { name, opts } => {
            let scale = if opts.publication { Scale::Publication } else { Scale::Desk };
            let mut spec = preset(name, scale)?;
            if let Some(seed) = opts.seed {
                spec.seed = Some(seed);
            }
            (spec, opts)
        }
    };
    let out = opts.out.clone().or_else(|| spec.output.clone());
    let mut cache = match out.as_ref().and_then(|p| p.parent()) {
        Some(dir) => ZetaCache::with_dir(if dir.as_os_str().is_empty() { PathBuf::from(".zeta-cache") } else { dir.join(".zeta-cache") }),
        None => ZetaCache::in_memory(),
    };
    let table = match opts.threads {
        Some(n) => harness::run_experiment_threads(&spec, n, &mut cache)?,
        None => harness::run_experiment_with(&spec, &mut cache)?,
    };
    let comment = harness::version_comment(&spec);
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let file = std::fs::File::create(&path)?;
            table.write_csv(std::io::BufWriter::new(file), Some(&comment))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(&mut lock, Some(&comment))?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qspsim: {e}");
            ExitCode::FAILURE
        }
    }
}
