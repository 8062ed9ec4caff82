use std::path::Path;
use std::process::{Command, Output};

fn qspsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qspsim")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.split("\r\n").filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

#[test]
fn stats_subcommand_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "sweep = \"users_per_cell\"\nvalues = [5]\nzeta_drops = 500\nseed = 4\n");
    let out = dir.path().join("out/stats.csv");
    let o = qspsim(&["stats", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# qspsim "));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "K,n_drops,zeta1,zeta2,zeta3,se1,se2,se3,seed");
    assert!(lines[1].starts_with("5,500,"));
    assert!(lines[1].ends_with(",4"));
    assert!(dir.path().join("out/.zeta-cache").is_dir());
}

#[test]
fn analytic_subcommand_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.toml",
        "sweep = \"antennas\"\nvalues = [50, 1000]\ncells = 1\nexprs = [\"qsp_single_opt\", \"uqsp_single\"]\nseed = 1\n",
    );
    let o = qspsim(&["analytic", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "expr,alpha,rho,M,K,T,zeta1,zeta2,zeta3,value_bits");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("qsp_single_opt,"));
    assert!(lines[2].contains(",0.5,0.1,50,12,200,,,,"), "{}", lines[2]);
}

#[test]
fn mc_subcommand_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "sweep = \"snr_db\"\nvalues = [-10, 0]\nantennas = 16\nschemes = [\"qsp\", \"qtp\"]\nn_outer = 3\nn_inner = 1\nseed = 9\n",
    );
    let a = qspsim(&["mc", "--config", &cfg, "--threads", "1"]);
    let b = qspsim(&["mc", "--config", &cfg, "--threads", "1"]);
    let c = qspsim(&["mc", "--config", &cfg, "--threads", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "scheme,pilot_removal,M,K,L,T,snr_db,alpha,rate_bits,stderr,n_outer,n_inner,seed");
    assert_eq!(lines.len(), 5);
    let seeded = qspsim(&["mc", "--config", &cfg, "--seed", "10"]);
    assert_ne!(String::from_utf8(seeded.stdout).unwrap(), text);
}

#[test]
fn mse_subcommand_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.toml",
        "sweep = \"snr_db\"\nvalues = [-10]\nn_outer = 2\nn_inner = 1\nzeta_drops = 200\nseed = 2\n",
    );
    let o = qspsim(&["mse", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(data_lines(&text)[0], "snr_db,T,alpha,empirical_mse,bound_mse,stderr");
}

#[test]
fn config_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("sweep = \"snr_db\"\nvalues = [0]\nseed = 1\nbogus = 3\n", "bogus"),
        ("sweep = \"snr_db\"\nvalues = [0]\n", "seed"),
        ("sweep = \"snr_db\"\nvalues = []\nseed = 1\n", "values"),
        ("sweep = \"snr_db\"\nvalues = [0]\nseed = 1\nusers_per_cell = 25\ncoherence = 100\n", "pilot"),
        ("sweep = \"snr_db\"\nvalues = [0]\nseed = 1\nalpha = 1.5\n", "alpha"),
        ("kind = \"stats\"\nsweep = \"snr_db\"\nvalues = [0]\nseed = 1\n", "kind"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.toml"), text);
        let o = qspsim(&["mc", "--config", &cfg]);
        assert!(!o.status.success(), "case {i} succeeded");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "case {i}: {err}");
    }
}

#[test]
fn preset_errors() {
    let o = qspsim(&["preset", "fig9", "--seed", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig9"));
    let o = qspsim(&["stats"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}
