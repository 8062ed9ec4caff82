//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p qspsim --test acceptance`. Exits non-zero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use ndarray::s;
use num_complex::Complex64;
use rand::Rng;

use qspsim::analytics::{
    asymptotic_rate_m, asymptotic_rate_rho, expected_sigma_eps_multicell, optimal_alpha_multicell, optimal_alpha_single,
    rate_bits, sigma_eps_single, sinr_qsp_multicell, sinr_qsp_single, sinr_uqsp_multicell, sinr_uqsp_single,
    MulticellInputs, SingleCellInputs,
};
use qspsim::channel::{BlockComponents, ChannelRealization};
use qspsim::detection::{drop_sinrs, estimate_rates, optimize_alpha_mc, AlphaGrid};
use qspsim::estimation::{estimate_channel, lmmse_gain_qsp, mse_bound_multicell, mse_monte_carlo, McSetup, Scheme, TrialCounts};
use qspsim::geometry::{drop_users, estimate_zeta_stats, GeometryStats, NetworkConfig, NetworkMoments};
use qspsim::harness::{preset, run_experiment_threads, Scale, Table, ZetaCache, PRESETS};
use qspsim::quantizer::{bussgang_params, quantize, quantize_sample, QuantizerModel, SIGMA_Z_SQ};
use qspsim::rng::{complex_normal, complex_normal_matrix, SeedTree, GEOMETRY};
use qspsim::waveform::{make_data, make_pilot_book};

const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, detail: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.pass &= ok;
        self.detail.push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn reference_network(k: usize) -> NetworkConfig {
    NetworkConfig { users_per_cell: k, ..NetworkConfig::default() }
}

fn moments_k12() -> GeometryStats {
    estimate_zeta_stats(&reference_network(12), 100_000, SeedTree::new(SEED).child(GEOMETRY)).unwrap()
}

fn table1() -> NetworkMoments {
    NetworkMoments { zeta1: 16.9392, zeta2: 288.6, zeta3: 13.9872 }
}

fn c1() -> Outcome {
    let mut o = Outcome::new();
    let quantized = [0.38, 0.45, 0.55, 0.61];
    let unquantized = [0.33, 0.44, 0.56, 0.62];
    for (i, m) in [50.0, 200.0, 600.0, 1000.0].into_iter().enumerate() {
        let p = MulticellInputs { alpha: 0.5, rho: 0.1, t: 200.0, m, moments: table1() };
        let q = optimal_alpha_multicell(&p, true).unwrap().alpha;
        let u = optimal_alpha_multicell(&p, false).unwrap().alpha;
        o.check((q - quantized[i]).abs() <= 0.01, format!("M={m} quantized alpha*={q:.4} target {}", quantized[i]));
        o.check((u - unquantized[i]).abs() <= 0.01, format!("M={m} unquantized alpha*={u:.4} target {}", unquantized[i]));
    }
    o
}

fn c2(k12: &GeometryStats) -> Outcome {
    let mut o = Outcome::new();
    let k5 = estimate_zeta_stats(&reference_network(5), 100_000, SeedTree::new(SEED).child(GEOMETRY)).unwrap();
    for (k, s, z2) in [(5.0, &k5, 50.53), (12.0, k12, 288.6)] {
        let r1 = s.zeta1 / k;
        let r3 = s.zeta3 / k;
        o.check((r1 / 1.4116 - 1.0).abs() <= 0.02, format!("K={k} zeta1/K={r1:.4} target 1.4116"));
        o.check((r3 / 1.1656 - 1.0).abs() <= 0.02, format!("K={k} zeta3/K={r3:.4} target 1.1656"));
        o.check((s.zeta2 / z2 - 1.0).abs() <= 0.05, format!("K={k} zeta2={:.2} target {z2}", s.zeta2));
    }
    o
}

fn random_moments<R: Rng>(k: f64, rng: &mut R) -> NetworkMoments {
    let zeta1 = k * (1.0 + rng.random::<f64>());
    NetworkMoments { zeta1, zeta2: zeta1 * zeta1 * (1.0 + 0.1 * rng.random::<f64>()), zeta3: k * (1.0 + 0.5 * rng.random::<f64>()) }
}

fn c3() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = SeedTree::new(SEED).child(3).stream();
    let mut worst = [0.0f64; 4];
    for _ in 0..1000 {
        let k = rng.random_range(1..=30) as f64;
        let t = rng.random_range(k as usize..=2000) as f64;
        let s = SingleCellInputs {
            alpha: rng.random_range(0.01..0.99),
            rho: 10f64.powf(rng.random_range(-3.0..1.0)),
            t,
            m: rng.random_range(1..=4096) as f64,
            k,
        };
        let m = MulticellInputs { alpha: s.alpha, rho: s.rho, t, m: s.m, moments: random_moments(k, &mut rng) };
        let errs = [
            sinr_qsp_single(&s).unwrap() * sigma_eps_single(&s, true).unwrap() - 1.0,
            sinr_uqsp_single(&s).unwrap() * sigma_eps_single(&s, false).unwrap() - 1.0,
            sinr_qsp_multicell(&m).unwrap() * expected_sigma_eps_multicell(&m, true).unwrap() - 1.0,
            sinr_uqsp_multicell(&m).unwrap() * expected_sigma_eps_multicell(&m, false).unwrap() - 1.0,
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e.abs());
        }
    }
    for (name, w) in ["qsp single", "uqsp single", "qsp multicell", "uqsp multicell"].iter().zip(worst) {
        o.check(w < 1e-10, format!("{name}: max |sinr * noise - 1| = {w:.2e} over 1000 points"));
    }
    o
}

fn grid_argmax(f: impl Fn(f64) -> f64) -> f64 {
    let mut best = (0.0, f64::MIN);
    for i in 1..10_000 {
        let a = i as f64 * 1e-4;
        let v = f(a);
        if v > best.1 {
            best = (a, v);
        }
    }
    best.0
}

fn c4() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = SeedTree::new(SEED).child(4).stream();
    let mut worst = [0.0f64; 4];
    let mut errors = [0usize; 4];
    for _ in 0..100 {
        let k = rng.random_range(2..=20) as f64;
        let t = rng.random_range((7 * k as usize).max(20)..=1000) as f64;
        let s = SingleCellInputs {
            alpha: 0.5,
            rho: 10f64.powf(rng.random_range(-2.0..0.5)),
            t,
            m: rng.random_range(10..=1000) as f64,
            k,
        };
        let m = MulticellInputs { alpha: 0.5, rho: s.rho, t, m: s.m, moments: random_moments(k, &mut rng) };
        let found = [
            optimal_alpha_single(&s, true).map(|r| (r.alpha, grid_argmax(|a| sinr_qsp_single(&s.with_alpha(a)).unwrap()))),
            optimal_alpha_single(&s, false).map(|r| (r.alpha, grid_argmax(|a| sinr_uqsp_single(&s.with_alpha(a)).unwrap()))),
            optimal_alpha_multicell(&m, true).map(|r| (r.alpha, grid_argmax(|a| sinr_qsp_multicell(&m.with_alpha(a)).unwrap()))),
            optimal_alpha_multicell(&m, false)
                .map(|r| (r.alpha, grid_argmax(|a| sinr_uqsp_multicell(&m.with_alpha(a)).unwrap()))),
        ];
        for (i, f) in found.into_iter().enumerate() {
            match f {
                Ok((root, grid)) => worst[i] = worst[i].max((root - grid).abs()),
                Err(_) => errors[i] += 1,
            }
        }
    }
    for (i, name) in ["qsp single", "uqsp single", "qsp multicell", "uqsp multicell"].iter().enumerate() {
        o.check(
            worst[i] <= 2e-4 && errors[i] == 0,
            format!("{name}: max |root - grid| = {:.2e}, {} points without a root", worst[i], errors[i]),
        );
    }
    o
}

fn c5(k12: &GeometryStats) -> Outcome {
    let mut o = Outcome::new();
    let setup = McSetup::new(TrialCounts { n_outer: 40, n_inner: 2 }, SEED);
    for snr in [-20.0, -15.0, -10.0, -5.0, 0.0] {
        let cfg = reference_network(12).with_snr_db(snr);
        let emp = mse_monte_carlo(&cfg, Scheme::Qsp, &setup).unwrap();
        let b200 = mse_bound_multicell(0.5, cfg.rho, 200, k12.zeta1);
        let b50 = mse_bound_multicell(0.5, cfg.rho, 50, k12.zeta1);
        let rel = emp.mean / b200 - 1.0;
        o.check(
            (-0.15..=0.05).contains(&rel),
            format!("{snr:>5} dB T=200: empirical {:.4} (se {:.1e}) bound {b200:.4} rel {rel:+.3}", emp.mean, emp.stderr),
        );
        o.check(b50 > b200 && b50 > emp.mean, format!("{snr:>5} dB T=50 bound {b50:.4} above T=200 curves"));
    }
    o
}

fn optimized(cfg: &NetworkConfig, scheme: Scheme, counts: TrialCounts) -> (f64, f64, f64) {
    let found = optimize_alpha_mc(cfg, scheme, false, &AlphaGrid::default(), &McSetup::new(counts, SEED)).unwrap();
    (found.rate.rate_bits, found.rate.stderr, found.alpha_star)
}

fn c6() -> Outcome {
    let mut o = Outcome::new();
    let counts = TrialCounts { n_outer: 25, n_inner: 4 };
    for (snr, target) in [(-20.0, 0.144), (10.0, 0.52)] {
        let cfg = reference_network(12).with_snr_db(snr);
        let (q, _, _) = optimized(&cfg, Scheme::Qsp, counts);
        let (u, _, _) = optimized(&cfg, Scheme::Uqsp, counts);
        let gap = u - q;
        o.check(
            (gap - target).abs() <= 0.1,
            format!("{snr:>5} dB: uqsp {u:.4} - qsp {q:.4} = {gap:.4} bits, target {target} +/- 0.1"),
        );
    }
    o
}

fn c7(k12: &GeometryStats) -> Outcome {
    let mut o = Outcome::new();
    let cfg = reference_network(12).with_snr_db(-10.0);
    let counts = TrialCounts { n_outer: 50, n_inner: 4 };
    let p = MulticellInputs { alpha: 0.5, rho: cfg.rho, t: 200.0, m: 100.0, moments: k12.moments() };
    for (scheme, quantized, tol) in [(Scheme::Qsp, true, 0.10), (Scheme::Uqsp, false, 0.05)] {
        let closed = optimal_alpha_multicell(&p, quantized).unwrap();
        let analytic = rate_bits(closed.sinr);
        let (mc, se, a) = optimized(&cfg, scheme, counts);
        let rel = mc / analytic - 1.0;
        o.check(
            rel.abs() <= tol,
            format!(
                "{scheme}: MC {mc:.4} (se {se:.1e}, alpha* {a:.3}) vs closed form {analytic:.4} (alpha* {:.3}), rel {rel:+.3}, tol {tol}",
                closed.alpha
            ),
        );
    }
    o
}

fn c8(k12: &GeometryStats) -> Outcome {
    let mut o = Outcome::new();
    let cfg = NetworkConfig { antennas: 4096, ..reference_network(12) }.with_snr_db(-5.0);
    let counts = TrialCounts { n_outer: 8, n_inner: 2 };
    let (q, _, aq) = optimized(&cfg, Scheme::Qsp, counts);
    let (u, _, au) = optimized(&cfg, Scheme::Uqsp, counts);
    let rel = (u - q) / u;
    o.check(rel.abs() < 0.05, format!("M=4096: qsp {q:.4}, uqsp {u:.4}, relative difference {rel:.4}"));
    for (name, r, a) in [("qsp", q, aq), ("uqsp", u, au)] {
        let lim = asymptotic_rate_m(a, 200.0, k12.zeta3);
        o.check(r < lim, format!("{name}: {r:.4} below large-array limit {lim:.4} at alpha* {a:.3}"));
    }
    o
}

/// Normalized mean of `samples`, in standard errors.
fn z_score(samples: &[Complex64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<Complex64>() / n;
    let var = samples.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    mean.norm() / (var / n).sqrt()
}

fn c9() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = SeedTree::new(SEED).child(9).stream();

    // quantizer input uncorrelated with its distortion
    let var = 2.2;
    let q = bussgang_params(var).unwrap();
    let (mut zz, mut zy) = (0.0, Vec::with_capacity(1_000_000));
    for _ in 0..1_000_000 {
        let y = complex_normal(&mut rng) * var.sqrt();
        let z = quantize_sample(y) - y * q.gamma.sqrt();
        zz += z.norm_sqr();
        zy.push(z * y.conj());
    }
    let zvar = zz / 1e6;
    let zs = z_score(&zy);
    o.check((zvar / SIGMA_Z_SQ - 1.0).abs() < 0.01 && zs < 3.0, format!("bussgang: var(z) {zvar:.5}, E[z y*] at {zs:.2} se"));

    // channel uncorrelated with the quantization noise of the block
    let cfg = reference_network(12).with_snr_db(0.0);
    let mut zh = Vec::new();
    for _ in 0..50 {
        let drop = drop_users(&cfg, &mut rng).unwrap();
        let ch = ChannelRealization::draw(cfg.antennas, drop.amplitudes(), &mut rng);
        let book = make_pilot_book(cfg.total_users(), cfg.coherence, &mut rng).unwrap();
        let data = make_data(cfg.total_users(), cfg.coherence, &mut rng);
        let noise = complex_normal_matrix(cfg.antennas, cfg.coherence, &mut rng);
        let y = BlockComponents::new(&ch, &book.c, &data, noise).unwrap().assemble(cfg.alpha, cfg.rho);
        let var = drop.kappa0 * cfg.rho + 1.0;
        let g = bussgang_params(var).unwrap().gamma.sqrt();
        let r = quantize(&y);
        for m in 0..cfg.antennas {
            for t in (0..cfg.coherence).step_by(7) {
                let z = r[[m, t]] - y[[m, t]] * g;
                zh.push(z * ch.h[[m, t % cfg.users_per_cell]].conj());
            }
        }
    }
    let zs = z_score(&zh);
    o.check(zs < 3.0, format!("channel vs quantization noise: E[z h*] at {zs:.2} se over {} samples", zh.len()));

    // estimation error orthogonal to the estimate: exactly without
    // quantization, approximately under the i.i.d. distortion model
    let cfg = NetworkConfig { cells: 1, ..reference_network(12) }.with_snr_db(-10.0);
    let book = make_pilot_book(12, 200, &mut rng).unwrap();
    let var = cfg.users_per_cell as f64 * cfg.rho + 1.0;
    for scheme in [Scheme::Uqsp, Scheme::Qsp] {
        let model = if scheme == Scheme::Qsp { bussgang_params(var).unwrap() } else { QuantizerModel::unquantized(var) };
        let xi = vec![lmmse_gain_qsp(0.5, cfg.rho, 200, 12.0, &model); 12];
        let (mut eh, mut power) = (Vec::new(), 0.0);
        for _ in 0..100 {
            let ch = ChannelRealization::draw(cfg.antennas, vec![1.0; 12], &mut rng);
            let data = make_data(12, 200, &mut rng);
            let noise = complex_normal_matrix(cfg.antennas, 200, &mut rng);
            let y = BlockComponents::new(&ch, &book.c, &data, noise).unwrap().assemble(0.5, cfg.rho);
            let r = if scheme == Scheme::Qsp { quantize(&y) } else { y };
            let est = estimate_channel(&r, &book.c, &xi, scheme).unwrap();
            for (e, h) in est.h_hat.iter().zip(ch.h.slice(s![.., ..12]).iter()) {
                eh.push(e * (h - e).conj());
                power += e.norm_sqr();
            }
        }
        let n = eh.len() as f64;
        if scheme == Scheme::Uqsp {
            let zs = z_score(&eh);
            o.check(zs < 3.0, format!("lmmse orthogonality uqsp: E[h_hat (h - h_hat)*] at {zs:.2} se"));
        } else {
            let rel = (eh.iter().sum::<Complex64>() / n).norm() / (power / n);
            o.check(rel < 0.02, format!("lmmse orthogonality qsp: |E[h_hat (h - h_hat)*]| = {rel:.4} of estimate power"));
        }
    }

    // pilot removal never hurts, with paired randomness
    let setup = McSetup::new(TrialCounts { n_outer: 12, n_inner: 2 }, SEED);
    for scheme in [Scheme::Qsp, Scheme::Uqsp] {
        for snr in [-10.0, 0.0] {
            let cfg = reference_network(12).with_snr_db(snr);
            let alphas = [0.2, 0.5, 0.8];
            let mut worse = 0;
            for i in 0..setup.counts.n_outer {
                let a = drop_sinrs(&cfg, scheme, false, &alphas, &setup, i).unwrap();
                let b = drop_sinrs(&cfg, scheme, true, &alphas, &setup, i).unwrap();
                worse += a.iter().zip(&b).filter(|(a, b)| b.rate_bits() < a.rate_bits()).count();
            }
            o.check(worse == 0, format!("{scheme} {snr} dB: pilot removal worse in {worse} of 36 paired fits"));
        }
    }

    // no rate without pilot or data energy
    let cfg = reference_network(12);
    for scheme in [Scheme::Qsp, Scheme::Uqsp] {
        for pr in [false, true] {
            let r = estimate_rates(&cfg, scheme, pr, &[0.0, 1.0], &setup).unwrap();
            o.check(
                r.iter().all(|r| r.rate_bits == 0.0),
                format!("{scheme} pr={pr}: rates at alpha 0 and 1 are {} and {}", r[0].rate_bits, r[1].rate_bits),
            );
        }
    }

    // closed-form rates rise monotonically toward the high-SNR limit
    let z = table1();
    let (lq, lu) = asymptotic_rate_rho(0.5, 200.0, 100.0, &z).unwrap();
    let mut prev = (0.0, 0.0);
    let mut monotone = true;
    let mut below = true;
    for e in -30..=60 {
        let p = MulticellInputs { alpha: 0.5, rho: 10f64.powf(e as f64 / 10.0), t: 200.0, m: 100.0, moments: z };
        let cur = (rate_bits(sinr_qsp_multicell(&p).unwrap()), rate_bits(sinr_uqsp_multicell(&p).unwrap()));
        monotone &= cur.0 > prev.0 && cur.1 > prev.1;
        below &= cur.0 < lq && cur.1 < lu;
        prev = cur;
    }
    let gap = (lq - prev.0).max(lu - prev.1);
    o.check(
        monotone && below && gap < 1e-3,
        format!("snr saturation: monotone {monotone}, below limits {below}, gap at 60 dB {gap:.1e} (limits {lq:.4}, {lu:.4})"),
    );
    o
}

fn run_preset(name: &str, threads: usize) -> Table {
    let mut spec = preset(name, Scale::Desk).unwrap();
    spec.n_outer = 2;
    spec.n_inner = 1;
    spec.zeta_drops = 2_000;
    run_experiment_threads(&spec, threads, &mut ZetaCache::in_memory()).unwrap()
}

fn c10() -> Outcome {
    let mut o = Outcome::new();
    for name in PRESETS {
        let a = run_preset(name, 1);
        let b = run_preset(name, 1);
        let c = run_preset(name, 4);
        let same_bytes = a.to_csv_string(None) == b.to_csv_string(None);
        let mut worst = 0.0f64;
        let mut layout = a.header == c.header && a.rows.len() == c.rows.len();
        for (ra, rc) in a.rows.iter().zip(&c.rows) {
            for (x, y) in ra.iter().zip(rc) {
                match (x.as_f64(), y.as_f64()) {
                    (Some(x), Some(y)) => worst = worst.max((x - y).abs() / x.abs().max(1.0)),
                    _ => layout &= x == y,
                }
            }
        }
        o.check(
            same_bytes && layout && worst <= 1e-12,
            format!("{name}: byte-identical {same_bytes}, 1 vs 4 threads max difference {worst:.1e}"),
        );
    }
    o
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let k12 = moments_k12();
    let criteria: Vec<Criterion> = vec![
        ("optimal power fractions of the reference network", Box::new(c1)),
        ("network moments from 10^5 drops", Box::new(|| c2(&k12))),
        ("closed-form SINR vs noise assembly", Box::new(c3)),
        ("optimal-fraction roots vs grid argmax", Box::new(c4)),
        ("channel-estimation MSE vs bound", Box::new(|| c5(&k12))),
        ("unquantized-minus-quantized rate gap", Box::new(c6)),
        ("Monte Carlo vs closed-form rates", Box::new(|| c7(&k12))),
        ("large-array convergence", Box::new(|| c8(&k12))),
        ("property suite", Box::new(c9)),
        ("determinism of preset tables", Box::new(c10)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2}: {verdict} {name} ({:.1} s)", i + 1, start.elapsed().as_secs_f64());
        for line in &outcome.detail {
            println!("    {line}");
        }
        failed += usize::from(!outcome.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
