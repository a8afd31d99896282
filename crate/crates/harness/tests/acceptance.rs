//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p delayed-bandit --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use delayed_bandit::runner::{run_batch_detailed, EpisodeReport, SummaryStats};
use delayed_bandit::{concentration_check, ExperimentConfig, Preset, Settings};
use delayed_bandit_core::policy::PolicyKind;
use delayed_bandit_core::{bounds, DelayDistribution, Environment, Feedback, PolicyConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn preset(p: Preset, kind: PolicyKind, runs: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(p).expect("preset resolves");
    cfg.policy.kind = kind;
    cfg.runs = runs;
    cfg
}

fn batch(cfg: &ExperimentConfig) -> (Vec<EpisodeReport>, SummaryStats) {
    let reports = run_batch_detailed(cfg).expect("batch runs");
    let traces: Vec<_> = reports.iter().map(|r| r.trace.clone()).collect();
    let stats = SummaryStats::from_traces(&traces);
    (reports, stats)
}

/// Standard error of the mean final regret.
fn sem(stats: &SummaryStats) -> f64 {
    stats.final_std() / (stats.runs as f64).sqrt()
}

// 1
fn tau_golden_numbers() -> Outcome {
    let a = DelayDistribution::geometric(100.0).unwrap().cdf(100);
    let b = DelayDistribution::geometric(100.0).unwrap().cdf(500);
    let c = 1.0 / DelayDistribution::geometric(500.0).unwrap().cdf(100);
    let pass = (a - 0.63).abs() <= 0.01 && (b - 0.993).abs() <= 0.001 && (c - 5.5).abs() <= 0.1;
    outcome(pass, format!("tau(100,100)={a:.4} tau(100,500)={b:.4} 1/tau(500,100)={c:.3}"))
}

// 2
fn ridge_equivalence() -> Outcome {
    let mut worst = 0.0_f64;
    for instance in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(instance);
        let d = rng.random_range(1..=5usize);
        let horizon = rng.random_range(1..=200u64);
        let theta = vec![1.0 / (d as f64).sqrt(); d];
        let mut env = Environment::new(theta, DelayDistribution::fixed(0), ChaCha8Rng::seed_from_u64(instance + 7)).unwrap();
        let mut policy = PolicyConfig::new(PolicyKind::OtfLinUcb, horizon).build(d).unwrap();
        let mut gram = DMatrix::<f64>::identity(d, d);
        let mut rhs = DVector::<f64>::zeros(d);
        let mut policy_rng = ChaCha8Rng::seed_from_u64(instance + 11);
        for _ in 0..horizon {
            let set = env.generate_action_set(5).unwrap();
            let i = policy.select(&set, &mut policy_rng).unwrap();
            let out = env.step(i, &set).unwrap();
            let a = set.get(i).unwrap();
            policy
                .observe(&Feedback { round: out.round, action: a, events: &out.events, reward: out.reward })
                .unwrap();
            let av = DVector::from_column_slice(a);
            gram += &av * av.transpose();
            if out.reward {
                rhs += &av;
            }
        }
        let batch = gram.lu().solve(&rhs).unwrap();
        let online = policy.estimator().unwrap().estimate();
        for (x, y) in online.iter().zip(batch.iter()) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |online - batch ridge| = {worst:.3e} over 100 instances"))
}

// 3
fn inverse_fidelity() -> Outcome {
    let mut worst = 0.0_f64;
    for (seed, d) in [(1u64, 2usize), (2, 5), (3, 8)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut est = delayed_bandit_core::WindowedEstimator::new(d, 1.0, 100).unwrap();
        for _ in 0..10_000 {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
            let a: Vec<f64> = v.iter().map(|x| x / n).collect();
            est.record_action(&a).unwrap();
            worst = worst.max(est.inverse_residual());
        }
    }
    outcome(worst <= 1e-8, format!("max ||V V^-1 - I||_max = {worst:.3e} along 3 x 10^4 steps"))
}

// 4
fn elliptical_potential(batches: &[(Preset, &[EpisodeReport])]) -> Outcome {
    let mut worst_ratio = 0.0_f64;
    let mut episodes = 0;
    for (p, reports) in batches {
        let cfg = ExperimentConfig::preset(*p).unwrap();
        let budget = bounds::elliptical_potential_bound(cfg.d, cfg.policy.lambda, cfg.horizon);
        for r in reports.iter() {
            worst_ratio = worst_ratio.max(r.elliptical_potential.unwrap() / budget);
            episodes += 1;
        }
    }
    outcome(
        worst_ratio <= 1.0,
        format!("max potential / 2d log((d lambda + T)/(d lambda)) = {worst_ratio:.4} over {episodes} episodes"),
    )
}

// 5
fn confidence_set_coverage() -> Outcome {
    let settings = Settings::parse(
        "d = 3\nk = 10\nT = 500\ndelay = \"geometric\"\ndelay_mean = 20.0\nwindow = 40\ndelta = 0.05\nlambda = 1.0\nseed = 2024\n",
    )
    .unwrap();
    let cfg = settings.resolve().unwrap();
    let report = concentration_check(&cfg, 500).unwrap();
    let cov = report.coverage();
    outcome(
        cov >= 0.87,
        format!("coverage {cov:.3} ({}/500, tau_m={:.4}, worst ratio {:.3}); need >= 0.87", report.covered, report.tau, report.worst_ratio),
    )
}

// 6
fn upper_bound_dominance() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [Preset::A, Preset::B] {
        let cfg = preset(p, PolicyKind::OtfLinUcb, 200);
        let bound =
            bounds::theorem2_bound(cfg.horizon, cfg.d, cfg.policy.lambda, cfg.policy.delta, cfg.policy.window, cfg.tau())
                .unwrap();
        let (reports, _) = batch(&cfg);
        let below = reports.iter().filter(|r| r.trace.final_regret() < bound).count();
        let frac = below as f64 / reports.len() as f64;
        pass &= frac >= 0.9;
        parts.push(format!("{p}: {below}/200 below {bound:.1}"));
    }
    outcome(pass, parts.join("; "))
}

struct PolicyRuns {
    ucb: [(Vec<EpisodeReport>, SummaryStats); 3],
    ts: [(Vec<EpisodeReport>, SummaryStats); 3],
}

fn collect_runs() -> PolicyRuns {
    let ucb = [Preset::A, Preset::B, Preset::C].map(|p| batch(&preset(p, PolicyKind::OtfLinUcb, 100)));
    let ts = [Preset::A, Preset::B, Preset::C].map(|p| batch(&preset(p, PolicyKind::OtfLinTs, 100)));
    PolicyRuns { ucb, ts }
}

// 7
fn qualitative_reproduction(runs: &PolicyRuns) -> Outcome {
    let [a, b, c] = [&runs.ucb[0].1, &runs.ucb[1].1, &runs.ucb[2].1];
    let (fa, fb, fc) = (a.final_mean(), b.final_mean(), c.final_mean());
    let in_band = |x: f64| (30.0..=300.0).contains(&x);
    let half = |s: &SummaryStats| s.mean[1499] / s.final_mean();
    let (ha, hb) = (half(a), half(b));
    let (ta, tc) = (runs.ts[0].1.final_mean(), runs.ts[2].1.final_mean());
    let checks = [
        ("A in [30,300]", in_band(fa)),
        ("B in [30,300]", in_band(fb)),
        ("B flattens earlier", hb > ha),
        ("UCB C > 2A", fc > 2.0 * fa),
        ("TS C > 2A", tc > 2.0 * ta),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    outcome(
        failed.is_empty(),
        format!(
            "OTFLinUCB final mean A={fa:.1} B={fb:.1} C={fc:.1}; R(1500)/R(T) A={ha:.3} B={hb:.3}; OTFLinTS A={ta:.1} C={tc:.1}{}",
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

// 8
fn policy_ordering(runs: &PolicyRuns) -> Outcome {
    let otf = &runs.ucb[0].1;
    let (_, oracle) = batch(&preset(Preset::A, PolicyKind::OracleLinUcb, 100));
    let (_, random) = batch(&preset(Preset::A, PolicyKind::Random, 100));
    let gap_ok = |lo: &SummaryStats, hi: &SummaryStats| {
        let se = (sem(lo).powi(2) + sem(hi).powi(2)).sqrt();
        hi.final_mean() - lo.final_mean() >= 2.0 * se
    };
    let first = gap_ok(&oracle, otf);
    let second = gap_ok(otf, &random);
    outcome(
        first && second,
        format!(
            "oracle {:.1} (se {:.1}) <= OTFLinUCB {:.1} (se {:.1}) <= random {:.1} (se {:.1}): oracle<otf {}, otf<random {}",
            oracle.final_mean(),
            sem(&oracle),
            otf.final_mean(),
            sem(otf),
            random.final_mean(),
            sem(&random),
            if first { "ok" } else { "FAILS" },
            if second { "ok" } else { "FAILS" },
        ),
    )
}

// 9
fn lower_bound_scaling() -> Outcome {
    let horizons: [f64; 4] = [1e3, 1e4, 1e5, 1e6];
    let values: Vec<f64> = horizons
        .iter()
        .map(|&t| bounds::tuned_lower_bound(t as u64, 10, 0.5).unwrap().1)
        .collect();
    let xs: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let taus = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.99];
    let by_tau: Vec<f64> = taus.iter().map(|&tau| bounds::tuned_lower_bound(10_000, 10, tau).unwrap().1).collect();
    let decreasing = by_tau.windows(2).all(|w| w[1] < w[0]);
    outcome(
        (slope - 0.5).abs() <= 0.05 && decreasing,
        format!("log-log slope in T = {slope:.4}; decreasing in tau: {decreasing}"),
    )
}

// 10
fn chi_square_bound() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 1..=50 {
        let tau = i as f64 / 51.0;
        for j in 1..=50 {
            let gap = j as f64 / 50.0 * 0.125;
            let kl = bounds::bernoulli_kl(tau / 2.0, tau * (0.5 + 2.0 * gap)).unwrap();
            let bound = bounds::censored_kl_upper_bound(tau, gap);
            worst = worst.max(kl / bound);
            if kl > bound {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("max d/(32 tau Delta^2) = {worst:.4} on 50x50 grid, {violations} violations"))
}

// 11
fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_delayed-bandit");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "preset = \"A\"\nT = 400\npolicy = \"otf_lints\"\nruns = 8\nseed = 99\n").unwrap();
    let run = |name: &str, serial: bool| -> Vec<u8> {
        let out = dir.path().join(name);
        let mut cmd = Command::new(bin);
        cmd.args(["run", "--config"]).arg(&config).arg("--out").arg(&out);
        if serial {
            cmd.arg("--serial");
        }
        let status = cmd.output().unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(Path::new(&out).join("traces.csv")).unwrap()
    };
    let outputs = [run("p1", false), run("p2", false), run("s1", true), run("s2", true)];
    let same = outputs.iter().all(|o| o == &outputs[0]);
    outcome(same && !outputs[0].is_empty(), format!("4 invocations (2 parallel, 2 serial), {} bytes each, identical: {same}", outputs[0].len()))
}

fn main() {
    // `cargo test -- --list` and friends
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }

    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("[{}] {id:>2}. {name} ({secs:.1}s): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, secs));
    };

    record(1, "tau golden numbers", &mut tau_golden_numbers);
    record(2, "ridge equivalence", &mut ridge_equivalence);
    record(3, "Sherman-Morrison fidelity", &mut inverse_fidelity);
    let runs = collect_runs();
    record(4, "elliptical potential", &mut || {
        elliptical_potential(&[
            (Preset::A, &runs.ucb[0].0),
            (Preset::B, &runs.ucb[1].0),
            (Preset::C, &runs.ucb[2].0),
            (Preset::A, &runs.ts[0].0),
            (Preset::B, &runs.ts[1].0),
            (Preset::C, &runs.ts[2].0),
        ])
    });
    record(5, "confidence-set coverage", &mut confidence_set_coverage);
    record(6, "regret upper-bound dominance", &mut upper_bound_dominance);
    record(7, "qualitative regret reproduction", &mut || qualitative_reproduction(&runs));
    record(8, "policy ordering", &mut || policy_ordering(&runs));
    record(9, "lower-bound scaling", &mut lower_bound_scaling);
    record(10, "chi-square KL bound", &mut chi_square_bound);
    record(11, "determinism", &mut determinism);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" (criteria {failed:?})") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
