//! Acceptance criteria 1 to 11, one PASS/FAIL line each.
//!
//! The default run (as part of `cargo test`) covers the correctness
//! criteria. The dataset experiments (6, 7, 8 and 9) take minutes to tens
//! of minutes and run with `--full`:
//!
//! ```text
//! cargo test --release -p sdgg-core --test acceptance -- --full
//! ```
//!
//! Criterion numbers given as arguments restrict the run, e.g. `-- --full 6 8`.

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdgg::commands::{run_command, Command};
use sdgg::config::parse_config_with_env;
use sdgg::data::{build_features, make_split, parse_tu_dataset, Dataset, FeatureSpec, Graph};
use sdgg::eval::{average_precision, interpolation_ratio, roc_auc, run_trials, GeometryParams, TrialReport};
use sdgg::gradcheck::run_suite;
use sdgg::nn::{Architecture, Discriminator, HeadActivation, ParamSet};
use sdgg::synth2d::{
    band_occupancy, boundary_grid, gen_sine_data, off_manifold_auc, train_2d, SineConfig, Train2dConfig,
};
use sdgg::train::{bce, kl_loss, train, Method, TrainConfig, TrainObserver};
use sdgg::{Exec, Tape, Tensor};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fail(detail: impl std::fmt::Display) -> Outcome {
    outcome(false, detail.to_string())
}

// ---------------------------------------------------------------- 1

fn gradient_fidelity() -> Outcome {
    const TOL: f64 = 1e-4;
    let start = Instant::now();
    let reports = match run_suite(TOL, 0) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let elapsed = start.elapsed();
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    let worst = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    outcome(
        failed.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{} checks, worst relative error {worst:.2e}, failed {failed:?}, {:.1}s",
            reports.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn random_graph(rng: &mut ChaCha8Rng, d: usize) -> Graph {
    let n = rng.random_range(2..=20);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) {
                edges.push((u, v));
            }
        }
    }
    let mut x = Tensor::zeros(n, d);
    for v in 0..n {
        x.set(v, rng.random_range(0..d), 1.0);
    }
    Graph::from_edges(n, &edges, x, 0)
}

fn permutation_invariance() -> Outcome {
    const D: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let models = [HeadActivation::Sigmoid, HeadActivation::None]
        .map(|act| Discriminator::new(D, Architecture::default(), act, &mut rng));
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let g = random_graph(&mut rng, D);
        let base: Vec<_> = models
            .iter()
            .map(|m| (m.score(&g).unwrap(), m.embedding(&g).unwrap()))
            .collect();
        for _ in 0..5 {
            let mut perm: Vec<usize> = (0..g.node_count()).collect();
            perm.shuffle(&mut rng);
            let h = g.permuted(&perm);
            for (m, (s, e)) in models.iter().zip(&base) {
                worst = worst.max((m.score(&h).unwrap() - s).abs());
                for (a, b) in m.embedding(&h).unwrap().iter().zip(e) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    outcome(
        worst <= 1e-6,
        format!("200 graphs x 5 permutations, max deviation {worst:.2e}"),
    )
}

// ---------------------------------------------------------------- 3

/// `(wins + ties/2) / (P·N)` over all positive-negative pairs.
fn auc_oracle(s: &[f64], y: &[bool]) -> f64 {
    let (mut doubled, mut p, mut n) = (0u64, 0u64, 0u64);
    for i in 0..s.len() {
        if y[i] {
            p += 1;
        } else {
            n += 1;
        }
        for j in 0..s.len() {
            if y[i] && !y[j] {
                doubled += if s[i] > s[j] {
                    2
                } else if s[i] == s[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    doubled as f64 / 2.0 / (p as f64 * n as f64)
}

/// Step-interpolated precision summed over distinct thresholds, each
/// threshold's counts taken by a full scan.
fn ap_oracle(s: &[f64], y: &[bool]) -> f64 {
    let mut thresholds = s.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let p = y.iter().filter(|&&l| l).count();
    let (mut ap, mut prev) = (0.0, 0.0);
    for t in thresholds {
        let tp = s.iter().zip(y).filter(|(v, l)| **v >= t && **l).count();
        let predicted = s.iter().filter(|v| **v >= t).count();
        let recall = tp as f64 / p as f64;
        ap += (recall - prev) * (tp as f64 / predicted as f64);
        prev = recall;
    }
    ap
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        y[0] = true;
        y[1] = false;
        // Coarse levels make ties common.
        let levels = rng.random_range(2..=20);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / 7.0 - 1.0).collect();
        let auc = roc_auc(&s, &y).unwrap();
        let ap = average_precision(&s, &y).unwrap();
        let transformed: Vec<f64> = s.iter().map(|v| 3.0 * v.powi(3) + 2.0).collect();
        let auc_t = roc_auc(&transformed, &y).unwrap();
        if auc != auc_oracle(&s, &y) || ap != ap_oracle(&s, &y) || auc_t != auc {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("1000 instances, {mismatches} not bit-identical to the oracles or under x -> 3x^3 + 2"),
    )
}

// ---------------------------------------------------------------- 4

fn closed_form_losses() -> Outcome {
    let tape = Tape::new();
    let s = |v| tape.constant(Tensor::scalar(v));
    let kl0 = kl_loss(s(0.0), s(1.0)).and_then(|v| v.item()).unwrap();
    let kl1 = kl_loss(s(1.0), s(1.0)).and_then(|v| v.item()).unwrap();
    let b0 = bce(s(0.5), 0.0).and_then(|v| v.item()).unwrap();
    let b1 = bce(s(0.5), 1.0).and_then(|v| v.item()).unwrap();
    let ln2 = std::f64::consts::LN_2;
    let err = [kl0.abs(), (kl1 - 0.5).abs(), (b0 - ln2).abs(), (b1 - ln2).abs()]
        .into_iter()
        .fold(0.0, f64::max);
    outcome(
        err <= 1e-9,
        format!("KL(0,1)={kl0}, KL(1,1)={kl1}, BCE(0.5)={b0}/{b1}, max error {err:.1e}"),
    )
}

// ---------------------------------------------------------------- 5

#[derive(Default)]
struct ClipAudit {
    steps: usize,
    violations: usize,
}

impl TrainObserver for ClipAudit {
    fn critic_step(&mut self, critic: &ParamSet, clip: f64) {
        self.steps += 1;
        self.violations += critic.flatten().iter().filter(|w| w.abs() > clip).count();
    }
}

fn clip_invariant() -> Outcome {
    let ds = common::toy_dataset(10, 5);
    let split = make_split(&ds, 0usize, 0.8, 5).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for method in [Method::Ati, Method::Atii] {
        let cfg = TrainConfig {
            epochs: 5,
            exec: Exec::Sequential,
            ..TrainConfig::for_method(method)
        };
        let mut audit = ClipAudit::default();
        if let Err(e) = train(&split, &cfg, &mut audit) {
            return fail(e);
        }
        ok &= audit.steps > 0 && audit.violations == 0;
        parts.push(format!(
            "{method}: {} critic steps, {} violations",
            audit.steps, audit.violations
        ));
    }
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 6, 7, 8

fn load(name: &str) -> Result<Dataset, String> {
    let dir = common::data_root().join(name);
    let ds = parse_tu_dataset(&dir, name).map_err(|e| format!("{name} unavailable: {e}"))?;
    build_features(ds, FeatureSpec::default()).map_err(|e| e.to_string())
}

fn trials(ds: &Dataset, method: Method, class: usize, k: usize) -> Result<TrialReport, String> {
    let cfg = TrainConfig::for_method(method);
    run_trials(|seed| make_split(ds, class, 0.8, seed), &cfg, k, None).map_err(|e| e.to_string())
}

fn aucs(r: &TrialReport) -> String {
    let v: Vec<String> = r.auc.values.iter().map(|a| format!("{a:.3}")).collect();
    format!("[{}] mean {:.3} std {:.3}", v.join(", "), r.auc.mean, r.auc.std)
}

fn mutag_reproduction() -> Outcome {
    let ds = match load("MUTAG") {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (class, bar) in [(0, 0.95), (1, 0.90)] {
        match trials(&ds, Method::Nat, class, 3) {
            Ok(r) => {
                ok &= r.auc.mean >= bar;
                parts.push(format!("class {class} AUC {} (bar {bar})", aucs(&r)));
            }
            Err(e) => return fail(e),
        }
    }
    let t = start.elapsed();
    ok &= t < Duration::from_secs(15 * 60);
    parts.push(format!("{:.0}s", t.as_secs_f64()));
    outcome(ok, parts.join("; "))
}

fn aids_reproduction() -> Outcome {
    let ds = match load("AIDS") {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let start = Instant::now();
    match trials(&ds, Method::Nat, 0, 1) {
        Ok(r) => {
            let t = start.elapsed();
            outcome(
                r.auc.mean >= 0.95 && t < Duration::from_secs(45 * 60),
                format!("class 0 AUC {} (bar 0.95); {:.0}s", aucs(&r), t.as_secs_f64()),
            )
        }
        Err(e) => fail(e),
    }
}

fn method_ordering() -> Outcome {
    let ds = match load("MUTAG") {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let mut reports = Vec::new();
    for m in Method::ALL {
        match trials(&ds, m, 0, 3) {
            Ok(r) => reports.push(r),
            Err(e) => return fail(e),
        }
    }
    let all_above = reports.iter().all(|r| r.auc.mean >= 0.8);
    let nat_std = reports.iter().find(|r| r.method == Method::Nat).unwrap().auc.std;
    let stable = nat_std <= 0.05
        || reports
            .iter()
            .filter(|r| r.method.is_adversarial())
            .all(|r| nat_std <= r.auc.std);
    let parts: Vec<String> = reports.iter().map(|r| format!("{} {}", r.method, aucs(r))).collect();
    outcome(all_above && stable, parts.join("; "))
}

// ---------------------------------------------------------------- 9

fn synthetic_2d() -> Outcome {
    let start = Instant::now();
    let data = SineConfig::default();
    let run = match gen_sine_data(&data).and_then(|p| train_2d(&p, &Train2dConfig::default())) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let auc = off_manifold_auc(&run.classifier, &data, data.seed + 1).unwrap();
    let grid = boundary_grid(
        &run.classifier,
        (data.z_lo, data.z_hi),
        (-3.0, 3.0),
        100,
        Exec::default(),
    )
    .unwrap();
    let (inside, outside) = band_occupancy(&grid, data.a);
    let t = start.elapsed();
    // Concentrated: most of the band scores low and most of the rest does not.
    let concentrated = inside >= 0.8 && outside <= 0.2;
    outcome(
        auc >= 0.9 && concentrated && t < Duration::from_secs(120),
        format!(
            "off-manifold AUC {auc:.3} (bar 0.9); low-score share in band {inside:.3}, off band {outside:.3}; {:.0}s",
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 10

fn interpolation_ratio_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let r: f64 = rng.random_range(0.1..10.0);
        // Valid domain: the shadow 2rw must stay below the disc area πr².
        let w = rng.random_range(0.0..1.0) * 0.99 * std::f64::consts::PI * r / 2.0;
        let eta = interpolation_ratio(&GeometryParams {
            d: 2,
            alpha: 1,
            r,
            w: vec![w],
        })
        .unwrap();
        let reduced = 2.0 * w / (std::f64::consts::PI * r - 2.0 * w);
        worst = worst.max((eta - reduced).abs() / reduced.abs().max(1.0));
    }
    let w = 0.05;
    let etas: Vec<f64> = (1..=100)
        .map(|i| {
            interpolation_ratio(&GeometryParams {
                d: 2,
                alpha: 1,
                r: 0.05 * i as f64,
                w: vec![w],
            })
            .unwrap()
        })
        .collect();
    let decreasing = etas.windows(2).all(|p| p[1] < p[0]);
    outcome(
        worst <= 1e-12 && decreasing,
        format!("max deviation from 2w/(pi r - 2w) {worst:.1e}; strictly decreasing over 100 radii: {decreasing}"),
    )
}

// ---------------------------------------------------------------- 11

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mutag = common::data_root().join("MUTAG");
    let mut bytes = Vec::new();
    for run in ["a", "b"] {
        let out = root.path().join(run);
        let overrides = vec![
            format!("dataset_dir={:?}", mutag.display().to_string()),
            format!("out_dir={:?}", out.display().to_string()),
            "epochs=3".to_string(),
            "seed=11".to_string(),
        ];
        let cfg = match parse_config_with_env(None, &overrides, None) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        for cmd in [Command::Train, Command::Eval] {
            if let Err(e) = run_command(cmd, &cfg) {
                return fail(e);
            }
        }
        let read = |f: &str| fs::read(out.join(f)).unwrap();
        bytes.push((read("checkpoint.json"), read("metrics.json")));
    }
    let same_ckpt = bytes[0].0 == bytes[1].0;
    let same_metrics = bytes[0].1 == bytes[1].1;
    outcome(
        same_ckpt && same_metrics,
        format!("checkpoint identical: {same_ckpt}; metrics.json identical: {same_metrics}"),
    )
}

// ----------------------------------------------------------------

type Check = fn() -> Outcome;

const CRITERIA: [(u32, &str, bool, Check); 11] = [
    (1, "gradient fidelity", false, gradient_fidelity),
    (2, "permutation invariance", false, permutation_invariance),
    (3, "metric oracles", false, metric_oracles),
    (4, "closed-form losses", false, closed_form_losses),
    (5, "critic clip invariant", false, clip_invariant),
    (6, "MUTAG NAT reproduction", true, mutag_reproduction),
    (7, "AIDS NAT reproduction", true, aids_reproduction),
    (8, "method sanity ordering", true, method_ordering),
    (9, "synthetic 2-D", true, synthetic_2d),
    (10, "interpolation ratio", false, interpolation_ratio_check),
    (11, "determinism", false, determinism),
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let full = args.iter().any(|a| a == "--full");
    let only: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, long, check) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        if long && !full {
            println!("criterion {id:>2} {name}: SKIP (long-running; pass --full)");
            continue;
        }
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {name}: {verdict} ({}) [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
