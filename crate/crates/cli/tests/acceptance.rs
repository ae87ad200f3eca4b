//! Acceptance criteria 1–11, one `[PASS]`/`[FAIL]` line each.
//!
//! Runs without the libtest harness so every line is printed and criteria run
//! one after another with undisturbed timings. Pass criterion numbers as
//! arguments to run a subset: `cargo test --test acceptance -- 3 6`.
//! `LIPAD_MNIST_DIR` points at the MNIST IDX files (default `data/mnist`
//! under the workspace root).

#[path = "support/fixture.rs"]
mod fixture;
#[path = "../../core/tests/support/gradcheck.rs"]
#[allow(dead_code)]
mod gradcheck;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use lipad::corruption::CorruptionProcess;
use lipad::datasets::Mnist;
use lipad::eval::{
    rank_fraction, roc_auc, run_black_image_experiment, run_contamination_sweep,
    run_moons_experiment, run_tabular_sweep, threshold_from_quantile, BlackImageConfig,
    ContaminationConfig, ExperimentReport, Method, ModelCache, MoonsConfig, ScoredDataset,
    TabularConfig,
};
use lipad::models::{autoencoder_param_count, param_count, AutoencoderSpec, DenseNetSpec};
use lipad::rng::{self, derive_seed};
use lipad::trainer::{dual_estimate, train, TrainConfig};
use lipad::transport::{
    brute_force_w1, check_prop2_bound, check_stability_triangle, dual_objective, dual_violation,
    exact_w1, w1, EmpiricalDist,
};
use lipad::Tensor;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const SEEDS: [u64; 3] = [1, 2, 3];
const DIGITS: [u8; 3] = [0, 1, 8];

/// What a criterion measured, and whether its condition held.
type Verdict = Result<String, String>;

fn mnist_dir() -> PathBuf {
    std::env::var_os("LIPAD_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn load_mnist() -> Result<Mnist, String> {
    let dir = mnist_dir();
    Mnist::load_dir(&dir)
        .map_err(|e| format!("MNIST unavailable ({e}); run scripts/fetch_mnist.sh"))
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cloud(n: usize, d: usize, r: &mut impl Rng) -> Tensor {
    Tensor::matrix(
        n,
        d,
        (0..n * d).map(|_| r.random_range(-2.0..2.0)).collect(),
    )
}

fn gaussian(n: usize, mean: f64, std: f64, seed: u64) -> Tensor {
    let mut r = rng::seeded(seed);
    let normal = Normal::new(mean, std).unwrap();
    Tensor::column((0..n).map(|_| normal.sample(&mut r)).collect())
}

fn c1_autodiff() -> Verdict {
    let mut first = 0.0f64;
    let mut worst_op = "";
    let mut penalty = 0.0f64;
    for seed in 0..10 {
        for (name, err) in gradcheck::primitive_errors(seed) {
            if err > first {
                first = err;
                worst_op = name;
            }
        }
        first = first.max(gradcheck::objective_fd_error(seed, 0.0));
        penalty = penalty
            .max(gradcheck::objective_fd_error(seed, 10.0))
            .max(gradcheck::penalty_only_error(seed))
            .max(gradcheck::symbolic_penalty_error(seed));
    }
    verdict(
        first < 1e-4 && penalty < 1e-3,
        format!("max first-order error {first:.2e} (worst primitive {worst_op}), max penalty error {penalty:.2e}"),
    )
}

fn c2_param_counts() -> Verdict {
    let critic = param_count(&DenseNetSpec::tabular_critic());
    let ae = autoencoder_param_count(&AutoencoderSpec::tabular());
    verdict(
        critic == 44_033 && ae == 44_666,
        format!("critic {critic} (want 44033), autoencoder {ae} (want 44666)"),
    )
}

fn c3_oracle() -> Verdict {
    let mut r = rng::seeded(3);
    let mut worst_brute = 0.0f64;
    let mut worst_gap = 0.0f64;
    for case in 0..100 {
        let n = 1 + case % 7;
        let d = 1 + case % 3;
        let (p, q) = (cloud(n, d, &mut r), cloud(n, d, &mut r));
        let want = brute_force_w1(&p, &q).map_err(|e| e.to_string())?;
        let (pd, qd) = (EmpiricalDist::uniform(p), EmpiricalDist::uniform(q));
        let (plan, pot) = exact_w1(&pd, &qd).map_err(|e| e.to_string())?;
        worst_brute = worst_brute.max((plan.cost - want).abs());
        let gap = (plan.cost - dual_objective(&pd, &qd, &pot)).abs();
        worst_gap = worst_gap.max(gap).max(dual_violation(&pd, &qd, &pot));
    }
    let mut axiom_failures = 0;
    for case in 0..200 {
        let sizes = [1 + case % 5, 1 + (case / 5) % 6, 1 + (case / 30) % 4];
        let d: Vec<EmpiricalDist> = sizes
            .iter()
            .map(|&n| EmpiricalDist::uniform(cloud(n, 2, &mut r)))
            .collect();
        let w = |a: usize, b: usize| w1(&d[a], &d[b]).unwrap();
        let ok = w(0, 0).abs() < 1e-12
            && w(0, 1) >= 0.0
            && (w(0, 1) - w(1, 0)).abs() < 1e-9
            && w(0, 2) <= w(0, 1) + w(1, 2) + 1e-9;
        axiom_failures += usize::from(!ok);
    }
    verdict(
        worst_brute < 1e-9 && worst_gap < 1e-9 && axiom_failures == 0,
        format!(
            "max |exact − brute| {worst_brute:.1e}, max duality gap {worst_gap:.1e}, metric-axiom failures {axiom_failures}/200"
        ),
    )
}

fn c4_duality() -> Verdict {
    let sigma = 1.0;
    let mut passing = 0;
    let mut ratios = Vec::new();
    for seed in SEEDS {
        let train_set = gaussian(256, 0.0, 0.1, derive_seed(seed, &[0]));
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let corruption = CorruptionProcess::Gaussian { sigma };
        let (state, _) = train(&train_set, &corruption, &cfg).map_err(|e| e.to_string())?;
        let held_out = gaussian(256, 0.0, 0.1, derive_seed(seed, &[1]));
        let mut r = rng::seeded(derive_seed(seed, &[2]));
        let corrupt = corruption
            .apply(&gaussian(256, 0.0, 0.1, derive_seed(seed, &[3])), &mut r)
            .map_err(|e| e.to_string())?;
        let est = dual_estimate(&state.params, &held_out, &corrupt).map_err(|e| e.to_string())?;
        let oracle = w1(
            &EmpiricalDist::uniform(held_out),
            &EmpiricalDist::uniform(corrupt),
        )
        .unwrap();
        let ratio = est / oracle;
        passing += usize::from((0.6..=1.15).contains(&ratio));
        ratios.push(format!("{ratio:.3}"));
    }
    verdict(
        passing == SEEDS.len(),
        format!(
            "estimate/oracle ratios [{}], {passing}/3 in [0.60, 1.15]",
            ratios.join(", ")
        ),
    )
}

fn c5_moons() -> Verdict {
    let outcome = run_moons_experiment(&MoonsConfig::default()).map_err(|e| e.to_string())?;
    let mut lad_ok = 0;
    let mut ae_failed_rays = 0;
    let mut detail = Vec::new();
    for (method, seed, rays) in &outcome.rays {
        let passing = rays.iter().filter(|r| r.passes()).count();
        match method {
            Method::Lad => lad_ok += usize::from(passing == rays.len()),
            Method::Ae => ae_failed_rays += rays.len() - passing,
            _ => {}
        }
        detail.push(format!(
            "{method} seed {seed}: {passing}/{} rays",
            rays.len()
        ));
    }
    // the LAD property must hold on every seed; the AE claim is that the far-point
    // test fails on at least one ray
    verdict(
        lad_ok == SEEDS.len() && ae_failed_rays >= 1,
        format!(
            "{}; LAD all rays on {lad_ok}/3 seeds, AE failing rays {ae_failed_rays}",
            detail.join(", ")
        ),
    )
}

fn c6_prop2() -> Verdict {
    let mut r = rng::seeded(6);
    let mut prop2 = 0;
    let mut worst = f64::NEG_INFINITY;
    for case in 0..100 {
        let gamma = [0.05, 0.1, 0.2][case % 3];
        let pn = EmpiricalDist::uniform(cloud(3 + case % 5, 2, &mut r));
        let pa = EmpiricalDist::uniform(cloud(2 + case % 4, 2, &mut r).map(|v| v + 3.0));
        let rep = check_prop2_bound(&pn, &pa, gamma).map_err(|e| e.to_string())?;
        prop2 += usize::from(rep.a <= rep.b + 1e-6);
        worst = worst.max(rep.a - rep.b);
    }
    let mut stable = 0;
    for case in 0..200 {
        let pn = EmpiricalDist::uniform(cloud(1 + case % 6, 2, &mut r));
        let pa = EmpiricalDist::uniform(cloud(1 + case % 5, 2, &mut r));
        let hat = EmpiricalDist::uniform(cloud(1 + case % 7, 2, &mut r));
        stable += usize::from(
            check_stability_triangle(&pn, &pa, &hat)
                .map_err(|e| e.to_string())?
                .holds,
        );
    }
    verdict(
        prop2 == 100 && stable == 200,
        format!("bound holds {prop2}/100 (max A − B {worst:.3e}), triangle holds {stable}/200"),
    )
}

fn c7_black_image(mnist: &Mnist, cache: &ModelCache) -> Verdict {
    let cfg = BlackImageConfig {
        mnist_dir: mnist_dir(),
        ..BlackImageConfig::default()
    };
    let report = run_black_image_experiment(&cfg, mnist, Some(cache)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut detail = Vec::new();
    for d in DIGITS {
        let lad = report.values("lad", Some(d), 0.0);
        let ae = report.values("ae", Some(d), 0.0);
        ok &= lad.len() == 3 && ae.len() == 3;
        ok &= lad.iter().all(|&v| v >= 0.99) && ae.iter().all(|&v| v < 0.5);
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join("/")
        };
        detail.push(format!("digit {d}: LAD {} AE {}", fmt(&lad), fmt(&ae)));
    }
    verdict(ok, detail.join("; "))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn c8_contamination(mnist: &Mnist, cache: &ModelCache) -> Verdict {
    let base = ContaminationConfig {
        mnist_dir: mnist_dir(),
        ..ContaminationConfig::default()
    };
    // only the cells the criterion compares; each cell is seeded by its own
    // coordinates, so the values equal those of the full sweep
    let clean = run_contamination_sweep(
        &ContaminationConfig {
            gammas: vec![0.0],
            methods: vec![Method::Lad, Method::Ae],
            ..base.clone()
        },
        mnist,
        Some(cache),
    )
    .map_err(|e| e.to_string())?;
    let dirty = run_contamination_sweep(
        &ContaminationConfig {
            gammas: vec![0.1],
            methods: vec![Method::Lad, Method::Ae, Method::Lof],
            ..base
        },
        mnist,
        Some(cache),
    )
    .map_err(|e| e.to_string())?;
    let at = |r: &ExperimentReport, m: &str, d: u8, g: f64| mean(&r.values(m, Some(d), g));
    let mut ok = true;
    let mut detail = Vec::new();
    for d in DIGITS {
        let lad_drop = at(&clean, "lad", d, 0.0) - at(&dirty, "lad", d, 0.1);
        let ae_drop = at(&clean, "ae", d, 0.0) - at(&dirty, "ae", d, 0.1);
        let (lad, lof) = (at(&dirty, "lad", d, 0.1), at(&dirty, "lof", d, 0.1));
        ok &= lad_drop <= 0.06 && ae_drop >= 0.08 && lad > lof;
        detail.push(format!(
            "digit {d}: LAD drop {lad_drop:.3}, AE drop {ae_drop:.3}, LAD {lad:.3} vs LOF {lof:.3} at γ=0.1"
        ));
    }
    verdict(ok, detail.join("; "))
}

fn c9_tabular() -> Verdict {
    let cfg = TabularConfig {
        gammas: vec![0.0, 0.03],
        methods: vec![Method::Lad, Method::Ae],
        ..TabularConfig::default()
    };
    let report = run_tabular_sweep(&cfg).map_err(|e| e.to_string())?;
    let mut wins = 0;
    let mut clean_ok = 0;
    let mut detail = Vec::new();
    for seed in SEEDS {
        let get = |m: &str, g: f64| report.value(m, None, g, seed).unwrap_or(f64::NAN);
        let (lad, ae, lad0) = (get("lad", 0.03), get("ae", 0.03), get("lad", 0.0));
        wins += usize::from(lad > ae);
        clean_ok += usize::from(lad0 > 0.9);
        detail.push(format!(
            "seed {seed}: γ=0.03 LAD {lad:.3} AE {ae:.3}, γ=0 LAD {lad0:.3}"
        ));
    }
    verdict(
        wins == 3 && clean_ok == 3,
        format!(
            "{}; LAD > AE on {wins}/3, LAD(γ=0) > 0.9 on {clean_ok}/3",
            detail.join("; ")
        ),
    )
}

fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                num += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / pairs
}

fn c10_metrics() -> Verdict {
    let mut r = rng::seeded(10);
    let mut checked = 0;
    let mut mismatches = 0;
    while checked < 1000 {
        let n = r.random_range(2..=500);
        let levels = if checked % 2 == 0 { 5 } else { 1_000_000 };
        let scores: Vec<f64> = (0..n)
            .map(|_| f64::from(r.random_range(0..levels)) / 7.0)
            .collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(r.random_bool(0.3))).collect();
        if !labels.contains(&0) || !labels.contains(&1) {
            continue;
        }
        let got = roc_auc(&ScoredDataset::new(scores.clone(), labels.clone()).unwrap()).unwrap();
        mismatches += usize::from(got != pair_count_auc(&scores, &labels));
        checked += 1;
    }
    let s: Vec<f64> = (0..11).map(f64::from).collect();
    let closed = [
        rank_fraction(1.0, &[0.0, 0.5, 2.0, 3.0]).unwrap() == 0.5,
        rank_fraction(1.0, &[1.0, 1.0]).unwrap() == 0.5,
        rank_fraction(-1.0, &[0.0, 1.0]).unwrap() == 0.0,
        rank_fraction(5.0, &[0.0, 1.0]).unwrap() == 1.0,
        threshold_from_quantile(&s, 0.0).unwrap() == 10.0,
        (threshold_from_quantile(&s, 0.05).unwrap() - 9.5).abs() < 1e-12,
        (threshold_from_quantile(&s, 0.25).unwrap() - 7.5).abs() < 1e-12,
    ];
    let closed_ok = closed.iter().filter(|&&b| b).count();
    verdict(
        mismatches == 0 && closed_ok == closed.len(),
        format!(
            "AUC differs from pair counting on {mismatches}/1000 cases, closed forms {closed_ok}/{}",
            closed.len()
        ),
    )
}

fn c11_determinism() -> Verdict {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let root = dir.path();
    let mnist = fixture::fake_mnist(root);
    let small = r#"{"iterations": 40, "hidden_dims": [16, 8], "batch_size": 32}"#;
    let image_ae = r#"{"input_dim": 784, "encoder_dims": [16], "bottleneck_dim": 4}"#;
    let files = [
        (
            "train.json",
            format!(
                r#"{{"dataset": "tabular", "n_samples": 500, "gamma": 0.05, "train": {small}}}"#
            ),
        ),
        (
            "moons.json",
            format!(
                r#"{{"n_samples": 300, "lad": {small}, "ae": {{"input_dim": 2, "encoder_dims": [8], "bottleneck_dim": 1}},
                    "ae_train": {small}, "grid_size": 25}}"#
            ),
        ),
        (
            "tabular.json",
            format!(
                r#"{{"n_samples": 600, "gammas": [0.0, 0.05], "lad": {small}, "ae_train": {small}}}"#
            ),
        ),
        (
            "black.json",
            format!(
                r#"{{"mnist_dir": {mnist:?}, "digits": [3, 8], "lad": {small}, "ae": {image_ae},
                    "ae_train": {small}, "reference_size": 15}}"#
            ),
        ),
        (
            "contamination.json",
            format!(
                r#"{{"mnist_dir": {mnist:?}, "digits": [3], "gammas": [0.0, 0.1], "lad": {small}, "ae": {image_ae},
                    "ae_train": {small}, "lof_k": 5, "knn_k": 3}}"#
            ),
        ),
        ("p.csv", "x0,x1\n0,0\n1,0\n0,2\n".to_string()),
        ("q.csv", "x0,x1\n3,1\n2,2\n4,0\n".to_string()),
        ("h.csv", "x0,x1\n3,2\n1,1\n".to_string()),
    ];
    for (name, text) in &files {
        fs::write(root.join(name), text).map_err(|e| e.to_string())?;
    }
    let commands: Vec<(Vec<String>, Vec<&str>)> = vec![
        (
            vec!["train".into(), "train.json".into()],
            vec!["trace.csv", "train.csv", "summary.json", "model.lipadnet"],
        ),
        (
            vec!["experiment".into(), "moons".into(), "moons.json".into()],
            vec![
                "report.csv",
                "summary.csv",
                "grid.csv",
                "rays.csv",
                "grid.pgm",
            ],
        ),
        (
            vec!["experiment".into(), "tabular".into(), "tabular.json".into()],
            vec!["report.csv", "summary.csv"],
        ),
        (
            vec![
                "experiment".into(),
                "black-image".into(),
                "black.json".into(),
            ],
            vec!["report.csv", "summary.csv"],
        ),
        (
            vec![
                "experiment".into(),
                "contamination".into(),
                "contamination.json".into(),
            ],
            vec!["report.csv", "summary.csv"],
        ),
        (
            vec![
                "score".into(),
                "run0/model.lipadnet".into(),
                "run0/train.csv".into(),
            ],
            vec![],
        ),
        (
            vec!["oracle".into(), "w1".into(), "p.csv".into(), "q.csv".into()],
            vec![],
        ),
        (
            vec![
                "oracle".into(),
                "duality".into(),
                "p.csv".into(),
                "q.csv".into(),
            ],
            vec![],
        ),
        (
            vec![
                "oracle".into(),
                "prop2".into(),
                "p.csv".into(),
                "q.csv".into(),
                "--gamma".into(),
                "0.1".into(),
            ],
            vec![],
        ),
        (
            vec![
                "oracle".into(),
                "stability".into(),
                "p.csv".into(),
                "q.csv".into(),
                "h.csv".into(),
            ],
            vec![],
        ),
    ];
    let mut identical = 0;
    let mut differing = Vec::new();
    for (args, outputs) in &commands {
        let mut runs = Vec::new();
        for run in 0..2 {
            let mut full = args.clone();
            if !outputs.is_empty() {
                full.extend(["--out_dir".to_string(), format!("run{run}")]);
            }
            let out = Command::new(env!("CARGO_BIN_EXE_lipad"))
                .current_dir(root)
                .args(&full)
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!(
                    "`lipad {}` failed: {}",
                    full.join(" "),
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
            let mut bytes = vec![out.stdout];
            for f in outputs {
                bytes.push(
                    fs::read(root.join(format!("run{run}")).join(f))
                        .map_err(|e| format!("{f}: {e}"))?,
                );
            }
            runs.push(bytes);
        }
        if runs[0] == runs[1] {
            identical += 1;
        } else {
            differing.push(args[..2].join(" "));
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{identical}/{} commands byte-identical on re-run{}",
            commands.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!("; differing: {}", differing.join(", "))
            }
        ),
    )
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
}

fn report(c: &Criterion, elapsed: Duration, outcome: Verdict) -> bool {
    let within = c.limit.is_none_or(|l| elapsed < l);
    let limit = c
        .limit
        .map(|l| format!(" / limit {} s", l.as_secs()))
        .unwrap_or_default();
    let (ok, detail) = match outcome {
        Ok(d) => (within, d),
        Err(d) => (false, d),
    };
    let timing = if within {
        String::new()
    } else {
        " [over time limit]".to_string()
    };
    println!(
        "[{}] {:>2} {}: {detail} ({:.1} s{limit}){timing}",
        if ok { "PASS" } else { "FAIL" },
        c.id,
        c.name,
        elapsed.as_secs_f64()
    );
    ok
}

fn run(c: &Criterion, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    report(c, start.elapsed(), outcome)
}

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let selected = |id: u32| wanted.is_empty() || wanted.contains(&id);
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria = [
        Criterion {
            id: 1,
            name: "autodiff gradients",
            limit: secs(30),
        },
        Criterion {
            id: 2,
            name: "parameter counts",
            limit: None,
        },
        Criterion {
            id: 3,
            name: "oracle soundness",
            limit: secs(60),
        },
        Criterion {
            id: 4,
            name: "duality reproduction",
            limit: secs(180),
        },
        Criterion {
            id: 5,
            name: "two-moons far-point property",
            limit: secs(300),
        },
        Criterion {
            id: 6,
            name: "contamination bound and stability",
            limit: secs(120),
        },
        Criterion {
            id: 7,
            name: "black-image rank",
            limit: secs(900),
        },
        Criterion {
            id: 8,
            name: "contamination robustness",
            limit: secs(2700),
        },
        Criterion {
            id: 9,
            name: "tabular sweep",
            limit: secs(600),
        },
        Criterion {
            id: 10,
            name: "ranking metrics",
            limit: secs(10),
        },
        Criterion {
            id: 11,
            name: "CLI determinism",
            limit: None,
        },
    ];
    // trained image models are shared between criteria 7 and 8
    let cache = ModelCache::new();
    let mut mnist: Option<Result<Mnist, String>> = None;
    let mut failed = Vec::new();
    for c in &criteria {
        if !selected(c.id) {
            continue;
        }
        let ok = match c.id {
            1 => run(c, c1_autodiff),
            2 => run(c, c2_param_counts),
            3 => run(c, c3_oracle),
            4 => run(c, c4_duality),
            5 => run(c, c5_moons),
            6 => run(c, c6_prop2),
            7 | 8 => {
                // loading the data is not part of either criterion's runtime
                let data = mnist.get_or_insert_with(load_mnist).as_ref();
                run(c, || {
                    let data = data.map_err(Clone::clone)?;
                    if c.id == 7 {
                        c7_black_image(data, &cache)
                    } else {
                        c8_contamination(data, &cache)
                    }
                })
            }
            9 => run(c, c9_tabular),
            10 => run(c, c10_metrics),
            _ => run(c, c11_determinism),
        };
        if !ok {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
