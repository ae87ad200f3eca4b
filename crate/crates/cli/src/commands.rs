//! Command implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lipad::corruption::CorruptionProcess;
use lipad::datasets::{
    contaminate, make_moons, parse_csv_opt, read_csv, synthetic_tabular, write_csv, LabeledData,
    Mnist,
};
use lipad::eval::{
    run_black_image_experiment, run_contamination_sweep, run_moons_experiment, run_tabular_sweep,
    BlackImageConfig, ContaminationConfig, ExperimentReport, MoonsConfig, TabularConfig,
};
use lipad::models::{Architecture, ParamSet};
use lipad::rng::derive_seed;
use lipad::trainer::{critic_values, train as train_critic, write_trace_csv, TrainConfig};
use lipad::transport::{
    check_prop2_bound, check_stability_triangle, dual_objective, dual_violation, exact_w1, w1,
    EmpiricalDist,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::load;
use crate::{CliError, ExperimentKind, OracleCheck};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DataSource {
    #[default]
    Moons,
    Tabular,
    /// Rows of `data`; a `label` column marks anomalies.
    Csv,
}

/// Config of `lipad train`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainRun {
    dataset: DataSource,
    data: Option<PathBuf>,
    n_samples: usize,
    noise: f64,
    data_seed: u64,
    /// Share of the training set replaced by labelled anomalies.
    gamma: f64,
    corruption: CorruptionProcess,
    train: TrainConfig,
    out_dir: PathBuf,
}

impl Default for TrainRun {
    fn default() -> Self {
        Self {
            dataset: DataSource::Moons,
            data: None,
            n_samples: 1000,
            noise: 0.05,
            data_seed: 0,
            gamma: 0.0,
            corruption: CorruptionProcess::Gaussian { sigma: 1.0 },
            train: TrainConfig::default(),
            out_dir: PathBuf::from("out/train"),
        }
    }
}

#[derive(Serialize)]
struct TrainSummary {
    rows: usize,
    cols: usize,
    contaminated_rows: usize,
    parameters: usize,
    /// Mean anomaly score of the final critic over the training rows.
    mean_score: f64,
    final_loss: Option<f64>,
    final_dual_estimate: Option<f64>,
}

fn training_set(run: &TrainRun) -> Result<LabeledData, CliError> {
    if !(0.0..0.5).contains(&run.gamma) {
        return Err(CliError::Config(format!(
            "gamma {} outside [0, 0.5)",
            run.gamma
        )));
    }
    let all = match run.dataset {
        DataSource::Moons => make_moons(run.n_samples, run.noise, run.data_seed)?,
        DataSource::Tabular => synthetic_tabular(run.n_samples, run.data_seed)?,
        DataSource::Csv => {
            let path = run
                .data
                .as_ref()
                .ok_or_else(|| CliError::Config("dataset `csv` needs a `data` path".into()))?;
            read_csv(path)?
        }
    };
    let nominal = all.select(&all.rows_with_label(0));
    if run.gamma == 0.0 {
        return Ok(LabeledData::nominal(nominal.points));
    }
    let pool = all.select(&all.rows_with_label(1));
    if pool.is_empty() {
        return Err(CliError::Config(format!(
            "gamma {} needs labelled anomalies in the data",
            run.gamma
        )));
    }
    Ok(contaminate(
        &nominal,
        &pool,
        run.gamma,
        derive_seed(run.data_seed, &[run.gamma.to_bits()]),
    )?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn train(path: &Path, overrides: &[(String, String)]) -> Result<(), CliError> {
    let (run, _): (TrainRun, _) = load(path, overrides, &[])?;
    run.train.validate()?;
    run.corruption.validate()?;
    let data = training_set(&run)?;
    let (state, trace) = train_critic(&data.points, &run.corruption, &run.train)?;
    let scores = critic_values(&state.params, &data.points)?;
    let summary = TrainSummary {
        rows: data.len(),
        cols: data.points.cols(),
        contaminated_rows: data.rows_with_label(1).len(),
        parameters: state.params.scalar_count(),
        mean_score: -scores.iter().sum::<f64>() / scores.len() as f64,
        final_loss: trace.last().map(|t| t.loss),
        final_dual_estimate: trace.last().map(|t| t.dual_estimate),
    };
    if !summary.mean_score.is_finite() {
        return Err(CliError::Numeric(
            "training produced non-finite scores".into(),
        ));
    }
    create_dir(&run.out_dir)?;
    state.params.save(&run.out_dir.join("model.lipadnet"))?;
    write_trace_csv(&run.out_dir.join("trace.csv"), &trace)?;
    write_csv(&run.out_dir.join("train.csv"), &data, true)?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(
        &run.out_dir.join("summary.json"),
        format!("{json}\n").as_bytes(),
    )?;
    println!("{json}");
    Ok(())
}

pub fn score(model: &Path, data: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let params = ParamSet::load(model)?;
    if !matches!(&params.arch, Architecture::Critic(s) if s.output_dim == 1) {
        return Err(CliError::Data(format!(
            "{} is not a critic model",
            model.display()
        )));
    }
    let text =
        fs::read_to_string(data).map_err(|e| CliError::Data(format!("{}: {e}", data.display())))?;
    let parsed =
        parse_csv_opt(&text).map_err(|e| CliError::Data(format!("{}: {e}", data.display())))?;
    let mut body = String::new();
    if let Some(rows) = parsed {
        body.push_str("score\n");
        for v in critic_values(&params, &rows.points)? {
            body.push_str(&format!("{:?}\n", -v));
        }
    }
    match out {
        Some(path) => write_file(path, body.as_bytes()),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Data(format!("stdout: {e}"))),
    }
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    write_file(&dir.join("report.csv"), report.to_csv().as_bytes())?;
    let summary = report.summary_csv();
    write_file(&dir.join("summary.csv"), summary.as_bytes())?;
    print!("{summary}");
    Ok(())
}

fn load_experiment<T>(
    kind: ExperimentKind,
    path: &Path,
    overrides: &[(String, String)],
) -> Result<(T, PathBuf), CliError>
where
    T: serde::de::DeserializeOwned + Serialize + Default,
{
    let (cfg, extra) = load::<T>(path, overrides, &["out_dir"])?;
    let out_dir = match extra.get("out_dir") {
        None => PathBuf::from("out").join(format!("{kind:?}").to_lowercase()),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(other) => {
            return Err(CliError::Config(format!(
                "out_dir must be a string, got {other}"
            )))
        }
    };
    create_dir(&out_dir)?;
    Ok((cfg, out_dir))
}

pub fn experiment(
    kind: ExperimentKind,
    path: &Path,
    overrides: &[(String, String)],
) -> Result<(), CliError> {
    match kind {
        ExperimentKind::Moons => {
            let (cfg, dir) = load_experiment::<MoonsConfig>(kind, path, overrides)?;
            let outcome = run_moons_experiment(&cfg)?;
            for (i, (method, seed, grid)) in outcome.grids.iter().enumerate() {
                write_file(
                    &dir.join(format!("grid_{method}_{seed}.pgm")),
                    &grid.to_pgm(),
                )?;
                write_file(
                    &dir.join(format!("grid_{method}_{seed}.csv")),
                    grid.to_csv().as_bytes(),
                )?;
                if i == 0 {
                    write_file(&dir.join("grid.pgm"), &grid.to_pgm())?;
                    write_file(&dir.join("grid.csv"), grid.to_csv().as_bytes())?;
                }
            }
            let mut rays =
                String::from("method,seed,angle_deg,pairs,violations,monotone,exceeds,min_far_score,max_train_score\n");
            for (method, seed, results) in &outcome.rays {
                for r in results {
                    rays.push_str(&format!(
                        "{method},{seed},{:?},{},{},{},{},{:?},{:?}\n",
                        r.angle_deg,
                        r.pairs,
                        r.violations,
                        r.monotone,
                        r.exceeds,
                        r.min_far_score,
                        r.max_train_score
                    ));
                }
            }
            write_file(&dir.join("rays.csv"), rays.as_bytes())?;
            write_report(&dir, &outcome.report)
        }
        ExperimentKind::BlackImage => {
            let (cfg, dir) = load_experiment::<BlackImageConfig>(kind, path, overrides)?;
            let mnist = Mnist::load_dir(&cfg.mnist_dir)?;
            write_report(&dir, &run_black_image_experiment(&cfg, &mnist, None)?)
        }
        ExperimentKind::Contamination => {
            let (cfg, dir) = load_experiment::<ContaminationConfig>(kind, path, overrides)?;
            let mnist = Mnist::load_dir(&cfg.mnist_dir)?;
            write_report(&dir, &run_contamination_sweep(&cfg, &mnist, None)?)
        }
        ExperimentKind::Tabular => {
            let (cfg, dir) = load_experiment::<TabularConfig>(kind, path, overrides)?;
            write_report(&dir, &run_tabular_sweep(&cfg)?)
        }
    }
}

fn points(path: &Path) -> Result<EmpiricalDist, CliError> {
    Ok(EmpiricalDist::uniform(read_csv(path)?.points))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn oracle(check: OracleCheck) -> Result<(), CliError> {
    match check {
        OracleCheck::W1 { p, q } => {
            println!("{:?}", w1(&points(&p)?, &points(&q)?)?);
        }
        OracleCheck::Duality { p, q } => {
            let (p, q) = (points(&p)?, points(&q)?);
            let (plan, pot) = exact_w1(&p, &q)?;
            let dual = dual_objective(&p, &q, &pot);
            let violation = dual_violation(&p, &q, &pot);
            let gap = (plan.cost - dual).abs();
            println!("primal {:?}", plan.cost);
            println!("dual {dual:?}");
            println!("gap {gap:e}");
            println!("constraint_violation {violation:e}");
            println!("{}", verdict(gap < 1e-9 && violation <= 1e-9));
        }
        OracleCheck::Prop2 {
            nominal,
            anomalies,
            gamma,
        } => {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(CliError::Config(format!("gamma {gamma} outside (0, 1)")));
            }
            let r = check_prop2_bound(&points(&nominal)?, &points(&anomalies)?, gamma)?;
            println!("gamma {:?}", r.gamma);
            println!("A {:?}", r.a);
            println!("B {:?}", r.b);
            println!("A <= B: {}", verdict(r.holds));
        }
        OracleCheck::Stability {
            nominal,
            anomalies,
            estimate,
        } => {
            let r = check_stability_triangle(
                &points(&nominal)?,
                &points(&anomalies)?,
                &points(&estimate)?,
            )?;
            println!(
                "left {:?}",
                (r.w_nominal_anomaly - r.w_nominal_estimate).abs()
            );
            println!("right {:?}", r.w_anomaly_estimate);
            println!("{}", verdict(r.holds));
        }
    }
    Ok(())
}
