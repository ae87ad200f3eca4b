//! Metrics, reports and the experiment drivers.

mod metrics;
mod mnist;
mod moons;
pub mod output;
mod tabular;

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use metrics::{mean_ci95, rank_fraction, roc_auc, threshold_from_quantile, ScoredDataset};
pub use mnist::{
    run_black_image_experiment, run_contamination_sweep, BlackImageConfig, ContaminationConfig,
};
pub use moons::{
    ray_check, run_moons_experiment, MoonsConfig, MoonsOutcome, RayCheckConfig, RayResult,
};
pub use tabular::{run_tabular_sweep, TabularConfig};

use crate::models::ParamSet;
use crate::Result;

/// Scorers an experiment can compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// The Lipschitz critic.
    Lad,
    /// Plain autoencoder reconstruction error.
    Ae,
    /// Denoising autoencoder reconstruction error.
    Dcae,
    /// Local outlier factor.
    Lof,
    /// Sum of distances to the nearest training points.
    Knn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lad => "lad",
            Method::Ae => "ae",
            Method::Dcae => "dcae",
            Method::Lof => "lof",
            Method::Knn => "knn",
        }
    }

    fn seed_lane(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measured value: an AUC or a rank, depending on the experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub digit: Option<u8>,
    pub gamma: f64,
    pub seed: u64,
    pub value: f64,
}

/// Aggregate over seeds of one `(method, digit, gamma)` setting.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub digit: Option<u8>,
    pub gamma: f64,
    pub mean: f64,
    pub ci95: f64,
    pub seeds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, method: &str, digit: Option<u8>, gamma: f64, seed: u64, value: f64) {
        self.rows.push(ReportRow {
            method: method.into(),
            digit,
            gamma,
            seed,
            value,
        });
    }

    /// Rows matching a method, digit (`None` matches any) and gamma.
    pub fn values(&self, method: &str, digit: Option<u8>, gamma: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| {
                r.method == method && r.gamma == gamma && (digit.is_none() || r.digit == digit)
            })
            .map(|r| r.value)
            .collect()
    }

    pub fn value(&self, method: &str, digit: Option<u8>, gamma: f64, seed: u64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.digit == digit && r.gamma == gamma && r.seed == seed)
            .map(|r| r.value)
    }

    /// Mean over seeds per digit, then over digits.
    pub fn mean_over_digits(&self, method: &str, gamma: f64) -> f64 {
        let summary = self.summary();
        let per_digit: Vec<f64> = summary
            .iter()
            .filter(|s| s.method == method && s.gamma == gamma)
            .map(|s| s.mean)
            .collect();
        per_digit.iter().sum::<f64>() / per_digit.len() as f64
    }

    /// Seed aggregates in order of first appearance.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(String, Option<u8>, u64)> = Vec::new();
        for r in &self.rows {
            let k = (r.method.clone(), r.digit, r.gamma.to_bits());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(method, digit, g)| {
                let gamma = f64::from_bits(g);
                let vals: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.digit == digit && r.gamma == gamma)
                    .map(|r| r.value)
                    .collect();
                let (mean, ci95) = mean_ci95(&vals);
                SummaryRow {
                    method,
                    digit,
                    gamma,
                    mean,
                    ci95,
                    seeds: vals.len(),
                }
            })
            .collect()
    }

    /// `experiment,method,digit,gamma,seed,auc_or_rank`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,method,digit,gamma,seed,auc_or_rank\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:?},{},{:?}\n",
                self.experiment,
                r.method,
                r.digit.map(|d| d.to_string()).unwrap_or_default(),
                r.gamma,
                r.seed,
                r.value
            ));
        }
        out
    }

    /// `experiment,method,digit,gamma,mean,ci95,seeds`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("experiment,method,digit,gamma,mean,ci95,seeds\n");
        for s in self.summary() {
            out.push_str(&format!(
                "{},{},{},{:?},{:?},{:?},{}\n",
                self.experiment,
                s.method,
                s.digit.map(|d| d.to_string()).unwrap_or_default(),
                s.gamma,
                s.mean,
                s.ci95,
                s.seeds
            ));
        }
        out
    }
}

/// Trained networks shared between experiment runs in one process, keyed by
/// everything that determines the training outcome.
#[derive(Debug, Default)]
pub struct ModelCache {
    models: Mutex<HashMap<String, ParamSet>>,
}

impl ModelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.models.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_train(
        &self,
        key: String,
        train: impl FnOnce() -> Result<ParamSet>,
    ) -> Result<ParamSet> {
        if let Some(p) = self.models.lock().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let p = train()?;
        self.models
            .lock()
            .expect("cache lock")
            .insert(key, p.clone());
        Ok(p)
    }
}

fn cached(
    cache: Option<&ModelCache>,
    key: impl FnOnce() -> String,
    train: impl FnOnce() -> Result<ParamSet>,
) -> Result<ParamSet> {
    match cache {
        Some(c) => c.get_or_train(key(), train),
        None => train(),
    }
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}
