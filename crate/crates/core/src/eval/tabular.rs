//! Contamination sweep on the synthetic tabular data.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{default_seeds, roc_auc, ExperimentReport, Method, ScoredDataset};
use crate::baselines::{ae_default_config, ae_score, ae_train, knn_sum_scores, KnnIndex, LofModel};
use crate::corruption::CorruptionProcess;
use crate::datasets::{contaminate, synthetic_tabular, LabeledData, Standardizer};
use crate::models::AutoencoderSpec;
use crate::rng::{self, derive_seed, streams};
use crate::trainer::{critic_values, train, TrainConfig};
use crate::{Error, Result, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularConfig {
    pub n_samples: usize,
    pub gammas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub lad: TrainConfig,
    /// Gaussian corruption scale in standardized units.
    pub sigma: f64,
    pub ae: AutoencoderSpec,
    pub ae_train: TrainConfig,
    pub dcae_sigma: f64,
    pub lof_k: usize,
    pub knn_k: usize,
    /// Share of nominal rows used for training.
    pub train_share: f64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        Self {
            n_samples: 6000,
            gammas: vec![0.0, 0.01, 0.03, 0.05, 0.10],
            seeds: default_seeds(),
            methods: vec![Method::Lad, Method::Ae, Method::Knn, Method::Lof],
            lad: TrainConfig::default(),
            sigma: 1.0,
            ae: AutoencoderSpec::tabular(),
            ae_train: ae_default_config(),
            dcae_sigma: 0.1,
            lof_k: 20,
            knn_k: 5,
            train_share: 0.8,
        }
    }
}

/// One seed's split: nominal training rows, the anomaly pool used for
/// contamination, and a labelled test set built from held-out rows of both.
struct Split {
    nominal: LabeledData,
    pool: LabeledData,
    test: LabeledData,
}

fn split(config: &TabularConfig, seed: u64) -> Result<Split> {
    let data = synthetic_tabular(config.n_samples, seed)?;
    let mut rng = rng::stream(seed, streams::EVAL);
    let mut nominal = data.rows_with_label(0);
    let mut anomalous = data.rows_with_label(1);
    nominal.shuffle(&mut rng);
    anomalous.shuffle(&mut rng);
    let n_train = (nominal.len() as f64 * config.train_share).round() as usize;
    let half = anomalous.len() / 2;
    let test_rows: Vec<usize> = nominal[n_train..]
        .iter()
        .chain(&anomalous[half..])
        .copied()
        .collect();
    Ok(Split {
        nominal: data.select(&nominal[..n_train]),
        pool: data.select(&anomalous[..half]),
        test: data.select(&test_rows),
    })
}

/// Trains each method on contaminated, standardized training rows and
/// reports test AUC per `(gamma, method, seed)`.
pub fn run_tabular_sweep(config: &TabularConfig) -> Result<ExperimentReport> {
    if let Some(g) = config.gammas.iter().find(|g| !(0.0..0.5).contains(*g)) {
        return Err(Error::Config(format!("gamma {g} outside [0, 0.5)")));
    }
    if !(config.train_share > 0.0 && config.train_share < 1.0) {
        return Err(Error::Config(format!(
            "train share {} outside (0, 1)",
            config.train_share
        )));
    }
    let splits: Vec<Split> = config
        .seeds
        .iter()
        .map(|&s| split(config, s))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, f64)> = (0..splits.len())
        .flat_map(|i| config.gammas.iter().map(move |&g| (i, g)))
        .collect();
    let results: Vec<Vec<(Method, f64)>> = cells
        .par_iter()
        .map(|&(i, gamma)| {
            let seed = config.seeds[i];
            let sp = &splits[i];
            let mixed = contaminate(
                &sp.nominal,
                &sp.pool,
                gamma,
                derive_seed(seed, &[gamma.to_bits()]),
            )?;
            let scaler = Standardizer::fit(&mixed.points)?;
            let x_train = scaler.apply(&mixed.points);
            let x_test = scaler.apply(&sp.test.points);
            let mut res = Vec::new();
            for &m in &config.methods {
                let scores = method_scores(config, m, seed, &x_train, &x_test)?;
                res.push((
                    m,
                    roc_auc(&ScoredDataset::new(scores, sp.test.labels.clone())?)?,
                ));
            }
            Ok(res)
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new("tabular");
    for (&(i, gamma), res) in cells.iter().zip(results) {
        for (m, v) in res {
            report.push(m.name(), None, gamma, config.seeds[i], v);
        }
    }
    Ok(report)
}

fn method_scores(
    config: &TabularConfig,
    m: Method,
    seed: u64,
    x_train: &Tensor,
    x_test: &Tensor,
) -> Result<Vec<f64>> {
    let lane = derive_seed(seed, &[m.seed_lane()]);
    match m {
        Method::Lad => {
            let cfg = TrainConfig {
                seed: lane,
                ..config.lad.clone()
            };
            let (state, _) = train(
                x_train,
                &CorruptionProcess::Gaussian {
                    sigma: config.sigma,
                },
                &cfg,
            )?;
            Ok(critic_values(&state.params, x_test)?
                .into_iter()
                .map(|v| -v)
                .collect())
        }
        Method::Ae | Method::Dcae => {
            let cfg = TrainConfig {
                seed: lane,
                ..config.ae_train.clone()
            };
            let sigma = if m == Method::Dcae {
                config.dcae_sigma
            } else {
                0.0
            };
            ae_score(&ae_train(x_train, &config.ae, sigma, &cfg)?, x_test)
        }
        Method::Lof => LofModel::fit(KnnIndex::new(x_train.clone()), config.lof_k)?.scores(x_test),
        Method::Knn => knn_sum_scores(&KnnIndex::new(x_train.clone()), x_test, config.knn_k),
    }
}
