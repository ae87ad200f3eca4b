//! Image experiments: the black-image rank and the contamination sweep.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cached, default_seeds, rank_fraction, roc_auc, ExperimentReport, Method, ModelCache,
    ScoredDataset,
};
use crate::baselines::ae_train;
use crate::baselines::{ae_default_config, ae_score, knn_sum_scores, AeModel, KnnIndex, LofModel};
use crate::corruption::CorruptionProcess;
use crate::datasets::{black_image, contaminate, LabeledData, Mnist, MNIST_SIDE};
use crate::models::AutoencoderSpec;
use crate::rng::derive_seed;
use crate::trainer::{critic_values, train, TrainConfig};
use crate::{Error, Result, Tensor};

fn default_digits() -> Vec<u8> {
    vec![0, 1, 8]
}

fn default_mnist_dir() -> PathBuf {
    PathBuf::from("data/mnist")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlackImageConfig {
    pub mnist_dir: PathBuf,
    pub digits: Vec<u8>,
    pub seeds: Vec<u64>,
    pub lad: TrainConfig,
    pub patch: usize,
    pub ae: AutoencoderSpec,
    pub ae_train: TrainConfig,
    /// Number of nominal test images the black image is ranked against.
    pub reference_size: usize,
}

impl Default for BlackImageConfig {
    fn default() -> Self {
        Self {
            mnist_dir: default_mnist_dir(),
            digits: default_digits(),
            seeds: default_seeds(),
            lad: TrainConfig::default(),
            patch: 4,
            ae: AutoencoderSpec::mnist(),
            ae_train: ae_default_config(),
            reference_size: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContaminationConfig {
    pub mnist_dir: PathBuf,
    pub digits: Vec<u8>,
    pub gammas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub lad: TrainConfig,
    pub patch: usize,
    pub ae: AutoencoderSpec,
    pub ae_train: TrainConfig,
    pub dcae_sigma: f64,
    pub lof_k: usize,
    pub knn_k: usize,
}

impl Default for ContaminationConfig {
    fn default() -> Self {
        Self {
            mnist_dir: default_mnist_dir(),
            digits: default_digits(),
            gammas: vec![0.0, 0.02, 0.05, 0.10],
            seeds: default_seeds(),
            methods: vec![
                Method::Lad,
                Method::Ae,
                Method::Dcae,
                Method::Lof,
                Method::Knn,
            ],
            lad: TrainConfig::default(),
            patch: 4,
            ae: AutoencoderSpec::mnist(),
            ae_train: ae_default_config(),
            dcae_sigma: 0.1,
            lof_k: 20,
            knn_k: 5,
        }
    }
}

/// Everything that fixes one image model: the method, its settings, the
/// digit, the training-set identity and the seed.
fn model_key(method: Method, settings: &impl Serialize, digit: u8, train_id: &str) -> String {
    format!(
        "mnist|{}|{}|digit={digit}|{train_id}",
        method.name(),
        serde_json::to_string(settings).expect("settings serialise")
    )
}

fn check_digits(digits: &[u8]) -> Result<()> {
    match digits.iter().find(|&&d| d > 9) {
        Some(d) => Err(Error::Config(format!("digit {d} is not in 0..=9"))),
        None if digits.is_empty() => Err(Error::Config("no digits selected".into())),
        None => Ok(()),
    }
}

struct ImageModels<'a> {
    lad: &'a TrainConfig,
    patch: usize,
    ae: &'a AutoencoderSpec,
    ae_train: &'a TrainConfig,
    cache: Option<&'a ModelCache>,
}

impl ImageModels<'_> {
    fn lad_scores(
        &self,
        train_set: &Tensor,
        digit: u8,
        seed: u64,
        train_id: &str,
        x: &Tensor,
    ) -> Result<Vec<f64>> {
        let cfg = TrainConfig {
            seed: derive_seed(seed, &[u64::from(digit), Method::Lad.seed_lane()]),
            ..self.lad.clone()
        };
        let corruption = CorruptionProcess::PatchShuffle {
            patch: self.patch,
            side: MNIST_SIDE,
        };
        let params = cached(
            self.cache,
            || model_key(Method::Lad, &(&cfg, &corruption), digit, train_id),
            || Ok(train(train_set, &corruption, &cfg)?.0.params),
        )?;
        Ok(critic_values(&params, x)?.into_iter().map(|v| -v).collect())
    }

    fn ae_scores(
        &self,
        method: Method,
        sigma: f64,
        train_set: &Tensor,
        digit: u8,
        seed: u64,
        train_id: &str,
        x: &Tensor,
    ) -> Result<Vec<f64>> {
        let cfg = TrainConfig {
            seed: derive_seed(seed, &[u64::from(digit), method.seed_lane()]),
            ..self.ae_train.clone()
        };
        let params = cached(
            self.cache,
            || model_key(method, &(&cfg, self.ae, sigma.to_bits()), digit, train_id),
            || Ok(ae_train(train_set, self.ae, sigma, &cfg)?.params),
        )?;
        ae_score(
            &AeModel {
                params,
                denoising_sigma: sigma,
            },
            x,
        )
    }
}

/// Ranks the all-black image among nominal test images of each digit under
/// the critic and a plain autoencoder trained on that digit alone.
pub fn run_black_image_experiment(
    config: &BlackImageConfig,
    data: &Mnist,
    cache: Option<&ModelCache>,
) -> Result<ExperimentReport> {
    check_digits(&config.digits)?;
    if config.reference_size == 0 {
        return Err(Error::Config("reference size must be positive".into()));
    }
    let models = ImageModels {
        lad: &config.lad,
        patch: config.patch,
        ae: &config.ae,
        ae_train: &config.ae_train,
        cache,
    };
    let cells: Vec<(u8, u64)> = config
        .digits
        .iter()
        .flat_map(|&d| config.seeds.iter().map(move |&s| (d, s)))
        .collect();
    let results: Vec<Vec<(Method, f64)>> = cells
        .par_iter()
        .map(|&(digit, seed)| {
            let train_set = data
                .train
                .points
                .select_rows(&data.train.rows_of_class(digit, true));
            let mut reference = data.test.rows_of_class(digit, true);
            reference.truncate(config.reference_size);
            let probe =
                Tensor::vstack(&[&black_image(), &data.test.points.select_rows(&reference)])?;
            let rank = |s: Vec<f64>| rank_fraction(s[0], &s[1..]);
            Ok(vec![
                (
                    Method::Lad,
                    rank(models.lad_scores(&train_set, digit, seed, "clean", &probe)?)?,
                ),
                (
                    Method::Ae,
                    rank(models.ae_scores(
                        Method::Ae,
                        0.0,
                        &train_set,
                        digit,
                        seed,
                        "clean",
                        &probe,
                    )?)?,
                ),
            ])
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new("black-image");
    for (&(digit, seed), res) in cells.iter().zip(results) {
        for (m, v) in res {
            report.push(m.name(), Some(digit), 0.0, seed, v);
        }
    }
    Ok(report)
}

/// Trains every method on digit-`d` training images contaminated with a
/// `γ` share of other digits and reports AUC on the full test set.
pub fn run_contamination_sweep(
    config: &ContaminationConfig,
    data: &Mnist,
    cache: Option<&ModelCache>,
) -> Result<ExperimentReport> {
    check_digits(&config.digits)?;
    if let Some(g) = config.gammas.iter().find(|g| !(0.0..0.5).contains(*g)) {
        return Err(Error::Config(format!("gamma {g} outside [0, 0.5)")));
    }
    let models = ImageModels {
        lad: &config.lad,
        patch: config.patch,
        ae: &config.ae,
        ae_train: &config.ae_train,
        cache,
    };
    let classes = data
        .test
        .classes
        .as_ref()
        .ok_or_else(|| Error::Data("test set has no class ids".into()))?;
    let mut cells = Vec::new();
    for &digit in &config.digits {
        for &gamma in &config.gammas {
            for &seed in &config.seeds {
                cells.push((digit, gamma, seed));
            }
        }
    }
    let results: Vec<Vec<(Method, f64)>> = cells
        .par_iter()
        .map(|&(digit, gamma, seed)| {
            let nominal = data.train.select(&data.train.rows_of_class(digit, true));
            let pool = data.train.select(&data.train.rows_of_class(digit, false));
            let cseed = derive_seed(seed, &[u64::from(digit), gamma.to_bits()]);
            let train_set: LabeledData = contaminate(&nominal, &pool, gamma, cseed)?;
            let train_id = if train_set.len() == nominal.len() {
                "clean".to_string()
            } else {
                format!("gamma={gamma:?}|cseed={cseed}")
            };
            let x = &data.test.points;
            let labels: Vec<u8> = classes.iter().map(|&c| u8::from(c != digit)).collect();
            let mut res = Vec::new();
            for &m in &config.methods {
                let scores = match m {
                    Method::Lad => {
                        models.lad_scores(&train_set.points, digit, seed, &train_id, x)?
                    }
                    Method::Ae => {
                        models.ae_scores(m, 0.0, &train_set.points, digit, seed, &train_id, x)?
                    }
                    Method::Dcae => models.ae_scores(
                        m,
                        config.dcae_sigma,
                        &train_set.points,
                        digit,
                        seed,
                        &train_id,
                        x,
                    )?,
                    Method::Lof => {
                        LofModel::fit(KnnIndex::new(train_set.points.clone()), config.lof_k)?
                            .scores(x)?
                    }
                    Method::Knn => {
                        knn_sum_scores(&KnnIndex::new(train_set.points.clone()), x, config.knn_k)?
                    }
                };
                res.push((m, roc_auc(&ScoredDataset::new(scores, labels.clone())?)?));
            }
            Ok(res)
        })
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new("contamination");
    for (&(digit, gamma, seed), res) in cells.iter().zip(results) {
        for (m, v) in res {
            report.push(m.name(), Some(digit), gamma, seed, v);
        }
    }
    Ok(report)
}
