//! Two-moons score fields and the far-point ray test.

use serde::{Deserialize, Serialize};

use super::output::ScoreGrid;
use super::{default_seeds, ExperimentReport, Method};
use crate::baselines::{ae_default_config, ae_score, ae_train, euclidean};
use crate::corruption::CorruptionProcess;
use crate::datasets::make_moons;
use crate::models::AutoencoderSpec;
use crate::rng::derive_seed;
use crate::trainer::{critic_values, train, TrainConfig};
use crate::{Result, Tensor};

/// Geometry of the ray test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RayCheckConfig {
    pub rays: usize,
    pub step: f64,
    /// Rays stop once this far from every training point.
    pub max_distance: f64,
    /// Monotonicity is required beyond this distance from the data.
    pub monotone_from: f64,
    /// Scores must exceed every training score beyond this distance.
    pub exceed_from: f64,
    /// Allowed share of decreasing consecutive pairs.
    pub tolerance: f64,
}

impl Default for RayCheckConfig {
    fn default() -> Self {
        Self {
            rays: 8,
            step: 0.05,
            max_distance: 10.0,
            monotone_from: 2.0,
            exceed_from: 5.0,
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoonsConfig {
    pub n_samples: usize,
    pub noise: f64,
    pub seeds: Vec<u64>,
    pub sigma: f64,
    pub lad: TrainConfig,
    pub ae: AutoencoderSpec,
    pub ae_train: TrainConfig,
    pub grid_size: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub rays: RayCheckConfig,
}

impl Default for MoonsConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            noise: 0.05,
            seeds: default_seeds(),
            sigma: 1.0,
            lad: TrainConfig::default(),
            ae: AutoencoderSpec::new(2, vec![128, 96, 64], 1),
            ae_train: ae_default_config(),
            grid_size: 200,
            x_range: (-2.0, 3.0),
            y_range: (-1.5, 2.0),
            rays: RayCheckConfig::default(),
        }
    }
}

/// Outcome of one ray.
#[derive(Clone, Debug, PartialEq)]
pub struct RayResult {
    pub angle_deg: f64,
    pub pairs: usize,
    pub violations: usize,
    pub monotone: bool,
    pub exceeds: bool,
    /// Lowest score beyond the exceed distance.
    pub min_far_score: f64,
    pub max_train_score: f64,
}

impl RayResult {
    pub fn passes(&self) -> bool {
        self.monotone && self.exceeds
    }
}

/// Walks `rays` evenly spaced rays out of the data centroid and checks that
/// the anomaly score grows once the ray has left the data.
pub fn ray_check(
    train: &Tensor,
    score: &dyn Fn(&Tensor) -> Result<Vec<f64>>,
    cfg: &RayCheckConfig,
) -> Result<Vec<RayResult>> {
    let n = train.rows() as f64;
    let d = train.cols();
    let mut centre = vec![0.0; d];
    for row in train.iter_rows() {
        for (c, v) in centre.iter_mut().zip(row) {
            *c += v / n;
        }
    }
    let max_train_score = score(train)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let nearest = |p: &[f64]| {
        train
            .iter_rows()
            .map(|t| euclidean(p, t))
            .fold(f64::INFINITY, f64::min)
    };
    let mut out = Vec::new();
    for r in 0..cfg.rays {
        let angle = 2.0 * std::f64::consts::PI * r as f64 / cfg.rays as f64;
        let dir = [angle.cos(), angle.sin()];
        let mut pts = Vec::new();
        let mut dists = Vec::new();
        for k in 0.. {
            let s = k as f64 * cfg.step;
            let p: Vec<f64> = centre
                .iter()
                .enumerate()
                .map(|(j, c)| c + s * dir.get(j).copied().unwrap_or(0.0))
                .collect();
            let dist = nearest(&p);
            pts.extend_from_slice(&p);
            dists.push(dist);
            if dist >= cfg.max_distance {
                break;
            }
        }
        let along = Tensor::matrix(dists.len(), d, pts);
        let scores = score(&along)?;
        let tail: Vec<f64> = (0..scores.len())
            .filter(|&i| dists[i] > cfg.monotone_from)
            .map(|i| scores[i])
            .collect();
        let pairs = tail.len().saturating_sub(1);
        let violations = tail.windows(2).filter(|w| w[1] < w[0]).count();
        let min_far_score = (0..scores.len())
            .filter(|&i| dists[i] > cfg.exceed_from)
            .map(|i| scores[i])
            .fold(f64::INFINITY, f64::min);
        out.push(RayResult {
            angle_deg: angle.to_degrees(),
            pairs,
            violations,
            monotone: violations as f64 <= cfg.tolerance * pairs as f64,
            exceeds: min_far_score > max_train_score,
            min_far_score,
            max_train_score,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoonsOutcome {
    /// Share of passing rays per method and seed.
    pub report: ExperimentReport,
    pub grids: Vec<(Method, u64, ScoreGrid)>,
    pub rays: Vec<(Method, u64, Vec<RayResult>)>,
    /// Mean grid score farther than 1 from the data, and within 0.1 of it.
    pub contrast: Vec<(Method, u64, f64, f64)>,
}

/// Trains the critic and an autoencoder on two moons and evaluates both on
/// a grid and along outward rays.
pub fn run_moons_experiment(config: &MoonsConfig) -> Result<MoonsOutcome> {
    let mut out = MoonsOutcome {
        report: ExperimentReport::new("moons"),
        grids: Vec::new(),
        rays: Vec::new(),
        contrast: Vec::new(),
    };
    let pts = ScoreGrid::points(
        config.grid_size,
        config.grid_size,
        config.x_range,
        config.y_range,
    );
    let grid_pts = Tensor::matrix(pts.len(), 2, pts.iter().flatten().copied().collect());
    for &seed in &config.seeds {
        let data = make_moons(config.n_samples, config.noise, seed)?.points;
        let near: Vec<f64> = grid_pts
            .iter_rows()
            .map(|p| {
                data.iter_rows()
                    .map(|t| euclidean(p, t))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();

        let lad_cfg = TrainConfig {
            seed: derive_seed(seed, &[Method::Lad.seed_lane()]),
            ..config.lad.clone()
        };
        let (state, _) = train(
            &data,
            &CorruptionProcess::Gaussian {
                sigma: config.sigma,
            },
            &lad_cfg,
        )?;
        let lad = move |x: &Tensor| -> Result<Vec<f64>> {
            Ok(critic_values(&state.params, x)?
                .into_iter()
                .map(|v| -v)
                .collect())
        };

        let ae_cfg = TrainConfig {
            seed: derive_seed(seed, &[Method::Ae.seed_lane()]),
            ..config.ae_train.clone()
        };
        let model = ae_train(&data, &config.ae, 0.0, &ae_cfg)?;
        let ae = move |x: &Tensor| ae_score(&model, x);

        let scorers: [(Method, &dyn Fn(&Tensor) -> Result<Vec<f64>>); 2] =
            [(Method::Lad, &lad), (Method::Ae, &ae)];
        for (method, f) in scorers {
            let values = f(&grid_pts)?;
            let mean_where = |keep: &dyn Fn(f64) -> bool| {
                let sel: Vec<f64> = values
                    .iter()
                    .zip(&near)
                    .filter(|(_, &d)| keep(d))
                    .map(|(v, _)| *v)
                    .collect();
                sel.iter().sum::<f64>() / sel.len() as f64
            };
            out.contrast.push((
                method,
                seed,
                mean_where(&|d| d > 1.0),
                mean_where(&|d| d < 0.1),
            ));
            out.grids.push((
                method,
                seed,
                ScoreGrid {
                    width: config.grid_size,
                    height: config.grid_size,
                    x_range: config.x_range,
                    y_range: config.y_range,
                    values,
                },
            ));
            let rays = ray_check(&data, f, &config.rays)?;
            let passing = rays.iter().filter(|r| r.passes()).count() as f64 / rays.len() as f64;
            out.report.push(method.name(), None, 0.0, seed, passing);
            out.rays.push((method, seed, rays));
        }
    }
    Ok(out)
}
