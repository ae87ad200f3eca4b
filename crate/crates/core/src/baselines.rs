//! Reference scorers: k-nearest-neighbour distance sums, the local outlier
//! factor and autoencoder reconstruction error.

use rand::seq::index;
use rayon::prelude::*;

use crate::autodiff::{Bindings, Graph, LeafKind, NodeId};
use crate::corruption::gaussian_corrupt;
use crate::models::{build_autoencoder, AutoencoderSpec, ParamSet};
use crate::optim::Adam;
use crate::rng::{self, streams};
use crate::trainer::TrainConfig;
use crate::{Error, Result, Tensor};

/// Floor on the mean reachability distance so duplicate points keep a finite
/// local density.
pub const LRD_FLOOR: f64 = 1e-12;

/// Euclidean distance with four interleaved partial sums.
///
/// Every distance in this module goes through this function, so results are
/// reproducible bit for bit.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += (x - y) * (x - y);
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail).sqrt()
}

/// Exact brute-force neighbour search over a fixed point set.
#[derive(Clone, Debug)]
pub struct KnnIndex {
    points: Tensor,
}

/// A neighbour: index into the point set and its distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl KnnIndex {
    pub fn new(points: Tensor) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &Tensor {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `k` nearest points to `x`, closest first; equal distances go to
    /// the lower index. `exclude` drops one index, for queries that are
    /// themselves members of the set.
    pub fn neighbors(&self, x: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<Neighbor>> {
        let available = self.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        if k == 0 || k > available {
            return Err(Error::Contract(format!(
                "k = {k} with {available} candidate points"
            )));
        }
        if x.len() != self.points.cols() {
            return Err(Error::dim(
                "knn query",
                format!(
                    "point of width {}, index width {}",
                    x.len(),
                    self.points.cols()
                ),
            ));
        }
        let mut all: Vec<Neighbor> = self
            .points
            .iter_rows()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(index, p)| Neighbor {
                index,
                distance: euclidean(x, p),
            })
            .collect();
        let order = |a: &Neighbor, b: &Neighbor| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.index.cmp(&b.index))
        };
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, order);
            all.truncate(k);
        }
        all.sort_unstable_by(order);
        Ok(all)
    }
}

/// Sum of distances from `x` to its `k` nearest points.
pub fn knn_sum_score(index: &KnnIndex, x: &[f64], k: usize, exclude: Option<usize>) -> Result<f64> {
    Ok(index
        .neighbors(x, k, exclude)?
        .iter()
        .map(|n| n.distance)
        .sum())
}

/// kNN-sum scores for every row of `x`, none of which is treated as a member.
pub fn knn_sum_scores(index: &KnnIndex, x: &Tensor, k: usize) -> Result<Vec<f64>> {
    (0..x.rows())
        .into_par_iter()
        .map(|i| knn_sum_score(index, x.row(i), k, None))
        .collect()
}

/// Neighbourhoods and local reachability densities of the reference set.
#[derive(Clone, Debug)]
pub struct LofModel {
    index: KnnIndex,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

impl LofModel {
    pub fn fit(index: KnnIndex, k: usize) -> Result<Self> {
        let n = index.len();
        if k == 0 || k >= n {
            return Err(Error::Contract(format!(
                "LOF needs 1 ≤ k < N, got k = {k}, N = {n}"
            )));
        }
        let hoods: Vec<Vec<Neighbor>> = (0..n)
            .into_par_iter()
            .map(|i| index.neighbors(index.points().row(i), k, Some(i)))
            .collect::<Result<_>>()?;
        let k_distance: Vec<f64> = hoods.iter().map(|h| h[k - 1].distance).collect();
        let lrd = hoods.iter().map(|h| density(h, &k_distance)).collect();
        Ok(Self {
            index,
            k,
            k_distance,
            lrd,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k_distances(&self) -> &[f64] {
        &self.k_distance
    }

    pub fn densities(&self) -> &[f64] {
        &self.lrd
    }

    /// LOF of `x`; pass `member = Some(i)` when `x` is point `i` of the set.
    pub fn score(&self, x: &[f64], member: Option<usize>) -> Result<f64> {
        let hood = self.index.neighbors(x, self.k, member)?;
        let own = density(&hood, &self.k_distance);
        let mean_neighbor = hood.iter().map(|n| self.lrd[n.index]).sum::<f64>() / self.k as f64;
        Ok(mean_neighbor / own)
    }

    pub fn scores(&self, x: &Tensor) -> Result<Vec<f64>> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.score(x.row(i), None))
            .collect()
    }
}

/// `1 / max(mean reach-distance, floor)` with reach-distance
/// `max(k-distance(o), d(x, o))`.
fn density(hood: &[Neighbor], k_distance: &[f64]) -> f64 {
    let mean = hood
        .iter()
        .map(|n| k_distance[n.index].max(n.distance))
        .sum::<f64>()
        / hood.len() as f64;
    1.0 / mean.max(LRD_FLOOR)
}

/// Local outlier factor of `x` against the index.
pub fn lof_score(index: &KnnIndex, x: &[f64], k: usize, member: Option<usize>) -> Result<f64> {
    LofModel::fit(index.clone(), k)?.score(x, member)
}

/// A trained autoencoder; `denoising_sigma > 0` marks a denoising one.
#[derive(Clone, Debug, PartialEq)]
pub struct AeModel {
    pub params: ParamSet,
    pub denoising_sigma: f64,
}

/// Autoencoder defaults: the critic's schedule with the usual `β1 = 0.9`.
pub fn ae_default_config() -> TrainConfig {
    TrainConfig {
        beta1: 0.9,
        ..TrainConfig::default()
    }
}

struct ReconstructionLoss {
    graph: Graph,
    loss: NodeId,
}

impl ReconstructionLoss {
    fn new(params: &ParamSet) -> Self {
        let mut g = Graph::new();
        let x = g.input("x");
        let target = g.input("target");
        let recon = params.build_graph(&mut g, x);
        let diff = g.sub(recon, target);
        let sq = g.square(diff);
        let loss = g.mean(sq);
        g.set_output(loss);
        Self { graph: g, loss }
    }
}

/// Minimises mean squared reconstruction error with Adam. Noise, when
/// requested, is added to the inputs only.
pub fn ae_train(
    data: &Tensor,
    spec: &AutoencoderSpec,
    denoising_sigma: f64,
    config: &TrainConfig,
) -> Result<AeModel> {
    config.validate()?;
    if !(denoising_sigma >= 0.0) {
        return Err(Error::Config(format!(
            "denoising sigma {denoising_sigma} is negative"
        )));
    }
    if spec.input_dim != data.cols() {
        return Err(Error::dim(
            "autoencoder training",
            format!("spec width {}, data width {}", spec.input_dim, data.cols()),
        ));
    }
    let n = data.rows();
    let b = config.batch_size;
    if n < b {
        return Err(Error::Contract(format!(
            "{n} training rows, batch size {b}"
        )));
    }
    let mut params = build_autoencoder(spec, config.seed)?;
    let mut adam = Adam::new(config.adam(), &params);
    let mut rng = rng::stream(config.seed, streams::TRAIN);
    let mut objective = ReconstructionLoss::new(&params);
    for step in 1..=config.iterations {
        let target = data.select_rows(&index::sample(&mut rng, n, b).into_vec());
        let input = gaussian_corrupt(&target, denoising_sigma, &mut rng)?;
        let mut bindings = Bindings::new();
        params.bind(&mut bindings);
        bindings.insert("x".into(), input);
        bindings.insert("target".into(), target);
        let diverged = |e: Error| match e {
            Error::Numeric(m) => Error::Numeric(format!(
                "autoencoder diverged at step {step}: {m} (max |param| {:.3e})",
                params.max_abs()
            )),
            other => other,
        };
        objective.graph.forward_owned(bindings).map_err(diverged)?;
        let grads = objective
            .graph
            .backward_for(objective.loss, |k| k == LeafKind::Param)
            .map_err(diverged)?;
        adam.update(&mut params, &grads)?;
    }
    Ok(AeModel {
        params,
        denoising_sigma,
    })
}

/// Per-row mean squared reconstruction error.
pub fn ae_score(model: &AeModel, x: &Tensor) -> Result<Vec<f64>> {
    let d = model.params.arch.input_dim();
    if x.cols() != d {
        return Err(Error::dim(
            "autoencoder score",
            format!("expected {d} columns, got {}", x.cols()),
        ));
    }
    let idx: Vec<usize> = (0..x.rows()).collect();
    let mut out = Vec::with_capacity(x.rows());
    for chunk in idx.chunks(2048) {
        let batch = x.select_rows(chunk);
        let recon = model.params.forward(&batch)?;
        for (r, t) in recon.iter_rows().zip(batch.iter_rows()) {
            out.push(r.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / d as f64);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{bias_name, weight_name, Architecture};

    fn line(values: &[f64]) -> KnnIndex {
        KnnIndex::new(Tensor::column(values.to_vec()))
    }

    #[test]
    fn knn_sum_small_cases() {
        let idx = line(&[0.0, 1.0, 3.0]);
        assert_eq!(knn_sum_score(&idx, &[2.0], 2, None).unwrap(), 2.0);
        assert_eq!(knn_sum_score(&idx, &[1.0], 1, None).unwrap(), 0.0);
        assert_eq!(knn_sum_score(&idx, &[1.0], 1, Some(1)).unwrap(), 1.0);
        assert_eq!(
            knn_sum_score(&idx, &[-1.0], 3, None).unwrap(),
            1.0 + 2.0 + 4.0
        );
        assert!(knn_sum_score(&idx, &[0.0], 4, None).is_err());
        assert!(knn_sum_score(&idx, &[0.0], 3, Some(0)).is_err());
    }

    #[test]
    fn ties_go_to_the_lower_index() {
        let idx = line(&[1.0, -1.0, 1.0, -1.0]);
        let n = idx.neighbors(&[0.0], 3, None).unwrap();
        assert_eq!(n.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn euclidean_matches_plain_sum_on_small_inputs() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((euclidean(&a, &b) - 91f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lof_on_identical_points_is_one() {
        let idx = KnnIndex::new(Tensor::filled(10, 2, 3.0));
        let m = LofModel::fit(idx, 3).unwrap();
        assert_eq!(m.score(&[3.0, 3.0], Some(0)).unwrap(), 1.0);
        assert_eq!(m.score(&[3.0, 3.0], None).unwrap(), 1.0);
    }

    #[test]
    fn lof_requires_k_below_n() {
        assert!(LofModel::fit(line(&[0.0, 1.0]), 2).is_err());
    }

    fn identity_ae(d: usize) -> AeModel {
        let spec = AutoencoderSpec::new(d, vec![], d);
        let eye = |d: usize| {
            let mut t = Tensor::zeros(d, d);
            for i in 0..d {
                t.data_mut()[i * d + i] = 1.0;
            }
            t
        };
        let tensors = vec![
            (weight_name(0), eye(d)),
            (bias_name(0), Tensor::zeros(1, d)),
            (weight_name(1), eye(d)),
            (bias_name(1), Tensor::zeros(1, d)),
        ];
        AeModel {
            params: ParamSet::from_tensors(Architecture::Autoencoder(spec), 0, tensors).unwrap(),
            denoising_sigma: 0.0,
        }
    }

    #[test]
    fn identity_autoencoder_scores_zero() {
        let m = identity_ae(3);
        let x = Tensor::matrix(2, 3, vec![1.0, -2.0, 0.5, 7.0, 0.0, -3.0]);
        assert_eq!(ae_score(&m, &x).unwrap(), vec![0.0, 0.0]);
        assert!(ae_score(&m, &Tensor::zeros(1, 4)).is_err());
    }

    #[test]
    fn constant_data_is_reconstructed() {
        let x = Tensor::filled(64, 1, 0.7);
        let spec = AutoencoderSpec::new(1, vec![8], 1);
        let config = TrainConfig {
            iterations: 1500,
            batch_size: 16,
            ..ae_default_config()
        };
        let m = ae_train(&x, &spec, 0.0, &config).unwrap();
        let s = ae_score(&m, &x).unwrap();
        assert!(s.iter().all(|&v| (0.0..1e-3).contains(&v)), "{:?}", &s[..3]);
        let again = ae_train(&x, &spec, 0.0, &config).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn scores_are_permutation_equivariant() {
        let spec = AutoencoderSpec::new(3, vec![4], 2);
        let m = AeModel {
            params: build_autoencoder(&spec, 2).unwrap(),
            denoising_sigma: 0.0,
        };
        let x = Tensor::matrix(3, 3, (0..9).map(|i| f64::from(i) * 0.3 - 1.0).collect());
        let s = ae_score(&m, &x).unwrap();
        let p = ae_score(&m, &x.select_rows(&[2, 0, 1])).unwrap();
        assert_eq!(p, vec![s[2], s[0], s[1]]);
    }
}
