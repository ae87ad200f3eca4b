//! Critic training with a gradient penalty.
//!
//! The critic `f` is trained to separate nominal rows from corrupted ones by
//! minimising
//!
//! ```text
//! mean_corrupt f − mean_nominal f + λ · mean_interp (‖∇ₓ f‖ − 1)²
//! ```
//!
//! so that `f` ends up high on nominal data and `−f` serves as the anomaly
//! score. The penalty is evaluated on random points of the segments between
//! nominal and corrupted rows and keeps `f` close to 1-Lipschitz.

use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Bindings, Gradients, Graph, LeafKind, NodeId};
use crate::corruption::CorruptionProcess;
use crate::models::{build_critic, critic_forward, DenseNetSpec, ParamSet, DEFAULT_SLOPE};
use crate::optim::{Adam, AdamConfig};
use crate::rng::{self, streams, Rng};
use crate::{Error, Result, Tensor};

/// Optimisation and architecture settings for one critic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub hidden_dims: Vec<usize>,
    pub activation_slope: f64,
    /// Steps between loss-trace records.
    pub trace_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            learning_rate: 1e-3,
            beta1: 0.0,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 128,
            iterations: 2_000,
            seed: 0,
            hidden_dims: vec![256, 128, 64],
            activation_slope: DEFAULT_SLOPE,
            trace_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be nonnegative", self.lambda));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate {} must be positive",
                self.learning_rate
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} {b} outside [0, 1)"));
            }
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        if self.batch_size < 2 {
            return bad(format!("batch size {} below 2", self.batch_size));
        }
        if self.trace_every == 0 {
            return bad("trace interval must be positive".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn critic_spec(&self, input_dim: usize) -> DenseNetSpec {
        let mut spec = DenseNetSpec::new(input_dim, self.hidden_dims.clone(), 1);
        spec.activation_slope = self.activation_slope;
        spec
    }
}

/// Parameters plus optimiser state of a critic.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticState {
    pub params: ParamSet,
    pub adam: Adam,
    pub step: u64,
}

impl CriticState {
    pub fn new(params: ParamSet, config: AdamConfig) -> Self {
        let adam = Adam::new(config, &params);
        Self {
            params,
            adam,
            step: 0,
        }
    }
}

/// One record of the loss trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub step: usize,
    pub loss: f64,
    /// The λ-weighted penalty part of `loss`.
    pub gp_term: f64,
    /// `mean_nominal f − mean_corrupt f` on the batch.
    pub dual_estimate: f64,
}

/// Objective value, its parts and the parameter gradients.
#[derive(Clone, Debug)]
pub struct LossEval {
    pub loss: f64,
    pub gp_term: f64,
    pub dual_estimate: f64,
    pub grads: Gradients,
}

/// Draws one interpolation weight per row, uniform on `[0, 1]`.
pub fn sample_t(rows: usize, rng: &mut Rng) -> Vec<f64> {
    (0..rows).map(|_| rng.random::<f64>()).collect()
}

/// Row `i` is `tᵢ·nominalᵢ + (1 − tᵢ)·corruptᵢ` with fresh uniform `tᵢ`.
pub fn interpolates(nominal: &Tensor, corrupt: &Tensor, rng: &mut Rng) -> Result<Tensor> {
    let t = sample_t(nominal.rows(), rng);
    interpolates_with(nominal, corrupt, &t)
}

pub fn interpolates_with(nominal: &Tensor, corrupt: &Tensor, t: &[f64]) -> Result<Tensor> {
    if !nominal.same_shape(corrupt) || t.len() != nominal.rows() {
        return Err(Error::dim(
            "interpolates",
            format!(
                "{:?} and {:?} with {} weights",
                nominal.shape(),
                corrupt.shape(),
                t.len()
            ),
        ));
    }
    let mut out = nominal.clone();
    for (i, &ti) in t.iter().enumerate() {
        for (o, b) in out.row_mut(i).iter_mut().zip(corrupt.row(i)) {
            *o = ti * *o + (1.0 - ti) * b;
        }
    }
    Ok(out)
}

/// The objective as a reusable graph. Building it once and rebinding the
/// batches each step avoids re-deriving the penalty's gradient graph.
#[derive(Clone, Debug)]
pub struct CriticObjective {
    graph: Graph,
    lambda: f64,
    loss: NodeId,
    gp: NodeId,
    mean_nominal: NodeId,
    mean_corrupt: NodeId,
}

impl CriticObjective {
    pub fn new(
        params: &ParamSet,
        nominal: &Tensor,
        corrupt: &Tensor,
        interp: &Tensor,
        lambda: f64,
    ) -> Result<Self> {
        let mut g = Graph::new();
        let xn = g.input("nominal");
        let xc = g.input("corrupt");
        let xi = g.input("interp");
        let fn_ = params.build_graph(&mut g, xn);
        let fc = params.build_graph(&mut g, xc);
        let fi = params.build_graph(&mut g, xi);
        let mean_nominal = g.mean(fn_);
        let mean_corrupt = g.mean(fc);
        g.set_output(fi);
        g.forward(&Self::bindings(params, nominal, corrupt, interp)?)?;
        let norm = g.input_grad_norm(fi, xi)?;
        let dev = g.shift(norm, -1.0);
        let sq = g.square(dev);
        let pen = g.mean(sq);
        let gp = g.scale(pen, lambda);
        let diff = g.sub(mean_corrupt, mean_nominal);
        let loss = g.add(diff, gp);
        g.set_output(loss);
        Ok(Self {
            graph: g,
            lambda,
            loss,
            gp,
            mean_nominal,
            mean_corrupt,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn bindings(
        params: &ParamSet,
        nominal: &Tensor,
        corrupt: &Tensor,
        interp: &Tensor,
    ) -> Result<Bindings> {
        let d = params.arch.input_dim();
        for (name, t) in [
            ("nominal", nominal),
            ("corrupt", corrupt),
            ("interp", interp),
        ] {
            if t.cols() != d {
                return Err(Error::dim(
                    "critic objective",
                    format!("{name} batch has {} columns, critic expects {d}", t.cols()),
                ));
            }
        }
        let mut b = Bindings::new();
        params.bind(&mut b);
        b.insert("nominal".into(), nominal.clone());
        b.insert("corrupt".into(), corrupt.clone());
        b.insert("interp".into(), interp.clone());
        Ok(b)
    }

    /// Loss and parameter gradients at the given batches and interpolates.
    pub fn evaluate(
        &mut self,
        params: &ParamSet,
        nominal: &Tensor,
        corrupt: &Tensor,
        interp: &Tensor,
    ) -> Result<LossEval> {
        let b = Self::bindings(params, nominal, corrupt, interp)?;
        let loss = self
            .graph
            .forward_owned(b)
            .map_err(|e| diagnose(e, params, None))?
            .item();
        let grads = self
            .graph
            .backward_for(self.loss, |k| k == LeafKind::Param)
            .map_err(|e| diagnose(e, params, None))?;
        let value = |id| self.graph.value(id).expect("evaluated").item();
        let eval = LossEval {
            loss,
            gp_term: value(self.gp),
            dual_estimate: value(self.mean_nominal) - value(self.mean_corrupt),
            grads,
        };
        let gmax = eval
            .grads
            .iter()
            .fold(0.0f64, |m, (_, t)| m.max(t.max_abs()));
        if !loss.is_finite() || !gmax.is_finite() {
            return Err(diagnose(
                Error::Numeric("non-finite loss".into()),
                params,
                Some(gmax),
            ));
        }
        Ok(eval)
    }
}

fn diagnose(e: Error, params: &ParamSet, max_grad: Option<f64>) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!(
            "{m} (max |param| {:.3e}, max |grad| {})",
            params.max_abs(),
            max_grad.map_or("n/a".into(), |g| format!("{g:.3e}"))
        )),
        other => other,
    }
}

/// Loss with explicitly given interpolates.
pub fn critic_loss_at(
    params: &ParamSet,
    nominal: &Tensor,
    corrupt: &Tensor,
    interp: &Tensor,
    lambda: f64,
) -> Result<LossEval> {
    CriticObjective::new(params, nominal, corrupt, interp, lambda)?
        .evaluate(params, nominal, corrupt, interp)
}

/// Loss with interpolates drawn between paired rows of the two batches.
pub fn critic_loss(
    params: &ParamSet,
    nominal: &Tensor,
    corrupt: &Tensor,
    lambda: f64,
    rng: &mut Rng,
) -> Result<LossEval> {
    if nominal.rows() == 0 || corrupt.rows() == 0 || nominal.cols() != corrupt.cols() {
        return Err(Error::dim(
            "critic loss",
            format!("{:?} vs {:?}", nominal.shape(), corrupt.shape()),
        ));
    }
    let interp = interpolates(nominal, corrupt, rng)?;
    critic_loss_at(params, nominal, corrupt, &interp, lambda)
}

/// Trains a fresh critic on `nominal` against `corruption` of independently
/// drawn rows.
pub fn train(
    nominal: &Tensor,
    corruption: &CorruptionProcess,
    config: &TrainConfig,
) -> Result<(CriticState, Vec<TracePoint>)> {
    config.validate()?;
    corruption.validate()?;
    let params = build_critic(&config.critic_spec(nominal.cols()), config.seed)?;
    let state = CriticState::new(params, config.adam());
    train_from(state, nominal, corruption, config)
}

/// Continues training an existing state for `config.iterations` steps.
pub fn train_from(
    state: CriticState,
    nominal: &Tensor,
    corruption: &CorruptionProcess,
    config: &TrainConfig,
) -> Result<(CriticState, Vec<TracePoint>)> {
    let n = nominal.rows();
    run(state, nominal, config, |rng, b| {
        let raw = nominal.select_rows(&index::sample(rng, n, b).into_vec());
        corruption.apply(&raw, rng)
    })
}

/// Trains a fresh critic on `nominal` against minibatches drawn from a fixed
/// sample of anomalies instead of a corruption of the nominal data.
pub fn train_against(
    nominal: &Tensor,
    anomalies: &Tensor,
    config: &TrainConfig,
) -> Result<(CriticState, Vec<TracePoint>)> {
    config.validate()?;
    if anomalies.cols() != nominal.cols() {
        return Err(Error::dim(
            "anomaly sample",
            format!(
                "{} columns, nominal data has {}",
                anomalies.cols(),
                nominal.cols()
            ),
        ));
    }
    let m = anomalies.rows();
    if m < config.batch_size {
        return Err(Error::Contract(format!(
            "{m} anomaly rows, batch size {}",
            config.batch_size
        )));
    }
    let params = build_critic(&config.critic_spec(nominal.cols()), config.seed)?;
    let state = CriticState::new(params, config.adam());
    run(state, nominal, config, |rng, b| {
        Ok(anomalies.select_rows(&index::sample(rng, m, b).into_vec()))
    })
}

fn run(
    mut state: CriticState,
    nominal: &Tensor,
    config: &TrainConfig,
    mut draw_corrupt: impl FnMut(&mut Rng, usize) -> Result<Tensor>,
) -> Result<(CriticState, Vec<TracePoint>)> {
    config.validate()?;
    let n = nominal.rows();
    let b = config.batch_size;
    if n < b {
        return Err(Error::Contract(format!(
            "{n} training rows, batch size {b}"
        )));
    }
    let mut rng = rng::stream(config.seed, streams::TRAIN);
    let mut objective: Option<CriticObjective> = None;
    let mut trace = Vec::new();
    for step in 1..=config.iterations {
        let xn = nominal.select_rows(&index::sample(&mut rng, n, b).into_vec());
        let xc = draw_corrupt(&mut rng, b)?;
        let xi = interpolates(&xn, &xc, &mut rng)?;
        let obj = match &mut objective {
            Some(o) => o,
            slot => slot.insert(CriticObjective::new(
                &state.params,
                &xn,
                &xc,
                &xi,
                config.lambda,
            )?),
        };
        let eval = obj
            .evaluate(&state.params, &xn, &xc, &xi)
            .map_err(|e| match e {
                Error::Numeric(m) => {
                    Error::Numeric(format!("training diverged at step {step}: {m}"))
                }
                other => other,
            })?;
        state.adam.update(&mut state.params, &eval.grads)?;
        state.step += 1;
        if step % config.trace_every == 0 {
            trace.push(TracePoint {
                step,
                loss: eval.loss,
                gp_term: eval.gp_term,
                dual_estimate: eval.dual_estimate,
            });
        }
    }
    Ok((state, trace))
}

const SCORE_CHUNK: usize = 2048;

/// Critic values `f(x)`, evaluated in chunks.
pub fn critic_values(params: &ParamSet, x: &Tensor) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.rows());
    let idx: Vec<usize> = (0..x.rows()).collect();
    for chunk in idx.chunks(SCORE_CHUNK) {
        out.extend(critic_forward(params, &x.select_rows(chunk))?.into_data());
    }
    Ok(out)
}

/// `−f(x)`: higher means more anomalous.
pub fn anomaly_score(state: &CriticState, x: &Tensor) -> Result<Tensor> {
    Ok(Tensor::column(
        critic_values(&state.params, x)?
            .into_iter()
            .map(|v| -v)
            .collect(),
    ))
}

/// `mean f(nominal) − mean f(corrupt)`, the critic's estimate of W1.
pub fn dual_estimate(params: &ParamSet, nominal: &Tensor, corrupt: &Tensor) -> Result<f64> {
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok(mean(critic_values(params, nominal)?) - mean(critic_values(params, corrupt)?))
}

/// `|f(u) − f(v)| / ‖u − v‖` for paired rows.
pub fn lipschitz_ratios(params: &ParamSet, u: &Tensor, v: &Tensor) -> Result<Vec<f64>> {
    if !u.same_shape(v) {
        return Err(Error::dim(
            "lipschitz ratios",
            format!("{:?} vs {:?}", u.shape(), v.shape()),
        ));
    }
    let fu = critic_values(params, u)?;
    let fv = critic_values(params, v)?;
    Ok((0..u.rows())
        .map(|i| {
            let d = u
                .row(i)
                .iter()
                .zip(v.row(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > 0.0 {
                (fu[i] - fv[i]).abs() / d
            } else {
                0.0
            }
        })
        .collect())
}

pub fn write_trace_csv(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut out = String::from("step,loss,gp_term,dual_estimate\n");
    for p in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.step, p.loss, p.gp_term, p.dual_estimate
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
