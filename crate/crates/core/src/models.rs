//! Dense network architectures, their parameters, and the model file format.
//!
//! Weights are stored `fan_in × fan_out` so a layer computes `X·W + b` on a
//! batch `X` of row vectors. Hidden layers use a leaky ReLU; the critic's
//! output layer, the autoencoder bottleneck and the reconstruction layer are
//! linear.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Bindings, Graph, NodeId};
use crate::rng::{self, streams};
use crate::{Error, Result, Tensor};

pub const DEFAULT_SLOPE: f64 = 0.2;

fn default_slope() -> f64 {
    DEFAULT_SLOPE
}

fn default_true() -> bool {
    true
}

/// A fully connected scalar critic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseNetSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    #[serde(default = "one")]
    pub output_dim: usize,
    #[serde(default = "default_slope")]
    pub activation_slope: f64,
    #[serde(default = "default_true")]
    pub use_bias: bool,
}

fn one() -> usize {
    1
}

impl DenseNetSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims,
            output_dim,
            activation_slope: DEFAULT_SLOPE,
            use_bias: true,
        }
    }

    /// The 10-input critic used for tabular data.
    pub fn tabular_critic() -> Self {
        Self::new(10, vec![256, 128, 64], 1)
    }

    /// The dense stand-in for the image critic.
    pub fn mnist_critic() -> Self {
        Self::new(784, vec![256, 128, 64], 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::Config(format!(
                "layer widths must be positive: {self:?}"
            )));
        }
        check_slope(self.activation_slope)
    }

    pub fn layers(&self) -> Vec<Layer> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.output_dim);
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| Layer {
                fan_in: w[0],
                fan_out: w[1],
                bias: self.use_bias,
                activation: i != last,
            })
            .collect()
    }
}

fn check_slope(slope: f64) -> Result<()> {
    if slope > 0.0 && slope < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "activation slope {slope} outside (0, 1)"
        )))
    }
}

/// A dense autoencoder; the decoder mirrors the encoder unless given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderSpec {
    pub input_dim: usize,
    pub encoder_dims: Vec<usize>,
    pub bottleneck_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder_dims: Option<Vec<usize>>,
    #[serde(default = "default_slope")]
    pub activation_slope: f64,
}

impl AutoencoderSpec {
    pub fn new(input_dim: usize, encoder_dims: Vec<usize>, bottleneck_dim: usize) -> Self {
        Self {
            input_dim,
            encoder_dims,
            bottleneck_dim,
            decoder_dims: None,
            activation_slope: DEFAULT_SLOPE,
        }
    }

    pub fn tabular() -> Self {
        Self::new(10, vec![128, 96, 64], 10)
    }

    pub fn mnist() -> Self {
        Self::new(784, vec![256, 128, 64], 32)
    }

    pub fn decoder(&self) -> Vec<usize> {
        match &self.decoder_dims {
            Some(d) => d.clone(),
            None => self.encoder_dims.iter().rev().copied().collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.bottleneck_dim == 0
            || self.encoder_dims.contains(&0)
            || self.decoder().contains(&0)
        {
            return Err(Error::Config(format!(
                "layer widths must be positive: {self:?}"
            )));
        }
        // A bottleneck as wide as the input is allowed: the reference tabular
        // autoencoder uses a 10-wide code for 10 features.
        if self.bottleneck_dim > self.input_dim {
            return Err(Error::Config(format!(
                "bottleneck {} wider than input {}",
                self.bottleneck_dim, self.input_dim
            )));
        }
        check_slope(self.activation_slope)
    }

    pub fn layers(&self) -> Vec<Layer> {
        let mut layers = Vec::new();
        let mut prev = self.input_dim;
        let mut push = |to: usize, activation: bool| {
            layers.push(Layer {
                fan_in: prev,
                fan_out: to,
                bias: true,
                activation,
            });
            prev = to;
        };
        for &h in &self.encoder_dims {
            push(h, true);
        }
        push(self.bottleneck_dim, false);
        for h in self.decoder() {
            push(h, true);
        }
        push(self.input_dim, false);
        layers
    }
}

/// One dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub bias: bool,
    /// Whether a leaky ReLU follows the affine map.
    pub activation: bool,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        self.fan_in * self.fan_out + if self.bias { self.fan_out } else { 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    Critic(DenseNetSpec),
    Autoencoder(AutoencoderSpec),
}

impl Architecture {
    pub fn layers(&self) -> Vec<Layer> {
        match self {
            Architecture::Critic(s) => s.layers(),
            Architecture::Autoencoder(s) => s.layers(),
        }
    }

    pub fn slope(&self) -> f64 {
        match self {
            Architecture::Critic(s) => s.activation_slope,
            Architecture::Autoencoder(s) => s.activation_slope,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers()[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers().last().expect("at least one layer").fan_out
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(Layer::param_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Architecture::Critic(s) => s.validate(),
            Architecture::Autoencoder(s) => s.validate(),
        }
    }
}

pub fn param_count(spec: &DenseNetSpec) -> usize {
    spec.layers().iter().map(Layer::param_count).sum()
}

pub fn autoencoder_param_count(spec: &AutoencoderSpec) -> usize {
    spec.layers().iter().map(Layer::param_count).sum()
}

pub fn weight_name(layer: usize) -> String {
    format!("weight_{layer}")
}

pub fn bias_name(layer: usize) -> String {
    format!("bias_{layer}")
}

/// Named parameter tensors of one network, in declaration order
/// (`weight_0, bias_0, weight_1, …`).
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub arch: Architecture,
    pub seed: u64,
    tensors: Vec<(String, Tensor)>,
}

impl ParamSet {
    /// Uniform Glorot initialisation for weights, zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng::stream(seed, streams::INIT);
        let mut tensors = Vec::new();
        for (i, layer) in arch.layers().iter().enumerate() {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            let w = (0..layer.fan_in * layer.fan_out)
                .map(|_| rng.random_range(-limit..=limit))
                .collect();
            tensors.push((
                weight_name(i),
                Tensor::matrix(layer.fan_in, layer.fan_out, w),
            ));
            if layer.bias {
                tensors.push((bias_name(i), Tensor::zeros(1, layer.fan_out)));
            }
        }
        Ok(Self {
            arch,
            seed,
            tensors,
        })
    }

    /// Wraps explicit tensors; shapes must match the architecture.
    pub fn from_tensors(
        arch: Architecture,
        seed: u64,
        tensors: Vec<(String, Tensor)>,
    ) -> Result<Self> {
        arch.validate()?;
        let expected = Self::expected_shapes(&arch);
        if expected.len() != tensors.len() {
            return Err(Error::Data(format!(
                "architecture needs {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, shape), (got_name, t)) in expected.iter().zip(&tensors) {
            if name != got_name || t.shape() != shape.as_slice() {
                return Err(Error::Data(format!(
                    "expected {name} {shape:?}, got {got_name} {:?}",
                    t.shape()
                )));
            }
        }
        Ok(Self {
            arch,
            seed,
            tensors,
        })
    }

    fn expected_shapes(arch: &Architecture) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (i, l) in arch.layers().iter().enumerate() {
            out.push((weight_name(i), vec![l.fan_in, l.fan_out]));
            if l.bias {
                out.push((bias_name(i), vec![1, l.fan_out]));
            }
        }
        out
    }

    pub fn tensors(&self) -> &[(String, Tensor)] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .fold(0.0, |m, (_, t)| m.max(t.max_abs()))
    }

    /// Adds every tensor to `bindings` under its parameter name.
    pub fn bind(&self, bindings: &mut Bindings) {
        for (n, t) in &self.tensors {
            bindings.insert(n.clone(), t.clone());
        }
    }

    /// Declares the parameter leaves and the layer stack applied to `input`;
    /// returns the output node.
    pub fn build_graph(&self, graph: &mut Graph, input: NodeId) -> NodeId {
        let slope = self.arch.slope();
        let mut h = input;
        for (i, layer) in self.arch.layers().iter().enumerate() {
            let w = graph
                .leaf(&weight_name(i))
                .unwrap_or_else(|| graph.param(&weight_name(i)));
            h = graph.matmul(h, w);
            if layer.bias {
                let b = graph
                    .leaf(&bias_name(i))
                    .unwrap_or_else(|| graph.param(&bias_name(i)));
                h = graph.add_bias(h, b);
            }
            if layer.activation {
                h = graph.leaky_relu(h, slope);
            }
        }
        h
    }

    /// Runs the network on a batch of rows.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let d = self.arch.input_dim();
        if batch.cols() != d {
            return Err(Error::dim(
                "network input",
                format!("expected {d} columns, got {}", batch.cols()),
            ));
        }
        let mut g = Graph::new();
        let x = g.input("x");
        let out = self.build_graph(&mut g, x);
        g.set_output(out);
        let mut b = Bindings::new();
        self.bind(&mut b);
        b.insert("x".into(), batch.clone());
        g.forward_owned(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(&mut file).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// `LIPADNET`, a little-endian `u64` header length, the JSON header, then
    /// every parameter as little-endian `f64` in declaration order.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let header = serde_json::to_vec(&ModelHeader {
            arch: self.arch.clone(),
            seed: self.seed,
        })
        .expect("header serialises");
        w.write_all(MAGIC)?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        for (_, t) in &self.tensors {
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(Error::Data("not a LIPADNET model file".into()));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header_end = 16usize
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Data("truncated model header".into()))?;
        let header: ModelHeader = serde_json::from_slice(&bytes[16..header_end])
            .map_err(|e| Error::Data(format!("model header: {e}")))?;
        header.arch.validate()?;
        let mut values = bytes[header_end..].chunks_exact(8);
        if values.len() != header.arch.param_count() || !values.remainder().is_empty() {
            return Err(Error::Data(format!(
                "model body holds {} bytes, expected {} parameters",
                bytes.len() - header_end,
                header.arch.param_count()
            )));
        }
        let mut tensors = Vec::new();
        for (name, shape) in Self::expected_shapes(&header.arch) {
            let n: usize = shape.iter().product();
            let data = values
                .by_ref()
                .take(n)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push((name, Tensor::new(shape, data)?));
        }
        Ok(Self {
            arch: header.arch,
            seed: header.seed,
            tensors,
        })
    }
}

const MAGIC: &[u8; 8] = b"LIPADNET";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelHeader {
    arch: Architecture,
    seed: u64,
}

pub fn build_critic(spec: &DenseNetSpec, seed: u64) -> Result<ParamSet> {
    ParamSet::init(Architecture::Critic(spec.clone()), seed)
}

pub fn build_autoencoder(spec: &AutoencoderSpec, seed: u64) -> Result<ParamSet> {
    ParamSet::init(Architecture::Autoencoder(spec.clone()), seed)
}

/// Per-row scalar potential of a critic.
pub fn critic_forward(params: &ParamSet, batch: &Tensor) -> Result<Tensor> {
    params.forward(batch)
}
