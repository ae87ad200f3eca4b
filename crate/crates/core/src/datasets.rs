//! Data generation, file formats, standardisation and contamination.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::rng::{self, streams};
use crate::{Error, Result, Tensor};

pub const MNIST_SIDE: usize = 28;
pub const MNIST_PIXELS: usize = MNIST_SIDE * MNIST_SIDE;
const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Points with nominal (0) / anomalous (1) labels and optional class ids.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledData {
    pub points: Tensor,
    pub labels: Vec<u8>,
    pub classes: Option<Vec<u8>>,
}

impl LabeledData {
    /// All rows nominal, no classes.
    pub fn nominal(points: Tensor) -> Self {
        let n = points.rows();
        Self {
            points,
            labels: vec![0; n],
            classes: None,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            points: self.points.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            classes: self
                .classes
                .as_ref()
                .map(|c| rows.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Rows whose class id is (or is not) `class`.
    pub fn rows_of_class(&self, class: u8, equal: bool) -> Vec<usize> {
        let classes = self.classes.as_deref().unwrap_or(&[]);
        (0..classes.len())
            .filter(|&i| (classes[i] == class) == equal)
            .collect()
    }

    pub fn rows_with_label(&self, label: u8) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }
}

/// Two interleaving half circles: `n/2` on the upper unit arc around the
/// origin and the rest on the lower arc around `(1, 0.5)`, then Gaussian
/// noise of standard deviation `noise` per coordinate.
pub fn make_moons(n: usize, noise: f64, seed: u64) -> Result<LabeledData> {
    if n < 2 {
        return Err(Error::Contract(format!("make_moons needs n ≥ 2, got {n}")));
    }
    if !(noise >= 0.0) {
        return Err(Error::Contract(format!("noise {noise} is negative")));
    }
    let n_out = n / 2;
    let n_in = n - n_out;
    let arc = |k: usize, count: usize| {
        if count == 1 {
            0.0
        } else {
            PI * k as f64 / (count - 1) as f64
        }
    };
    let mut data = Vec::with_capacity(2 * n);
    for k in 0..n_out {
        let t = arc(k, n_out);
        data.extend([t.cos(), t.sin()]);
    }
    for k in 0..n_in {
        let t = arc(k, n_in);
        data.extend([1.0 - t.cos(), 1.0 - t.sin() - 0.5]);
    }
    if noise > 0.0 {
        let mut rng = rng::stream(seed, streams::DATA);
        let normal = Normal::new(0.0, noise).expect("valid noise");
        for v in &mut data {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(LabeledData::nominal(Tensor::matrix(n, 2, data)))
}

/// Distance from `p` to the nearer of the two noiseless moon arcs.
pub fn distance_to_moons(p: &[f64]) -> f64 {
    let arc = |cx: f64, cy: f64, upper: bool| {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        let on_side = if upper { dy >= 0.0 } else { dy <= 0.0 };
        if on_side {
            ((dx * dx + dy * dy).sqrt() - 1.0).abs()
        } else {
            // nearest point is an endpoint of the half circle
            let e1 = ((dx - 1.0).powi(2) + dy * dy).sqrt();
            let e2 = ((dx + 1.0).powi(2) + dy * dy).sqrt();
            e1.min(e2)
        }
    };
    arc(0.0, 0.0, true).min(arc(1.0, 0.5, false))
}

fn read_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Data(format!("{}: truncated IDX header", path.display())))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an IDX image file and its label file; pixels become `v / 255`.
pub fn load_mnist_idx(images: &Path, labels: &Path) -> Result<LabeledData> {
    let img = read_file(images)?;
    let lab = read_file(labels)?;
    parse_mnist_idx(&img, &lab).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{} / {}: {m}", images.display(), labels.display())),
        other => other,
    })
}

pub fn parse_mnist_idx(img: &[u8], lab: &[u8]) -> Result<LabeledData> {
    let p = Path::new("images");
    let q = Path::new("labels");
    let magic = read_u32(img, 0, p)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let magic = read_u32(lab, 0, q)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Data(format!(
            "label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let n = read_u32(img, 4, p)? as usize;
    let rows = read_u32(img, 8, p)? as usize;
    let cols = read_u32(img, 12, p)? as usize;
    let n_labels = read_u32(lab, 4, q)? as usize;
    if n != n_labels {
        return Err(Error::Data(format!("{n} images but {n_labels} labels")));
    }
    let d = rows * cols;
    if n == 0 || d == 0 {
        return Err(Error::Data("empty IDX file".into()));
    }
    let pixels = &img[16..];
    if pixels.len() != n * d {
        return Err(Error::Data(format!(
            "image body has {} bytes, header declares {}",
            pixels.len(),
            n * d
        )));
    }
    let classes = &lab[8..];
    if classes.len() != n {
        return Err(Error::Data(format!(
            "label body has {} bytes, header declares {n}",
            classes.len()
        )));
    }
    let data = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok(LabeledData {
        points: Tensor::matrix(n, d, data),
        labels: vec![0; n],
        classes: Some(classes.to_vec()),
    })
}

/// Writes `(images, labels)` IDX byte streams; pixels are rounded back to
/// bytes.
pub fn encode_mnist_idx(
    data: &LabeledData,
    rows: usize,
    cols: usize,
) -> Result<(Vec<u8>, Vec<u8>)> {
    let n = data.len();
    if data.points.cols() != rows * cols {
        return Err(Error::dim(
            "IDX encode",
            format!("rows of width {}", data.points.cols()),
        ));
    }
    let classes = data
        .classes
        .as_ref()
        .ok_or_else(|| Error::Data("IDX labels need class ids".into()))?;
    let mut img = Vec::with_capacity(16 + n * rows * cols);
    for v in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        img.extend(v.to_be_bytes());
    }
    img.extend(
        data.points
            .data()
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    let mut lab = Vec::with_capacity(8 + n);
    for v in [LABELS_MAGIC, n as u32] {
        lab.extend(v.to_be_bytes());
    }
    lab.extend(classes);
    Ok((img, lab))
}

/// The standard MNIST train and test splits.
#[derive(Clone, Debug)]
pub struct Mnist {
    pub train: LabeledData,
    pub test: LabeledData,
}

impl Mnist {
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let f = |name: &str| -> PathBuf { dir.join(name) };
        Ok(Self {
            train: load_mnist_idx(&f("train-images-idx3-ubyte"), &f("train-labels-idx1-ubyte"))?,
            test: load_mnist_idx(&f("t10k-images-idx3-ubyte"), &f("t10k-labels-idx1-ubyte"))?,
        })
    }
}

/// Appends `round(γN / (1 − γ))` rows drawn without replacement from
/// `anomalies`, labelled 1.
pub fn contaminate(
    nominal: &LabeledData,
    anomalies: &LabeledData,
    gamma: f64,
    seed: u64,
) -> Result<LabeledData> {
    if !(0.0..0.5).contains(&gamma) {
        return Err(Error::Config(format!(
            "contamination {gamma} outside [0, 0.5)"
        )));
    }
    let n = nominal.len();
    let a = (gamma * n as f64 / (1.0 - gamma)).round() as usize;
    if a == 0 {
        return Ok(nominal.clone());
    }
    if a > anomalies.len() {
        return Err(Error::Data(format!(
            "contamination needs {a} anomalies, pool has {}",
            anomalies.len()
        )));
    }
    let mut rng = rng::stream(seed, streams::CONTAMINATE);
    let picked = index::sample(&mut rng, anomalies.len(), a).into_vec();
    let extra = anomalies.select(&picked);
    let classes = match (&nominal.classes, &extra.classes) {
        (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
        _ => None,
    };
    Ok(LabeledData {
        points: Tensor::vstack(&[&nominal.points, &extra.points])?,
        labels: nominal
            .labels
            .iter()
            .copied()
            .chain(std::iter::repeat_n(1, a))
            .collect(),
        classes,
    })
}

/// Number of columns of [`synthetic_tabular`].
pub const TABULAR_DIM: usize = 10;
/// Share of anomalous rows produced by [`synthetic_tabular`].
pub const TABULAR_ANOMALY_SHARE: f64 = 0.2;
const TABULAR_COMPONENTS: usize = 3;
/// Anomalous rows have coordinate 0 set to this value plus `|x₀|`.
pub const TABULAR_SHIFT: f64 = 2.25;

/// A 10-feature stand-in for a lab-value table.
///
/// Nominal rows come from a three-component Gaussian mixture whose
/// coordinate 0 is standard normal in every component; the other nine
/// coordinates have component means of spread 0.8 and within-component
/// standard deviation 0.6, so each is close to unit variance. Anomalous rows
/// are fresh mixture draws with coordinate 0 replaced by `2.25 + |x₀|`,
/// i.e. pushed beyond two standard deviations. A fifth of the `n` rows are
/// anomalous, interleaved at every fifth position.
pub fn synthetic_tabular(n: usize, seed: u64) -> Result<LabeledData> {
    if n < 100 {
        return Err(Error::Contract(format!(
            "synthetic_tabular needs n ≥ 100, got {n}"
        )));
    }
    let mut rng = rng::stream(seed, streams::DATA);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let means: Vec<Vec<f64>> = (0..TABULAR_COMPONENTS)
        .map(|_| {
            (1..TABULAR_DIM)
                .map(|_| 0.8 * std_normal.sample(&mut rng))
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(n * TABULAR_DIM);
    let mut labels = Vec::with_capacity(n);
    let period = (1.0 / TABULAR_ANOMALY_SHARE).round() as usize;
    for i in 0..n {
        let comp = rng.random_range(0..TABULAR_COMPONENTS);
        let x0 = std_normal.sample(&mut rng);
        let anomalous = i % period == period - 1;
        data.push(if anomalous {
            TABULAR_SHIFT + x0.abs()
        } else {
            x0
        });
        for mu in &means[comp] {
            data.push(mu + 0.6 * std_normal.sample(&mut rng));
        }
        labels.push(u8::from(anomalous));
    }
    Ok(LabeledData {
        points: Tensor::matrix(n, TABULAR_DIM, data),
        labels,
        classes: None,
    })
}

pub const STD_FLOOR: f64 = 1e-8;

/// Per-column affine map to zero mean and unit (population) variance.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Tensor) -> Result<Self> {
        let (n, d) = data.dims2();
        if n == 0 {
            return Err(Error::Contract("cannot standardise empty data".into()));
        }
        let mut mean = vec![0.0; d];
        for row in data.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for row in data.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| (s / n as f64).sqrt().max(STD_FLOOR))
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, data: &Tensor) -> Tensor {
        let mut out = data.clone();
        let d = self.mean.len();
        for (k, v) in out.data_mut().iter_mut().enumerate() {
            *v = (*v - self.mean[k % d]) / self.std[k % d];
        }
        out
    }

    pub fn invert(&self, data: &Tensor) -> Tensor {
        let mut out = data.clone();
        let d = self.mean.len();
        for (k, v) in out.data_mut().iter_mut().enumerate() {
            *v = *v * self.std[k % d] + self.mean[k % d];
        }
        out
    }
}

/// Standardises `data`, returning the transformed copy and the fitted map.
pub fn standardize(data: &Tensor) -> Result<(Tensor, Standardizer)> {
    let s = Standardizer::fit(data)?;
    Ok((s.apply(data), s))
}

/// The all-black 28×28 image.
pub fn black_image() -> Tensor {
    Tensor::zeros(1, MNIST_PIXELS)
}

/// Reads a CSV with a header row. A last column named `label` is taken as
/// 0/1 labels; every other field must parse as `f64`.
pub fn read_csv(path: &Path) -> Result<LabeledData> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Like [`read_csv`]; an input without data rows yields `Ok(None)`.
pub fn parse_csv_opt(text: &str) -> Result<Option<LabeledData>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(None);
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_label = names.last() == Some(&"label");
    let width = names.len() - usize::from(has_label);
    if width == 0 {
        return Err(Error::Data("header has no feature columns".into()));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::Data(format!(
                "line {}: {} fields, header has {}",
                lineno + 1,
                fields.len(),
                names.len()
            )));
        }
        for f in &fields[..width] {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Data(format!("line {}: `{f}` is not a number", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "line {}: non-finite value",
                    lineno + 1
                )));
            }
            data.push(v);
        }
        labels.push(if has_label {
            match fields[width] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::Data(format!(
                        "line {}: label `{other}` is not 0 or 1",
                        lineno + 1
                    )))
                }
            }
        } else {
            0
        });
    }
    if labels.is_empty() {
        return Ok(None);
    }
    Ok(Some(LabeledData {
        points: Tensor::matrix(labels.len(), width, data),
        labels,
        classes: None,
    }))
}

pub fn parse_csv(text: &str) -> Result<LabeledData> {
    parse_csv_opt(text)?.ok_or_else(|| Error::Data("no data rows".into()))
}

/// Writes points with a `x0,x1,…` header and, if asked, a label column.
pub fn write_csv(path: &Path, data: &LabeledData, with_labels: bool) -> Result<()> {
    fs::write(path, to_csv(data, with_labels)).map_err(|e| Error::io(path, e))
}

pub fn to_csv(data: &LabeledData, with_labels: bool) -> String {
    let d = data.points.cols();
    let mut out: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    if with_labels {
        out.push("label".into());
    }
    let mut text = out.join(",");
    text.push('\n');
    for (i, row) in data.points.iter_rows().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if with_labels {
            fields.push(data.labels[i].to_string());
        }
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    text
}
