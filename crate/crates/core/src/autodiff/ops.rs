//! Primitive operations: forward evaluation and vector-Jacobian products.

use crate::{Error, Result, Tensor};

/// Whether a leaf is trained, fed per call, or fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LeafKind {
    Param,
    Input,
    Const,
}

/// The primitive a node applies to its inputs.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Leaf {
        name: String,
        kind: LeafKind,
    },
    /// `op(a) · op(b)` with optional transposes.
    MatMul {
        trans_a: bool,
        trans_b: bool,
    },
    Add,
    Sub,
    /// Elementwise product.
    Mul,
    /// `[n × d] + [1 × d]`, the bias broadcast.
    AddBias,
    Scale(f64),
    /// `x + c` for a constant `c`.
    Shift(f64),
    LeakyRelu {
        slope: f64,
    },
    /// Inputs `(pre_activation, upstream)`: the upstream tensor multiplied by
    /// the activation's derivative mask. Its own derivative with respect to the
    /// pre-activation is zero, matching a piecewise-linear activation.
    LeakyReluMask {
        slope: f64,
    },
    Square,
    Sum,
    Mean,
    /// Column sums, `[n × d] → [1 × d]`.
    SumRows,
    /// Inputs `(scalar, like)`: a tensor shaped like `like` filled with the
    /// scalar, divided by `like`'s length when `mean` is set.
    Expand {
        mean: bool,
    },
    /// Inputs `([1 × d], like)`: the row repeated `like.rows()` times.
    ExpandRows,
    /// Per-row Euclidean norm, `[n × d] → [n × 1]`.
    RowNorm,
    /// Inputs `(a, b, t)` with `t: [n × 1]`: row `i` is `tᵢ·aᵢ + (1 − tᵢ)·bᵢ`.
    Interpolate,
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Leaf { .. } => 0,
            Op::Scale(_)
            | Op::Shift(_)
            | Op::LeakyRelu { .. }
            | Op::Square
            | Op::Sum
            | Op::Mean
            | Op::SumRows
            | Op::RowNorm => 1,
            Op::Interpolate => 3,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::MatMul { .. } => "matmul",
            Op::Add => "add",
            Op::Sub => "subtract",
            Op::Mul => "mul",
            Op::AddBias => "add-bias",
            Op::Scale(_) => "scale",
            Op::Shift(_) => "shift",
            Op::LeakyRelu { .. } => "leaky-relu",
            Op::LeakyReluMask { .. } => "leaky-relu-mask",
            Op::Square => "square",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::SumRows => "sum-rows",
            Op::Expand { .. } => "expand",
            Op::ExpandRows => "expand-rows",
            Op::RowNorm => "norm",
            Op::Interpolate => "interpolate",
        }
    }
}

#[inline]
fn slope_mask(pre: f64, slope: f64) -> f64 {
    if pre > 0.0 {
        1.0
    } else {
        slope
    }
}

fn same_shape(ctx: &str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::dim(
            ctx,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ))
    }
}

fn column_sums(t: &Tensor) -> Tensor {
    let (_, c) = t.dims2();
    let mut out = vec![0.0; c];
    for row in t.iter_rows() {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Tensor::matrix(1, c, out)
}

fn repeat_rows(row: &Tensor, rows: usize) -> Tensor {
    let c = row.cols();
    let mut data = Vec::with_capacity(rows * c);
    for _ in 0..rows {
        data.extend_from_slice(row.data());
    }
    Tensor::matrix(rows, c, data)
}

fn fill_like(like: &Tensor, value: f64) -> Tensor {
    let (r, c) = like.dims2();
    Tensor::filled(r, c, value)
}

/// Evaluates `op` on already computed input values.
pub(crate) fn eval(op: &Op, ctx: &str, x: &[&Tensor]) -> Result<Tensor> {
    let out = match op {
        Op::Leaf { .. } => unreachable!("leaves are bound, not evaluated"),
        Op::MatMul { trans_a, trans_b } => x[0]
            .matmul(x[1], *trans_a, *trans_b)
            .map_err(|e| Error::dim(ctx, e.to_string()))?,
        Op::Add => {
            same_shape(ctx, x[0], x[1])?;
            x[0].zip_map(x[1], |a, b| a + b)
        }
        Op::Sub => {
            same_shape(ctx, x[0], x[1])?;
            x[0].zip_map(x[1], |a, b| a - b)
        }
        Op::Mul => {
            same_shape(ctx, x[0], x[1])?;
            x[0].zip_map(x[1], |a, b| a * b)
        }
        Op::AddBias => {
            let (r, c) = x[0].dims2();
            if x[1].dims2() != (1, c) {
                return Err(Error::dim(
                    ctx,
                    format!("bias {:?} for input {:?}", x[1].shape(), x[0].shape()),
                ));
            }
            let mut out = x[0].clone();
            let b = x[1].data();
            for i in 0..r {
                for (o, bv) in out.row_mut(i).iter_mut().zip(b) {
                    *o += bv;
                }
            }
            out
        }
        Op::Scale(c) => x[0].map(|v| c * v),
        Op::Shift(c) => x[0].map(|v| v + c),
        Op::LeakyRelu { slope } => x[0].map(|v| v * slope_mask(v, *slope)),
        Op::LeakyReluMask { slope } => {
            same_shape(ctx, x[0], x[1])?;
            x[1].zip_map(x[0], |g, z| g * slope_mask(z, *slope))
        }
        Op::Square => x[0].map(|v| v * v),
        Op::Sum => Tensor::scalar(x[0].sum()),
        Op::Mean => Tensor::scalar(x[0].mean()),
        Op::SumRows => column_sums(x[0]),
        Op::Expand { mean } => {
            if x[0].len() != 1 {
                return Err(Error::dim(
                    ctx,
                    format!("expand of non-scalar {:?}", x[0].shape()),
                ));
            }
            let v = if *mean {
                x[0].item() / x[1].len() as f64
            } else {
                x[0].item()
            };
            fill_like(x[1], v)
        }
        Op::ExpandRows => {
            if x[0].rows() != 1 || x[0].cols() != x[1].cols() {
                return Err(Error::dim(
                    ctx,
                    format!("row {:?} against {:?}", x[0].shape(), x[1].shape()),
                ));
            }
            repeat_rows(x[0], x[1].rows())
        }
        Op::RowNorm => {
            let norms = x[0]
                .iter_rows()
                .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect();
            Tensor::column(norms)
        }
        Op::Interpolate => {
            same_shape(ctx, x[0], x[1])?;
            let n = x[0].rows();
            if x[2].dims2() != (n, 1) {
                return Err(Error::dim(
                    ctx,
                    format!("t {:?} for {n} rows", x[2].shape()),
                ));
            }
            let mut out = x[0].clone();
            for i in 0..n {
                let t = x[2].data()[i];
                for (o, b) in out.row_mut(i).iter_mut().zip(x[1].row(i)) {
                    *o = t * *o + (1.0 - t) * b;
                }
            }
            out
        }
    };
    if !out.is_finite() {
        return Err(Error::Numeric(format!("{ctx} produced a non-finite value")));
    }
    Ok(out)
}

/// Vector-Jacobian product of `op` with respect to input `which`.
///
/// Returns `None` when that input does not influence the output to first order.
pub(crate) fn vjp(
    op: &Op,
    which: usize,
    x: &[&Tensor],
    upstream: &Tensor,
) -> Result<Option<Tensor>> {
    let g = upstream;
    let out = match (op, which) {
        (Op::MatMul { trans_a, trans_b }, _) => {
            let (a, b) = (x[0], x[1]);
            let r = match (trans_a, trans_b, which) {
                (false, false, 0) => g.matmul(b, false, true),
                (false, false, _) => a.matmul(g, true, false),
                (false, true, 0) => g.matmul(b, false, false),
                (false, true, _) => g.matmul(a, true, false),
                (true, false, 0) => b.matmul(g, false, true),
                (true, false, _) => a.matmul(g, false, false),
                (true, true, 0) => b.matmul(g, true, true),
                (true, true, _) => g.matmul(a, true, true),
            };
            r?
        }
        (Op::Add, _) | (Op::AddBias, 0) | (Op::Shift(_), _) => g.clone(),
        (Op::Sub, 0) => g.clone(),
        (Op::Sub, _) => g.map(|v| -v),
        (Op::Mul, 0) => g.zip_map(x[1], |u, y| u * y),
        (Op::Mul, _) => g.zip_map(x[0], |u, y| u * y),
        (Op::AddBias, _) => column_sums(g),
        (Op::Scale(c), _) => g.map(|v| c * v),
        (Op::LeakyRelu { slope }, _) => g.zip_map(x[0], |u, z| u * slope_mask(z, *slope)),
        (Op::LeakyReluMask { .. }, 0) => return Ok(None),
        (Op::LeakyReluMask { slope }, _) => g.zip_map(x[0], |u, z| u * slope_mask(z, *slope)),
        (Op::Square, _) => g.zip_map(x[0], |u, v| 2.0 * v * u),
        (Op::Sum, _) => fill_like(x[0], g.item()),
        (Op::Mean, _) => fill_like(x[0], g.item() / x[0].len() as f64),
        (Op::SumRows, _) => repeat_rows(g, x[0].rows()),
        (Op::Expand { mean }, 0) => {
            let s = g.sum();
            Tensor::scalar(if *mean { s / x[1].len() as f64 } else { s })
        }
        (Op::ExpandRows, 0) => column_sums(g),
        (Op::Expand { .. }, _) | (Op::ExpandRows, _) => return Ok(None),
        (Op::RowNorm, _) => {
            let src = x[0];
            let mut out = Tensor::zeros(src.rows(), src.cols());
            for i in 0..src.rows() {
                let row = src.row(i);
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                // the subgradient at a zero row is taken to be zero
                if norm > 0.0 {
                    let s = g.data()[i] / norm;
                    for (o, v) in out.row_mut(i).iter_mut().zip(row) {
                        *o = s * v;
                    }
                }
            }
            out
        }
        (Op::Interpolate, 2) => {
            let (a, b) = (x[0], x[1]);
            let vals = (0..a.rows())
                .map(|i| {
                    g.row(i)
                        .iter()
                        .zip(a.row(i).iter().zip(b.row(i)))
                        .map(|(u, (av, bv))| u * (av - bv))
                        .sum()
                })
                .collect();
            Tensor::column(vals)
        }
        (Op::Interpolate, side) => {
            let t = x[2].data();
            let mut out = g.clone();
            for (i, &ti) in t.iter().enumerate() {
                let w = if side == 0 { ti } else { 1.0 - ti };
                for v in out.row_mut(i) {
                    *v *= w;
                }
            }
            out
        }
        (Op::Leaf { .. }, _) => unreachable!("leaves have no inputs"),
    };
    Ok(Some(out))
}
