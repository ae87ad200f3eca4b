//! Finite-difference checks of reverse-mode gradients, shared by the
//! gradient tests and the acceptance suite.

use lipad::autodiff::{Bindings, Graph, NodeId, Op};
use lipad::models::{build_critic, DenseNetSpec, ParamSet};
use lipad::rng;
use lipad::trainer::{critic_loss_at, interpolates};
use lipad::Tensor;
use rand::Rng;

pub const H: f64 = 1e-5;
pub const FIRST_ORDER_TOL: f64 = 1e-4;
pub const PENALTY_TOL: f64 = 1e-3;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor {
    // keep entries away from zero so leaky-ReLU kinks are not crossed
    Tensor::matrix(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| {
                let v: f64 = rng.random_range(0.1..1.5);
                if rng.random_bool(0.5) {
                    v
                } else {
                    -v
                }
            })
            .collect(),
    )
}

/// Largest relative error between the analytic gradient of `out` and central
/// differences over every entry of every leaf named in `check`.
fn max_fd_error(g: &mut Graph, out: NodeId, bindings: &Bindings, check: &[&str]) -> f64 {
    g.forward(bindings).unwrap();
    let grads = g.backward(out).unwrap();
    let mut worst = 0.0f64;
    for &name in check {
        let analytic = grads
            .get(name)
            .unwrap_or_else(|| panic!("no gradient for {name}"));
        for k in 0..bindings[name].len() {
            let mut eval = |delta: f64| {
                let mut b = bindings.clone();
                b.get_mut(name).unwrap().data_mut()[k] += delta;
                g.forward(&b).unwrap();
                g.value(out).unwrap().item()
            };
            let numeric = (eval(H) - eval(-H)) / (2.0 * H);
            worst = worst.max(rel_err(analytic.data()[k], numeric));
        }
    }
    worst
}

/// `Σ w ⊙ op(…)` so every output entry reaches the scalar with its own weight.
fn weighted_sum(g: &mut Graph, y: NodeId, shape: (usize, usize), rng: &mut impl Rng) -> NodeId {
    let w = g.constant("readout", random(shape.0, shape.1, rng));
    let prod = g.mul(y, w);
    let s = g.sum(prod);
    g.set_output(s);
    s
}

pub fn bind(pairs: Vec<(&str, Tensor)>) -> Bindings {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

type Case = (
    &'static str,
    fn(&mut Graph, &mut rng::Rng) -> (NodeId, Bindings, Vec<&'static str>),
);

fn unary(
    g: &mut Graph,
    rng: &mut rng::Rng,
    f: impl Fn(&mut Graph, NodeId) -> NodeId,
    out_shape: (usize, usize),
) -> (NodeId, Bindings, Vec<&'static str>) {
    let a = g.input("a");
    let y = f(g, a);
    let s = weighted_sum(g, y, out_shape, rng);
    (s, bind(vec![("a", random(3, 4, rng))]), vec!["a"])
}

fn binary(
    g: &mut Graph,
    rng: &mut rng::Rng,
    f: impl Fn(&mut Graph, NodeId, NodeId) -> NodeId,
    b_shape: (usize, usize),
    out_shape: (usize, usize),
) -> (NodeId, Bindings, Vec<&'static str>) {
    let a = g.input("a");
    let b = g.param("b");
    let y = f(g, a, b);
    let s = weighted_sum(g, y, out_shape, rng);
    let bindings = bind(vec![
        ("a", random(3, 4, rng)),
        ("b", random(b_shape.0, b_shape.1, rng)),
    ]);
    (s, bindings, vec!["a", "b"])
}

fn cases() -> Vec<Case> {
    vec![
        ("matmul", |g, r| {
            binary(g, r, |g, a, b| g.matmul(a, b), (4, 2), (3, 2))
        }),
        ("matmul_ta", |g, r| {
            binary(
                g,
                r,
                |g, a, b| g.matmul_t(a, b, true, false),
                (3, 5),
                (4, 5),
            )
        }),
        ("matmul_tb", |g, r| {
            binary(
                g,
                r,
                |g, a, b| g.matmul_t(a, b, false, true),
                (2, 4),
                (3, 2),
            )
        }),
        ("matmul_tt", |g, r| {
            binary(g, r, |g, a, b| g.matmul_t(a, b, true, true), (2, 3), (4, 2))
        }),
        ("add", |g, r| {
            binary(g, r, |g, a, b| g.add(a, b), (3, 4), (3, 4))
        }),
        ("sub", |g, r| {
            binary(g, r, |g, a, b| g.sub(a, b), (3, 4), (3, 4))
        }),
        ("mul", |g, r| {
            binary(g, r, |g, a, b| g.mul(a, b), (3, 4), (3, 4))
        }),
        ("add_bias", |g, r| {
            binary(g, r, |g, a, b| g.add_bias(a, b), (1, 4), (3, 4))
        }),
        ("scale", |g, r| unary(g, r, |g, a| g.scale(a, -2.5), (3, 4))),
        ("shift", |g, r| unary(g, r, |g, a| g.shift(a, 0.7), (3, 4))),
        ("leaky_relu", |g, r| {
            unary(g, r, |g, a| g.leaky_relu(a, 0.2), (3, 4))
        }),
        ("square", |g, r| unary(g, r, |g, a| g.square(a), (3, 4))),
        ("sum", |g, r| unary(g, r, |g, a| g.sum(a), (1, 1))),
        ("mean", |g, r| unary(g, r, |g, a| g.mean(a), (1, 1))),
        ("row_norm", |g, r| unary(g, r, |g, a| g.row_norm(a), (3, 1))),
        ("sum_rows", |g, r| {
            unary(g, r, |g, a| g.push(Op::SumRows, &[a]), (1, 4))
        }),
        ("leaky_relu_mask", |g, r| {
            binary(
                g,
                r,
                |g, a, b| g.push(Op::LeakyReluMask { slope: 0.2 }, &[a, b]),
                (3, 4),
                (3, 4),
            )
        }),
        ("expand_mean", |g, r| {
            let a = g.input("a");
            let like = g.constant("like", Tensor::zeros(3, 4));
            let s0 = g.sum(a);
            let y = g.push(Op::Expand { mean: true }, &[s0, like]);
            let s = weighted_sum(g, y, (3, 4), r);
            (s, bind(vec![("a", random(2, 2, r))]), vec!["a"])
        }),
        ("expand_rows", |g, r| {
            let a = g.input("a");
            let like = g.constant("like", Tensor::zeros(3, 4));
            let y = g.push(Op::ExpandRows, &[a, like]);
            let s = weighted_sum(g, y, (3, 4), r);
            (s, bind(vec![("a", random(1, 4, r))]), vec!["a"])
        }),
        ("interpolate", |g, r| {
            let a = g.input("a");
            let b = g.param("b");
            let t = g.input("t");
            let y = g.interpolate(a, b, t);
            let s = weighted_sum(g, y, (3, 4), r);
            let t_val = Tensor::column((0..3).map(|_| r.random_range(0.0..1.0)).collect());
            (
                s,
                bind(vec![
                    ("a", random(3, 4, r)),
                    ("b", random(3, 4, r)),
                    ("t", t_val),
                ]),
                vec!["a", "b", "t"],
            )
        }),
    ]
}

/// Worst relative error of every primitive's gradient at `seed`.
pub fn primitive_errors(seed: u64) -> Vec<(&'static str, f64)> {
    cases()
        .into_iter()
        .map(|(name, build)| {
            let mut r = rng::seeded(seed);
            let mut g = Graph::new();
            let (out, bindings, check) = build(&mut g, &mut r);
            (name, max_fd_error(&mut g, out, &bindings, &check))
        })
        .collect()
}

/// `mean((‖∇ₓ f‖ − 1)²)` for a two-layer leaky network, differentiated with
/// respect to its weights and input through the symbolic input gradient.
pub fn symbolic_penalty_error(seed: u64) -> f64 {
    let mut r = rng::seeded(100 + seed);
    let mut g = Graph::new();
    let x = g.input("x");
    let w1 = g.param("w1");
    let b1 = g.param("b1");
    let w2 = g.param("w2");
    let h = g.matmul(x, w1);
    let h = g.add_bias(h, b1);
    let h = g.leaky_relu(h, 0.2);
    let f = g.matmul(h, w2);
    g.set_output(f);
    let bindings = bind(vec![
        ("x", random(4, 3, &mut r)),
        ("w1", random(3, 5, &mut r)),
        ("b1", random(1, 5, &mut r)),
        ("w2", random(5, 1, &mut r)),
    ]);
    g.forward(&bindings).unwrap();
    let norm = g.input_grad_norm(f, x).unwrap();
    let dev = g.shift(norm, -1.0);
    let sq = g.square(dev);
    let pen = g.mean(sq);
    g.set_output(pen);
    max_fd_error(&mut g, pen, &bindings, &["w1", "b1", "w2", "x"])
}

fn perturbed(params: &ParamSet, name: &str, k: usize, delta: f64) -> ParamSet {
    let mut p = params.clone();
    p.get_mut(name).unwrap().data_mut()[k] += delta;
    p
}

/// Worst relative error of the critic objective's parameter gradient at
/// `lambda`.
pub fn objective_fd_error(seed: u64, lambda: f64) -> f64 {
    let spec = DenseNetSpec::new(3, vec![6, 4], 1);
    let params = build_critic(&spec, seed).unwrap();
    let mut r = rng::seeded(seed);
    let nominal = random(8, 3, &mut r);
    let corrupt = random(8, 3, &mut r);
    let interp = interpolates(&nominal, &corrupt, &mut r).unwrap();
    let eval = critic_loss_at(&params, &nominal, &corrupt, &interp, lambda).unwrap();
    let mut worst = 0.0f64;
    for (name, tensor) in params.tensors() {
        let analytic = eval.grads.get(name).unwrap();
        for k in 0..tensor.len() {
            let at = |d| {
                critic_loss_at(
                    &perturbed(&params, name, k, d),
                    &nominal,
                    &corrupt,
                    &interp,
                    lambda,
                )
                .unwrap()
                .loss
            };
            let numeric = (at(H) - at(-H)) / (2.0 * H);
            worst = worst.max(rel_err(analytic.data()[k], numeric));
        }
    }
    worst
}

/// The penalty's own parameter gradient, isolated as the difference of the
/// objective gradients at λ = 10 and λ = 0, against differences of the
/// penalty value.
pub fn penalty_only_error(seed: u64) -> f64 {
    let spec = DenseNetSpec::new(2, vec![5, 5], 1);
    let params = build_critic(&spec, 50 + seed).unwrap();
    let mut r = rng::seeded(50 + seed);
    let nominal = random(6, 2, &mut r);
    let corrupt = random(6, 2, &mut r);
    let interp = interpolates(&nominal, &corrupt, &mut r).unwrap();
    let with = critic_loss_at(&params, &nominal, &corrupt, &interp, 10.0).unwrap();
    let without = critic_loss_at(&params, &nominal, &corrupt, &interp, 0.0).unwrap();
    let mut worst = 0.0f64;
    for (name, tensor) in params.tensors() {
        for k in 0..tensor.len() {
            let gp = |d| {
                critic_loss_at(
                    &perturbed(&params, name, k, d),
                    &nominal,
                    &corrupt,
                    &interp,
                    10.0,
                )
                .unwrap()
                .gp_term
            };
            let numeric = (gp(H) - gp(-H)) / (2.0 * H);
            let analytic = with.grads.get(name).unwrap().data()[k]
                - without.grads.get(name).unwrap().data()[k];
            worst = worst.max(rel_err(analytic, numeric));
        }
    }
    worst
}
