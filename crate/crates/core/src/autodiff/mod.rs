//! Reverse-mode differentiation over a small set of dense primitives.
//!
//! A [`Graph`] records operations on [`Tensor`](crate::Tensor) values.
//! [`Graph::backward`] runs a numeric reverse sweep and returns gradients for
//! the named leaves. [`Graph::grad_node`] instead appends the reverse sweep
//! to the graph as ordinary nodes, so the gradient itself can be
//! differentiated again. The gradient penalty of the critic objective needs
//! exactly that: the parameter gradient of a function of `‖∇ₓ f(x)‖`.
//!
//! The leaky ReLU is treated as piecewise linear: the derivative mask captured
//! at the forward pre-activation is reused by the symbolic sweep and has zero
//! derivative itself.

mod graph;
mod ops;

pub use graph::{Bindings, Gradients, Graph, Node, NodeId};
pub use ops::{LeafKind, Op};

use crate::{Result, Tensor};

/// Evaluates the graph's designated output under `bindings`.
pub fn forward(graph: &mut Graph, bindings: &Bindings) -> Result<Tensor> {
    graph.forward(bindings)
}

/// Gradient of the scalar `output` with respect to every parameter and input leaf.
pub fn backward(graph: &mut Graph, output: NodeId) -> Result<Gradients> {
    graph.backward(output)
}

/// Binds `x` to the input leaf `x_name`, runs the forward pass, and extends a
/// copy of `graph` with a node holding the per-row norm of `∇ₓ output`.
///
/// Returns the norms, the extended graph and the id of the norm node inside
/// it; backward passes over the extended graph give parameter gradients of any
/// function of the norm.
pub fn input_grad_norm(
    graph: &Graph,
    bindings: &Bindings,
    x_name: &str,
    x: Tensor,
) -> Result<(Tensor, Graph, NodeId)> {
    let mut extended = graph.clone();
    let mut b = bindings.clone();
    b.insert(x_name.to_string(), x);
    extended.forward(&b)?;
    let output = extended
        .output()
        .ok_or_else(|| crate::Error::Contract("graph has no designated output".into()))?;
    let x_node = extended
        .leaf(x_name)
        .ok_or_else(|| crate::Error::Contract(format!("no leaf named `{x_name}`")))?;
    let norm = extended.input_grad_norm(output, x_node)?;
    let value = extended.value(norm).expect("evaluated").clone();
    Ok((value, extended, norm))
}
