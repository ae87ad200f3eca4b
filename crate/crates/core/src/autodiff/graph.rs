use std::collections::{BTreeMap, HashMap};

use super::ops::{self, LeafKind, Op};
use crate::{Error, Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub op: Op,
    pub inputs: Vec<NodeId>,
    pub value: Option<Tensor>,
    pub adjoint: Option<Tensor>,
}

/// Leaf name → tensor.
pub type Bindings = HashMap<String, Tensor>;

/// Gradients of a scalar node with respect to named leaves.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients(BTreeMap<String, Tensor>);

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.0.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor> {
        self.0.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An append-only expression graph.
///
/// Nodes are stored in creation order, which is always a valid topological
/// order since a node can only reference nodes that already exist.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    leaves: HashMap<String, NodeId>,
    output: Option<NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].value.as_ref()
    }

    /// Adjoint of an interior node after the last reverse sweep. Leaf
    /// gradients are returned by the sweep itself.
    pub fn adjoint(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].adjoint.as_ref()
    }

    pub fn leaf(&self, name: &str) -> Option<NodeId> {
        self.leaves.get(name).copied()
    }

    pub fn set_output(&mut self, id: NodeId) {
        self.output = Some(id);
    }

    pub fn output(&self) -> Option<NodeId> {
        self.output
    }

    fn add_leaf(&mut self, name: &str, kind: LeafKind, value: Option<Tensor>) -> NodeId {
        assert!(
            !self.leaves.contains_key(name),
            "leaf `{name}` declared twice"
        );
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op: Op::Leaf {
                name: name.to_string(),
                kind,
            },
            inputs: Vec::new(),
            value,
            adjoint: None,
        });
        self.leaves.insert(name.to_string(), id);
        id
    }

    pub fn param(&mut self, name: &str) -> NodeId {
        self.add_leaf(name, LeafKind::Param, None)
    }

    pub fn input(&mut self, name: &str) -> NodeId {
        self.add_leaf(name, LeafKind::Input, None)
    }

    /// A leaf with a fixed value; it receives no gradient.
    pub fn constant(&mut self, name: &str, value: Tensor) -> NodeId {
        self.add_leaf(name, LeafKind::Const, Some(value))
    }

    /// Appends an operation node. Panics on an arity mismatch or a dangling
    /// input, both of which are programming errors.
    pub fn push(&mut self, op: Op, inputs: &[NodeId]) -> NodeId {
        assert_eq!(op.arity(), inputs.len(), "arity of {}", op.name());
        let id = NodeId(self.nodes.len());
        assert!(inputs.iter().all(|i| i.0 < id.0), "dangling input");
        self.nodes.push(Node {
            op,
            inputs: inputs.to_vec(),
            value: None,
            adjoint: None,
        });
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.matmul_t(a, b, false, false)
    }

    pub fn matmul_t(&mut self, a: NodeId, b: NodeId, trans_a: bool, trans_b: bool) -> NodeId {
        self.push(Op::MatMul { trans_a, trans_b }, &[a, b])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add, &[a, b])
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul, &[a, b])
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> NodeId {
        self.push(Op::AddBias, &[x, bias])
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        self.push(Op::Scale(c), &[x])
    }

    pub fn shift(&mut self, x: NodeId, c: f64) -> NodeId {
        self.push(Op::Shift(c), &[x])
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> NodeId {
        self.push(Op::LeakyRelu { slope }, &[x])
    }

    pub fn square(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Square, &[x])
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Sum, &[x])
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        self.push(Op::Mean, &[x])
    }

    pub fn row_norm(&mut self, x: NodeId) -> NodeId {
        self.push(Op::RowNorm, &[x])
    }

    pub fn interpolate(&mut self, a: NodeId, b: NodeId, t: NodeId) -> NodeId {
        self.push(Op::Interpolate, &[a, b, t])
    }

    fn context(&self, id: NodeId) -> String {
        match &self.nodes[id.0].op {
            Op::Leaf { name, .. } => format!("node {} (leaf `{name}`)", id.0),
            op => format!("node {} ({})", id.0, op.name()),
        }
    }

    fn eval_node(&self, id: NodeId) -> Result<Tensor> {
        let node = &self.nodes[id.0];
        let inputs: Vec<&Tensor> = node
            .inputs
            .iter()
            .map(|i| {
                self.nodes[i.0]
                    .value
                    .as_ref()
                    .expect("inputs evaluated first")
            })
            .collect();
        ops::eval(&node.op, &self.context(id), &inputs)
    }

    /// Binds the leaves, evaluates every node and returns the designated
    /// output. Leaves absent from `bindings` keep a previously set value.
    pub fn forward(&mut self, bindings: &Bindings) -> Result<Tensor> {
        self.bind_and_run(|name| bindings.get(name).cloned())
    }

    /// As [`Graph::forward`], moving the bound tensors into the graph.
    pub fn forward_owned(&mut self, mut bindings: Bindings) -> Result<Tensor> {
        self.bind_and_run(|name| bindings.remove(name))
    }

    fn bind_and_run(&mut self, mut take: impl FnMut(&str) -> Option<Tensor>) -> Result<Tensor> {
        for node in &mut self.nodes {
            match &node.op {
                Op::Leaf { name, .. } => {
                    if let Some(v) = take(name) {
                        node.value = Some(v);
                    }
                }
                _ => node.value = None,
            }
            node.adjoint = None;
        }
        self.evaluate_pending()?;
        let out = self
            .output
            .ok_or_else(|| Error::Contract("graph has no designated output".into()))?;
        Ok(self.nodes[out.0].value.clone().expect("evaluated"))
    }

    /// Evaluates every node that does not yet hold a value, e.g. nodes
    /// appended after a forward pass.
    pub fn evaluate_pending(&mut self) -> Result<()> {
        for i in 0..self.nodes.len() {
            if self.nodes[i].value.is_some() {
                continue;
            }
            let id = NodeId(i);
            if let Op::Leaf { name, .. } = &self.nodes[i].op {
                return Err(Error::Contract(format!("leaf `{name}` is unbound")));
            }
            let v = self.eval_node(id)?;
            self.nodes[i].value = Some(v);
        }
        Ok(())
    }

    /// Reverse sweep from a scalar node; gradients for every parameter and
    /// input leaf.
    pub fn backward(&mut self, output: NodeId) -> Result<Gradients> {
        self.backward_for(output, |k| k != LeafKind::Const)
    }

    /// Reverse sweep that only propagates towards leaves accepted by `want`.
    pub fn backward_for(
        &mut self,
        output: NodeId,
        want: impl Fn(LeafKind) -> bool,
    ) -> Result<Gradients> {
        self.evaluate_pending()?;
        let out_val = self.nodes[output.0].value.as_ref().expect("evaluated");
        if out_val.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar output, {} has shape {:?}",
                self.context(output),
                out_val.shape()
            )));
        }
        let n = output.0 + 1;
        let mut requires = vec![false; n];
        for i in 0..n {
            requires[i] = match &self.nodes[i].op {
                Op::Leaf { kind, .. } => want(*kind),
                _ => self.nodes[i].inputs.iter().any(|j| requires[j.0]),
            };
        }
        let mut adjoints: Vec<Option<Tensor>> = vec![None; n];
        adjoints[output.0] = Some(Tensor::scalar(1.0));
        for i in (0..n).rev() {
            let Some(g) = adjoints[i].take() else {
                continue;
            };
            let node = &self.nodes[i];
            if !node.inputs.is_empty() {
                let vals: Vec<&Tensor> = node
                    .inputs
                    .iter()
                    .map(|j| self.nodes[j.0].value.as_ref().expect("evaluated"))
                    .collect();
                for (k, j) in node.inputs.iter().enumerate() {
                    if !requires[j.0] {
                        continue;
                    }
                    if let Some(d) = ops::vjp(&node.op, k, &vals, &g)? {
                        match &mut adjoints[j.0] {
                            Some(acc) => acc.add_assign(&d),
                            slot => *slot = Some(d),
                        }
                    }
                }
            }
            adjoints[i] = Some(g);
        }

        // leaf adjoints move into the result; interior ones stay on the nodes
        let mut grads = BTreeMap::new();
        for (node, adj) in self.nodes.iter_mut().zip(adjoints) {
            node.adjoint = None;
            match &node.op {
                Op::Leaf { name, kind } => {
                    if !want(*kind) {
                        continue;
                    }
                    let g = match adj {
                        Some(a) => a,
                        None => {
                            let v = node.value.as_ref().expect("bound");
                            Tensor::new(v.shape().to_vec(), vec![0.0; v.len()])?
                        }
                    };
                    if !g.is_finite() {
                        return Err(Error::Numeric(format!("gradient of leaf `{name}`")));
                    }
                    grads.insert(name.clone(), g);
                }
                _ => node.adjoint = adj,
            }
        }
        Ok(Gradients(grads))
    }

    /// Appends nodes computing `∂ Σᵢ output / ∂ wrt` symbolically and returns
    /// the node holding that gradient. Because the new nodes are ordinary
    /// graph nodes, a later [`Graph::backward`] differentiates through them,
    /// which yields second-order terms.
    pub fn grad_node(&mut self, output: NodeId, wrt: NodeId) -> Result<NodeId> {
        self.evaluate_pending()?;
        let n = output.0 + 1;
        let mut depends = vec![false; n];
        for i in 0..n {
            depends[i] = i == wrt.0 || self.nodes[i].inputs.iter().any(|j| depends[j.0]);
        }
        let one = self.push_const_scalar(1.0);
        let seed = self.push(Op::Expand { mean: false }, &[one, output]);
        let mut adjoints: Vec<Option<NodeId>> = vec![None; n];
        adjoints[output.0] = Some(seed);
        for i in (wrt.0 + 1..n).rev() {
            if !depends[i] {
                continue;
            }
            let Some(g) = adjoints[i] else { continue };
            let op = self.nodes[i].op.clone();
            let inputs = self.nodes[i].inputs.clone();
            for (k, j) in inputs.iter().enumerate() {
                if !depends[j.0] {
                    continue;
                }
                if let Some(d) = self.symbolic_vjp(&op, k, &inputs, g)? {
                    adjoints[j.0] = Some(match adjoints[j.0] {
                        Some(acc) => self.add(acc, d),
                        None => d,
                    });
                }
            }
        }
        let grad = match adjoints[wrt.0] {
            Some(g) => g,
            None => self.scale(wrt, 0.0),
        };
        self.evaluate_pending()?;
        Ok(grad)
    }

    /// Appends the per-row Euclidean norm of `∇_x output`, where `output` holds
    /// one scalar per row of `x`. The returned node is differentiable with
    /// respect to every parameter the output depends on.
    pub fn input_grad_norm(&mut self, output: NodeId, x: NodeId) -> Result<NodeId> {
        self.evaluate_pending()?;
        let (rows_out, cols_out) = self.nodes[output.0].value.as_ref().unwrap().dims2();
        let rows_x = self.nodes[x.0].value.as_ref().unwrap().rows();
        if cols_out != 1 || rows_out != rows_x {
            return Err(Error::Contract(format!(
                "input gradient norm needs one output per input row, got {rows_out}×{cols_out} for {rows_x} rows"
            )));
        }
        let g = self.grad_node(output, x)?;
        let norm = self.row_norm(g);
        self.evaluate_pending()?;
        Ok(norm)
    }

    fn push_const_scalar(&mut self, v: f64) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op: Op::Leaf {
                name: format!("__const{}", id.0),
                kind: LeafKind::Const,
            },
            inputs: Vec::new(),
            value: Some(Tensor::scalar(v)),
            adjoint: None,
        });
        id
    }

    fn symbolic_vjp(
        &mut self,
        op: &Op,
        which: usize,
        inputs: &[NodeId],
        g: NodeId,
    ) -> Result<Option<NodeId>> {
        let x = |k: usize| inputs[k];
        let d = match (op, which) {
            (Op::MatMul { trans_a, trans_b }, _) => {
                let (a, b) = (x(0), x(1));
                match (trans_a, trans_b, which) {
                    (false, false, 0) => self.matmul_t(g, b, false, true),
                    (false, false, _) => self.matmul_t(a, g, true, false),
                    (false, true, 0) => self.matmul_t(g, b, false, false),
                    (false, true, _) => self.matmul_t(g, a, true, false),
                    (true, false, 0) => self.matmul_t(b, g, false, true),
                    (true, false, _) => self.matmul_t(a, g, false, false),
                    (true, true, 0) => self.matmul_t(b, g, true, true),
                    (true, true, _) => self.matmul_t(g, a, true, true),
                }
            }
            (Op::Add, _) | (Op::AddBias, 0) | (Op::Shift(_), _) | (Op::Sub, 0) => g,
            (Op::Sub, _) => self.scale(g, -1.0),
            (Op::Mul, 0) => self.mul(g, x(1)),
            (Op::Mul, _) => self.mul(g, x(0)),
            (Op::AddBias, _) => self.push(Op::SumRows, &[g]),
            (Op::Scale(c), _) => self.scale(g, *c),
            (Op::LeakyRelu { slope }, _) => {
                self.push(Op::LeakyReluMask { slope: *slope }, &[x(0), g])
            }
            (Op::LeakyReluMask { .. }, 0) => return Ok(None),
            (Op::LeakyReluMask { slope }, _) => {
                self.push(Op::LeakyReluMask { slope: *slope }, &[x(0), g])
            }
            (Op::Square, _) => {
                let two_x = self.scale(x(0), 2.0);
                self.mul(g, two_x)
            }
            (Op::Sum, _) => self.push(Op::Expand { mean: false }, &[g, x(0)]),
            (Op::Mean, _) => self.push(Op::Expand { mean: true }, &[g, x(0)]),
            (Op::SumRows, _) => self.push(Op::ExpandRows, &[g, x(0)]),
            (Op::Expand { mean }, 0) => {
                let s = self.sum(g);
                if *mean {
                    let n = self.nodes[x(1).0].value.as_ref().expect("evaluated").len();
                    self.scale(s, 1.0 / n as f64)
                } else {
                    s
                }
            }
            (Op::ExpandRows, 0) => self.push(Op::SumRows, &[g]),
            (Op::Expand { .. }, _) | (Op::ExpandRows, _) => return Ok(None),
            (Op::RowNorm, _) | (Op::Interpolate, _) => {
                return Err(Error::Contract(format!(
                    "symbolic derivative of `{}` is not available",
                    op.name()
                )))
            }
            (Op::Leaf { .. }, _) => unreachable!(),
        };
        Ok(Some(d))
    }
}
