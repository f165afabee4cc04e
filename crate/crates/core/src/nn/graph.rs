//! Eager reverse-mode autodiff over [`Tensor`] values.
//!
//! A [`Graph`] is a tape: every op computes its value immediately and records
//! enough structure for a single [`Graph::backward`] sweep in reverse
//! insertion order. All loops run in a fixed order, so a given graph produces
//! bit-identical values and gradients on every run. Matrix multiplication
//! accumulates row-locally (row i of the product reads only row i of the left
//! operand), which makes batched row computations bitwise equal to the same
//! rows computed one at a time.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    Leaf,
    /// a (R x K) times b (K x C).
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product.
    Mul(NodeId, NodeId),
    /// a (R x C) plus a 1 x C bias broadcast over rows.
    AddBias(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    ConcatCols(NodeId, NodeId),
    /// Columns start.. of the input; the width is the node's column count.
    SliceCols(NodeId, usize),
    /// Output row r is row `sources[r].1` of node `sources[r].0`.
    GatherRows(Vec<(NodeId, usize)>),
    /// Row r scaled by `weights[r]`.
    RowScale(NodeId, Vec<f64>),
    SumAll(NodeId),
    Scale(NodeId, f64),
    Abs(NodeId),
    /// Elementwise binary cross-entropy of logits against constant targets.
    BceWithLogits(NodeId, Tensor),
}

struct Node {
    op: Op,
    value: Tensor,
    grad: Option<Tensor>,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last backward target with respect to `id`, if any
    /// reached it.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    pub fn leaf(&mut self, value: Tensor, needs_grad: bool) -> NodeId {
        self.push(Op::Leaf, value, needs_grad)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, false)
    }

    fn push(&mut self, op: Op, value: Tensor, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            grad: None,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    fn shape(&self, id: NodeId) -> (usize, usize) {
        self.nodes[id.0].value.shape()
    }

    fn require_same_shape(&self, what: &str, a: NodeId, b: NodeId) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::invalid(format!(
                "{what}: shape {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(Error::invalid(format!(
                "matmul: {ar} x {ac} times {br} x {bc}"
            )));
        }
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[b.0].value;
        let mut out = Tensor::zeros(ar, bc);
        for i in 0..ar {
            let arow = &va.data[i * ac..(i + 1) * ac];
            let orow = &mut out.data[i * bc..(i + 1) * bc];
            for (k, &aik) in arow.iter().enumerate() {
                let brow = &vb.data[k * bc..(k + 1) * bc];
                for j in 0..bc {
                    orow[j] += aik * brow[j];
                }
            }
        }
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::MatMul(a, b), out, needs))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.require_same_shape("add", a, b)?;
        let out = self.zip(a, b, |x, y| x + y);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Add(a, b), out, needs))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.require_same_shape("sub", a, b)?;
        let out = self.zip(a, b, |x, y| x - y);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Sub(a, b), out, needs))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.require_same_shape("mul", a, b)?;
        let out = self.zip(a, b, |x, y| x * y);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Mul(a, b), out, needs))
    }

    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (_, ac) = self.shape(a);
        let (br, bc) = self.shape(bias);
        if br != 1 || bc != ac {
            return Err(Error::invalid(format!(
                "add_bias: bias {br} x {bc} against {} columns",
                ac
            )));
        }
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[bias.0].value;
        let mut out = va.clone();
        for r in 0..out.rows {
            let row = &mut out.data[r * ac..(r + 1) * ac];
            for j in 0..ac {
                row[j] += vb.data[j];
            }
        }
        let needs = self.needs(a) || self.needs(bias);
        Ok(self.push(Op::AddBias(a, bias), out, needs))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let out = self.map(a, sigmoid);
        let needs = self.needs(a);
        self.push(Op::Sigmoid(a), out, needs)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let out = self.map(a, f64::tanh);
        let needs = self.needs(a);
        self.push(Op::Tanh(a), out, needs)
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let out = self.map(a, f64::abs);
        let needs = self.needs(a);
        self.push(Op::Abs(a), out, needs)
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ar != br {
            return Err(Error::invalid(format!(
                "concat_cols: {ar} rows vs {br} rows"
            )));
        }
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[b.0].value;
        let mut out = Tensor::zeros(ar, ac + bc);
        for r in 0..ar {
            let dst = &mut out.data[r * (ac + bc)..(r + 1) * (ac + bc)];
            dst[..ac].copy_from_slice(&va.data[r * ac..(r + 1) * ac]);
            dst[ac..].copy_from_slice(&vb.data[r * bc..(r + 1) * bc]);
        }
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(Op::ConcatCols(a, b), out, needs))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let (ar, ac) = self.shape(a);
        if start > end || end > ac {
            return Err(Error::invalid(format!(
                "slice_cols: {start}..{end} of {ac} columns"
            )));
        }
        let va = &self.nodes[a.0].value;
        let w = end - start;
        let mut out = Tensor::zeros(ar, w);
        for r in 0..ar {
            out.data[r * w..(r + 1) * w]
                .copy_from_slice(&va.data[r * ac + start..r * ac + end]);
        }
        let needs = self.needs(a);
        Ok(self.push(Op::SliceCols(a, start), out, needs))
    }

    /// Assembles a matrix whose row r is row `sources[r].1` of node
    /// `sources[r].0`. All sources must share a column count.
    pub fn gather_rows(&mut self, sources: Vec<(NodeId, usize)>) -> Result<NodeId> {
        if sources.is_empty() {
            return Err(Error::invalid("gather_rows: no sources"));
        }
        let cols = self.shape(sources[0].0).1;
        let mut out = Tensor::zeros(sources.len(), cols);
        let mut needs = false;
        for (r, &(src, row)) in sources.iter().enumerate() {
            let (sr, sc) = self.shape(src);
            if sc != cols {
                return Err(Error::invalid(format!(
                    "gather_rows: {sc} columns vs {cols}"
                )));
            }
            if row >= sr {
                return Err(Error::invalid(format!(
                    "gather_rows: row {row} of {sr}"
                )));
            }
            out.data[r * cols..(r + 1) * cols]
                .copy_from_slice(&self.nodes[src.0].value.data[row * sc..(row + 1) * sc]);
            needs |= self.needs(src);
        }
        Ok(self.push(Op::GatherRows(sources), out, needs))
    }

    pub fn row_scale(&mut self, a: NodeId, weights: Vec<f64>) -> Result<NodeId> {
        let (ar, ac) = self.shape(a);
        if weights.len() != ar {
            return Err(Error::invalid(format!(
                "row_scale: {} weights for {ar} rows",
                weights.len()
            )));
        }
        let va = &self.nodes[a.0].value;
        let mut out = va.clone();
        for r in 0..ar {
            for j in 0..ac {
                out.data[r * ac + j] *= weights[r];
            }
        }
        let needs = self.needs(a);
        Ok(self.push(Op::RowScale(a, weights), out, needs))
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.nodes[a.0].value.data.iter().sum();
        let needs = self.needs(a);
        self.push(Op::SumAll(a), Tensor::row_vector(&[s]), needs)
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let out = self.map(a, |x| x * k);
        let needs = self.needs(a);
        self.push(Op::Scale(a, k), out, needs)
    }

    /// Elementwise binary cross-entropy between logits and targets in [0, 1],
    /// in the overflow-safe form max(z, 0) - z y + ln(1 + exp(-|z|)).
    pub fn bce_with_logits(&mut self, logits: NodeId, targets: Tensor) -> Result<NodeId> {
        if self.shape(logits) != targets.shape() {
            return Err(Error::invalid(format!(
                "bce_with_logits: logits {:?} vs targets {:?}",
                self.shape(logits),
                targets.shape()
            )));
        }
        let vz = &self.nodes[logits.0].value;
        let mut out = Tensor::zeros(vz.rows, vz.cols);
        for (o, (&z, &y)) in out.data.iter_mut().zip(vz.data.iter().zip(&targets.data)) {
            *o = z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        }
        let needs = self.needs(logits);
        Ok(self.push(Op::BceWithLogits(logits, targets), out, needs))
    }

    fn map(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let va = &self.nodes[a.0].value;
        let mut out = va.clone();
        for v in &mut out.data {
            *v = f(*v);
        }
        out
    }

    fn zip(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[b.0].value;
        let mut out = va.clone();
        for (o, &y) in out.data.iter_mut().zip(&vb.data) {
            *o = f(*o, y);
        }
        out
    }

    fn accumulate(&mut self, id: NodeId, delta: Tensor) {
        let node = &mut self.nodes[id.0];
        match &mut node.grad {
            Some(g) => {
                for (gi, di) in g.data.iter_mut().zip(&delta.data) {
                    *gi += di;
                }
            }
            None => node.grad = Some(delta),
        }
    }

    /// Accumulates gradients of the scalar `target` into every node that
    /// needs them, replacing gradients from any previous sweep.
    pub fn backward(&mut self, target: NodeId) -> Result<()> {
        if self.shape(target) != (1, 1) {
            return Err(Error::invalid(format!(
                "backward target must be 1 x 1, got {:?}",
                self.shape(target)
            )));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.nodes[target.0].grad = Some(Tensor::row_vector(&[1.0]));
        for idx in (0..=target.0).rev() {
            if !self.nodes[idx].needs_grad {
                continue;
            }
            let Some(g) = self.nodes[idx].grad.clone() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (a, b) = (*a, *b);
                    let (ar, ac) = self.shape(a);
                    let bc = self.shape(b).1;
                    if self.needs(a) {
                        // dA = dC . B^T
                        let vb = &self.nodes[b.0].value;
                        let mut da = Tensor::zeros(ar, ac);
                        for i in 0..ar {
                            for k in 0..ac {
                                let mut s = 0.0;
                                for j in 0..bc {
                                    s += g.data[i * bc + j] * vb.data[k * bc + j];
                                }
                                da.data[i * ac + k] = s;
                            }
                        }
                        self.accumulate(a, da);
                    }
                    if self.needs(b) {
                        // dB = A^T . dC
                        let va = &self.nodes[a.0].value;
                        let mut db = Tensor::zeros(ac, bc);
                        for i in 0..ar {
                            for k in 0..ac {
                                let aik = va.data[i * ac + k];
                                for j in 0..bc {
                                    db.data[k * bc + j] += aik * g.data[i * bc + j];
                                }
                            }
                        }
                        self.accumulate(b, db);
                    }
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.needs(a) {
                        self.accumulate(a, g.clone());
                    }
                    if self.needs(b) {
                        self.accumulate(b, g);
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.needs(a) {
                        self.accumulate(a, g.clone());
                    }
                    if self.needs(b) {
                        let mut neg = g;
                        for v in &mut neg.data {
                            *v = -*v;
                        }
                        self.accumulate(b, neg);
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.needs(a) {
                        let vb = &self.nodes[b.0].value;
                        let mut da = g.clone();
                        for (d, &y) in da.data.iter_mut().zip(&vb.data) {
                            *d *= y;
                        }
                        self.accumulate(a, da);
                    }
                    if self.needs(b) {
                        let va = &self.nodes[a.0].value;
                        let mut db = g;
                        for (d, &x) in db.data.iter_mut().zip(&va.data) {
                            *d *= x;
                        }
                        self.accumulate(b, db);
                    }
                }
                Op::AddBias(a, bias) => {
                    let (a, bias) = (*a, *bias);
                    let cols = g.cols;
                    if self.needs(bias) {
                        let mut db = Tensor::zeros(1, cols);
                        for r in 0..g.rows {
                            for j in 0..cols {
                                db.data[j] += g.data[r * cols + j];
                            }
                        }
                        self.accumulate(bias, db);
                    }
                    if self.needs(a) {
                        self.accumulate(a, g);
                    }
                }
                Op::Sigmoid(a) => {
                    let a = *a;
                    let mut da = g;
                    for (d, &s) in da.data.iter_mut().zip(&self.nodes[idx].value.data) {
                        *d *= s * (1.0 - s);
                    }
                    self.accumulate(a, da);
                }
                Op::Tanh(a) => {
                    let a = *a;
                    let mut da = g;
                    for (d, &t) in da.data.iter_mut().zip(&self.nodes[idx].value.data) {
                        *d *= 1.0 - t * t;
                    }
                    self.accumulate(a, da);
                }
                Op::Abs(a) => {
                    let a = *a;
                    let mut da = g;
                    for (d, &x) in da.data.iter_mut().zip(&self.nodes[a.0].value.data) {
                        *d *= if x > 0.0 {
                            1.0
                        } else if x < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                    }
                    self.accumulate(a, da);
                }
                Op::ConcatCols(a, b) => {
                    let (a, b) = (*a, *b);
                    let ac = self.shape(a).1;
                    let bc = self.shape(b).1;
                    if self.needs(a) {
                        let mut da = Tensor::zeros(g.rows, ac);
                        for r in 0..g.rows {
                            da.data[r * ac..(r + 1) * ac]
                                .copy_from_slice(&g.data[r * (ac + bc)..r * (ac + bc) + ac]);
                        }
                        self.accumulate(a, da);
                    }
                    if self.needs(b) {
                        let mut db = Tensor::zeros(g.rows, bc);
                        for r in 0..g.rows {
                            db.data[r * bc..(r + 1) * bc].copy_from_slice(
                                &g.data[r * (ac + bc) + ac..(r + 1) * (ac + bc)],
                            );
                        }
                        self.accumulate(b, db);
                    }
                }
                Op::SliceCols(a, start) => {
                    let (a, start) = (*a, *start);
                    let ac = self.shape(a).1;
                    let w = g.cols;
                    let mut da = Tensor::zeros(g.rows, ac);
                    for r in 0..g.rows {
                        da.data[r * ac + start..r * ac + start + w]
                            .copy_from_slice(&g.data[r * w..(r + 1) * w]);
                    }
                    self.accumulate(a, da);
                }
                Op::GatherRows(sources) => {
                    let sources = sources.clone();
                    let cols = g.cols;
                    for (r, (src, row)) in sources.into_iter().enumerate() {
                        if !self.needs(src) {
                            continue;
                        }
                        let sc = self.shape(src).1;
                        let mut delta = Tensor::zeros(self.shape(src).0, sc);
                        delta.data[row * sc..(row + 1) * sc]
                            .copy_from_slice(&g.data[r * cols..(r + 1) * cols]);
                        self.accumulate(src, delta);
                    }
                }
                Op::RowScale(a, weights) => {
                    let a = *a;
                    let weights = weights.clone();
                    let mut da = g;
                    for r in 0..da.rows {
                        for j in 0..da.cols {
                            da.data[r * da.cols + j] *= weights[r];
                        }
                    }
                    self.accumulate(a, da);
                }
                Op::SumAll(a) => {
                    let a = *a;
                    let (ar, ac) = self.shape(a);
                    let gv = g.data[0];
                    self.accumulate(a, Tensor::from_fn(ar, ac, |_, _| gv));
                }
                Op::Scale(a, k) => {
                    let (a, k) = (*a, *k);
                    let mut da = g;
                    for v in &mut da.data {
                        *v *= k;
                    }
                    self.accumulate(a, da);
                }
                Op::BceWithLogits(a, targets) => {
                    let a = *a;
                    let mut da = g;
                    for ((d, &z), &y) in da
                        .data
                        .iter_mut()
                        .zip(&self.nodes[a.0].value.data)
                        .zip(&targets.data)
                    {
                        *d *= sigmoid(z) - y;
                    }
                    self.accumulate(a, da);
                }
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
        Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0))
    }

    /// Checks analytic gradients of a scalar-valued builder against central
    /// finite differences on every entry of every input.
    fn check_gradients(
        shapes: &[(usize, usize)],
        build: impl Fn(&mut Graph, &[NodeId]) -> NodeId,
        seed: u64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Tensor> = shapes
            .iter()
            .map(|&(r, c)| random_tensor(&mut rng, r, c))
            .collect();

        let eval = |tensors: &[Tensor]| -> (f64, Vec<Option<Tensor>>) {
            let mut g = Graph::new();
            let ids: Vec<NodeId> = tensors.iter().map(|t| g.leaf(t.clone(), true)).collect();
            let out = build(&mut g, &ids);
            assert_eq!(g.value(out).shape(), (1, 1), "builder must end in a scalar");
            let v = g.value(out).data[0];
            g.backward(out).unwrap();
            let grads = ids.iter().map(|&id| g.grad(id).cloned()).collect();
            (v, grads)
        };

        let (_, grads) = eval(&inputs);
        let eps = 1e-5;
        for (ti, shape) in shapes.iter().enumerate() {
            let grad = grads[ti]
                .as_ref()
                .unwrap_or_else(|| panic!("no gradient reached input {ti}"));
            let gmax = grad.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for e in 0..shape.0 * shape.1 {
                let mut plus = inputs.clone();
                plus[ti].data[e] += eps;
                let mut minus = inputs.clone();
                minus[ti].data[e] -= eps;
                let fd = (eval(&plus).0 - eval(&minus).0) / (2.0 * eps);
                let ga = grad.data[e];
                let denom = ga.abs().max(fd.abs()).max(1e-3 * gmax).max(1e-8);
                let rel = (ga - fd).abs() / denom;
                assert!(
                    rel < 1e-6,
                    "input {ti} entry {e}: analytic {ga} vs fd {fd} (rel {rel:.3e})"
                );
            }
        }
    }

    #[test]
    fn matmul_values_and_gradients() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let b = g.constant(Tensor::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap());
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.value(c).data, vec![58.0, 64.0, 139.0, 154.0]);
        assert!(g.matmul(a, a).is_err());

        check_gradients(
            &[(2, 3), (3, 4)],
            |g, ids| {
                let m = g.matmul(ids[0], ids[1]).unwrap();
                g.sum_all(m)
            },
            1,
        );
    }

    #[test]
    fn elementwise_op_gradients() {
        check_gradients(
            &[(2, 3), (2, 3)],
            |g, ids| {
                let s = g.add(ids[0], ids[1]).unwrap();
                let d = g.sub(s, ids[1]).unwrap();
                let m = g.mul(d, ids[0]).unwrap();
                g.sum_all(m)
            },
            2,
        );
        check_gradients(
            &[(2, 2)],
            |g, ids| {
                let s = g.sigmoid(ids[0]);
                let t = g.tanh(s);
                let k = g.scale(t, 1.7);
                g.sum_all(k)
            },
            3,
        );
    }

    #[test]
    fn abs_gradient_away_from_zero() {
        // Entries are clear of the kink at zero with overwhelming
        // probability; seed chosen so they are.
        check_gradients(
            &[(3, 3)],
            |g, ids| {
                let a = g.abs(ids[0]);
                g.sum_all(a)
            },
            4,
        );
    }

    #[test]
    fn bias_and_row_scale_gradients() {
        check_gradients(
            &[(3, 4), (1, 4)],
            |g, ids| {
                let b = g.add_bias(ids[0], ids[1]).unwrap();
                let w = g.row_scale(b, vec![0.5, 2.0, -1.0]).unwrap();
                g.sum_all(w)
            },
            5,
        );
    }

    #[test]
    fn shape_ops_values() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let b = g.constant(Tensor::from_vec(2, 1, vec![5.0, 6.0]).unwrap());
        let cat = g.concat_cols(a, b).unwrap();
        assert_eq!(g.value(cat).data, vec![1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let left = g.slice_cols(cat, 0, 2).unwrap();
        assert_eq!(g.value(left).data, vec![1.0, 2.0, 3.0, 4.0]);
        let picked = g.gather_rows(vec![(cat, 1), (cat, 0), (cat, 1)]).unwrap();
        assert_eq!(g.value(picked).rows, 3);
        assert_eq!(g.value(picked).row(0), &[3.0, 4.0, 6.0]);
        assert_eq!(g.value(picked).row(1), &[1.0, 2.0, 5.0]);
        assert!(g.slice_cols(cat, 2, 1).is_err());
        assert!(g.gather_rows(vec![(cat, 9)]).is_err());
    }

    #[test]
    fn shape_op_gradients() {
        check_gradients(
            &[(2, 3), (2, 2)],
            |g, ids| {
                let cat = g.concat_cols(ids[0], ids[1]).unwrap();
                let sl = g.slice_cols(cat, 1, 4).unwrap();
                let gathered = g
                    .gather_rows(vec![(sl, 0), (sl, 1), (sl, 0), (sl, 1)])
                    .unwrap();
                g.sum_all(gathered)
            },
            6,
        );
    }

    #[test]
    fn bce_matches_naive_form_and_survives_extreme_logits() {
        let mut g = Graph::new();
        let z = g.constant(Tensor::row_vector(&[0.3, -1.2, 2.5]));
        let y = Tensor::row_vector(&[1.0, 0.0, 0.5]);
        let out = g.bce_with_logits(z, y.clone()).unwrap();
        for j in 0..3 {
            let zj = g.value(z).data[j];
            let yj = y.data[j];
            let p = sigmoid(zj);
            let naive = -(yj * p.ln() + (1.0 - yj) * (1.0 - p).ln());
            assert!((g.value(out).data[j] - naive).abs() < 1e-12);
        }

        let mut g = Graph::new();
        let z = g.leaf(Tensor::row_vector(&[600.0, -600.0]), true);
        let out = g.bce_with_logits(z, Tensor::row_vector(&[0.0, 1.0])).unwrap();
        assert_eq!(g.value(out).data[0], 600.0);
        assert_eq!(g.value(out).data[1], 600.0);
        let s = g.sum_all(out);
        g.backward(s).unwrap();
        assert!(g.grad(z).unwrap().is_finite());
    }

    #[test]
    fn bce_gradients() {
        check_gradients(
            &[(2, 3)],
            |g, ids| {
                let targets = Tensor::from_vec(2, 3, vec![1.0, 0.0, 1.0, 0.0, 0.5, 1.0]).unwrap();
                let b = g.bce_with_logits(ids[0], targets).unwrap();
                g.sum_all(b)
            },
            7,
        );
    }

    #[test]
    fn gradients_accumulate_across_reuse() {
        // f(x) = sum(x * x) + sum(x): both paths must add up.
        let mut g = Graph::new();
        let x = g.leaf(Tensor::row_vector(&[3.0, -2.0]), true);
        let sq = g.mul(x, x).unwrap();
        let s1 = g.sum_all(sq);
        let s2 = g.sum_all(x);
        let total = g.add(s1, s2).unwrap();
        g.backward(total).unwrap();
        assert_eq!(g.grad(x).unwrap().data, vec![7.0, -3.0]);
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::row_vector(&[1.0]), true);
        let c = g.constant(Tensor::row_vector(&[2.0]));
        let m = g.mul(x, c).unwrap();
        let s = g.sum_all(m);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().data, vec![2.0]);
        assert!(g.grad(c).is_none());
    }

    #[test]
    fn backward_requires_scalar_and_resets_between_sweeps() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::row_vector(&[1.0, 2.0]), true);
        assert!(g.backward(x).is_err());
        let s = g.sum_all(x);
        g.backward(s).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap().data, vec![1.0, 1.0]);
    }

    #[test]
    fn deterministic_rebuild_is_bitwise() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut g = Graph::new();
            let a = g.leaf(random_tensor(&mut rng, 4, 5), true);
            let b = g.leaf(random_tensor(&mut rng, 5, 3), true);
            let m = g.matmul(a, b).unwrap();
            let t = g.tanh(m);
            let s = g.sum_all(t);
            g.backward(s).unwrap();
            (
                g.value(s).data[0].to_bits(),
                g.grad(a).unwrap().data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            )
        };
        assert_eq!(run(), run());
    }
}
