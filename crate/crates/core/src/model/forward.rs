//! Forward evaluation and the training loss graph.
//!
//! Encoding, teacher-forced decoding, and the loss run through the autodiff
//! [`Graph`] so gradients come from one code path. Free-running decoding and
//! the standalone cell/step helpers run on plain tensors with the same loop
//! order, so their values agree with the graph path to the last bit.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::Cuboid;
use crate::nn::{sigmoid, Graph, NodeId, Tensor};
use crate::tree::{compose_params, params_of, SpatialTree};

use super::{Affine, CellParams, NodeFeature, ParamSpace, TreeAutoencoder, PARAM_DIM};

/// Loss shape knobs, a stable subset of the full training config.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    /// Per-level decay: nodes at level m weigh gamma^(L-m), normalized.
    pub level_weight_gamma: f64,
    /// Weight of the leaf-indicator cross-entropy term.
    pub bce_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            level_weight_gamma: 0.8,
            bce_weight: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.level_weight_gamma > 0.0 && self.level_weight_gamma <= 1.0) {
            return Err(Error::invalid(format!(
                "level_weight_gamma {} outside (0, 1]",
                self.level_weight_gamma
            )));
        }
        if !(self.bce_weight >= 0.0 && self.bce_weight.is_finite()) {
            return Err(Error::invalid(format!(
                "bce_weight {} must be finite and nonnegative",
                self.bce_weight
            )));
        }
        Ok(())
    }
}

/// Prediction for one non-root node under teacher forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePrediction {
    pub node: usize,
    pub params: [f64; 6],
    pub leaf_logit: f64,
}

/// One child emitted by a single decode step.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildPrediction {
    pub params: [f64; 6],
    pub leaf_logit: f64,
    pub feature: NodeFeature,
}

/// A child's (params, feature) input to one encoder merge.
pub type ChildInput = ([f64; 6], NodeFeature);

// ---------------------------------------------------------------------------
// Shared lookups

/// The geometric params the network reads and predicts for a non-root node.
fn node_params(tree: &SpatialTree, idx: usize, space: ParamSpace) -> [f64; 6] {
    match space {
        ParamSpace::Relative => tree.nodes[idx].relative.as_array(),
        ParamSpace::Absolute => params_of(&tree.nodes[idx].cuboid),
    }
}

/// Params fed to the decoder at node `idx`. The root has no parent, so its
/// step always receives its absolute (normalized-frame) params; free-running
/// generation seeds the same slot from `root_params_mean`.
fn decode_input_params(tree: &SpatialTree, idx: usize, space: ParamSpace) -> [f64; 6] {
    if idx == tree.root {
        params_of(&tree.nodes[idx].cuboid)
    } else {
        node_params(tree, idx, space)
    }
}

/// Weight per node level m: gamma^(L-m), normalized to sum 1 over the
/// non-root levels 0..L that carry predicted nodes.
fn level_weights(tree: &SpatialTree, gamma: f64) -> Vec<f64> {
    let l = tree.height();
    let mut w: Vec<f64> = (0..l).map(|m| gamma.powi((l - m) as i32)).collect();
    let z: f64 = w.iter().sum();
    for v in &mut w {
        *v /= z;
    }
    w
}

/// Depth from the root (root = 0). Children precede parents in creation
/// order, so a reverse scan sees every parent before its children.
fn node_depths(tree: &SpatialTree) -> Vec<usize> {
    let mut depth = vec![0usize; tree.nodes.len()];
    for idx in (0..tree.nodes.len()).rev() {
        if let Some([l, r]) = tree.nodes[idx].children {
            depth[l] = depth[idx] + 1;
            depth[r] = depth[idx] + 1;
        }
    }
    depth
}

fn bce_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

// ---------------------------------------------------------------------------
// Graph construction

struct ModelNodes {
    enc_wx: NodeId,
    enc_wh: NodeId,
    enc_b: NodeId,
    dec_wx: NodeId,
    dec_wh: NodeId,
    dec_b: NodeId,
    lift_h_w: NodeId,
    lift_h_b: NodeId,
    lift_c_w: NodeId,
    lift_c_b: NodeId,
    head_w: NodeId,
    head_b: NodeId,
}

impl ModelNodes {
    /// Same order as [`TreeAutoencoder::named_params`].
    fn ordered(&self) -> [NodeId; 12] {
        [
            self.enc_wx,
            self.enc_wh,
            self.enc_b,
            self.dec_wx,
            self.dec_wh,
            self.dec_b,
            self.lift_h_w,
            self.lift_h_b,
            self.lift_c_w,
            self.lift_c_b,
            self.head_w,
            self.head_b,
        ]
    }
}

fn lift_model(g: &mut Graph, m: &TreeAutoencoder, needs_grad: bool) -> ModelNodes {
    ModelNodes {
        enc_wx: g.leaf(m.encoder.wx.clone(), needs_grad),
        enc_wh: g.leaf(m.encoder.wh.clone(), needs_grad),
        enc_b: g.leaf(m.encoder.b.clone(), needs_grad),
        dec_wx: g.leaf(m.decoder.wx.clone(), needs_grad),
        dec_wh: g.leaf(m.decoder.wh.clone(), needs_grad),
        dec_b: g.leaf(m.decoder.b.clone(), needs_grad),
        lift_h_w: g.leaf(m.lift_h.w.clone(), needs_grad),
        lift_h_b: g.leaf(m.lift_h.b.clone(), needs_grad),
        lift_c_w: g.leaf(m.lift_c.w.clone(), needs_grad),
        lift_c_b: g.leaf(m.lift_c.b.clone(), needs_grad),
        head_w: g.leaf(m.head.w.clone(), needs_grad),
        head_b: g.leaf(m.head.b.clone(), needs_grad),
    }
}

fn affine_nodes(g: &mut Graph, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
    let y = g.matmul(x, w)?;
    g.add_bias(y, b)
}

/// Gates chunked [i, f, g, o]; c' = f c + i g, h' = o tanh(c').
fn cell_nodes(
    g: &mut Graph,
    x: NodeId,
    h: NodeId,
    c: NodeId,
    wx: NodeId,
    wh: NodeId,
    b: NodeId,
    state: usize,
) -> Result<(NodeId, NodeId)> {
    let zx = g.matmul(x, wx)?;
    let zh = g.matmul(h, wh)?;
    let z = g.add(zx, zh)?;
    let z = g.add_bias(z, b)?;
    let zi = g.slice_cols(z, 0, state)?;
    let i = g.sigmoid(zi);
    let zf = g.slice_cols(z, state, 2 * state)?;
    let f = g.sigmoid(zf);
    let zg = g.slice_cols(z, 2 * state, 3 * state)?;
    let gg = g.tanh(zg);
    let zo = g.slice_cols(z, 3 * state, 4 * state)?;
    let o = g.sigmoid(zo);
    let fc = g.mul(f, c)?;
    let ig = g.mul(i, gg)?;
    let c2 = g.add(fc, ig)?;
    let tc = g.tanh(c2);
    let h2 = g.mul(o, tc)?;
    Ok((h2, c2))
}

/// (h tensor, c tensor, row) locating one node's feature inside the graph.
type FeatRef = (NodeId, NodeId, usize);

/// Bottom-up pass over all trees at once, level by level. Returns each
/// tree's root feature location.
fn build_encode(
    g: &mut Graph,
    mn: &ModelNodes,
    model: &TreeAutoencoder,
    trees: &[&SpatialTree],
) -> Result<Vec<FeatRef>> {
    let hidden = model.config.hidden;
    let space = model.config.param_space;
    let zero = g.constant(Tensor::zeros(1, hidden));
    let mut feat: Vec<Vec<FeatRef>> = trees
        .iter()
        .map(|t| vec![(zero, zero, 0); t.nodes.len()])
        .collect();
    let max_levels = trees.iter().map(|t| t.height()).max().unwrap_or(0);
    for k in 0..max_levels {
        let mut entries: Vec<(usize, [usize; 3])> = Vec::new();
        for (ti, t) in trees.iter().enumerate() {
            if k < t.levels.len() {
                entries.extend(t.levels[k].rows.iter().map(|&row| (ti, row)));
            }
        }
        if entries.is_empty() {
            continue;
        }
        let n = entries.len();
        let mut halves = Vec::with_capacity(2);
        for side in 0..2 {
            let params = Tensor::from_fn(n, PARAM_DIM, |r, c| {
                let (ti, row) = entries[r];
                node_params(trees[ti], row[side], space)[c]
            });
            let p = g.constant(params);
            let h_src: Vec<(NodeId, usize)> = entries
                .iter()
                .map(|&(ti, row)| {
                    let (fh, _, r) = feat[ti][row[side]];
                    (fh, r)
                })
                .collect();
            let c_src: Vec<(NodeId, usize)> = entries
                .iter()
                .map(|&(ti, row)| {
                    let (_, fc, r) = feat[ti][row[side]];
                    (fc, r)
                })
                .collect();
            let h = g.gather_rows(h_src)?;
            let c = g.gather_rows(c_src)?;
            halves.push(cell_nodes(g, p, h, c, mn.enc_wx, mn.enc_wh, mn.enc_b, hidden)?);
        }
        let h_p = g.add(halves[0].0, halves[1].0)?;
        let c_p = g.add(halves[0].1, halves[1].1)?;
        for (i, &(ti, row)) in entries.iter().enumerate() {
            feat[ti][row[2]] = (h_p, c_p, i);
        }
    }
    Ok(trees
        .iter()
        .enumerate()
        .map(|(ti, t)| feat[ti][t.root])
        .collect())
}

struct DecodeBuild {
    /// Per tree, per node: (head output tensor, row) for every non-root node.
    preds: Vec<Vec<Option<(NodeId, usize)>>>,
    loss: Option<NodeId>,
}

/// Top-down pass grouped by depth from the root; optionally assembles the
/// weighted reconstruction loss alongside.
fn build_decode(
    g: &mut Graph,
    mn: &ModelNodes,
    model: &TreeAutoencoder,
    trees: &[&SpatialTree],
    roots: &[FeatRef],
    loss_cfg: Option<&LossConfig>,
) -> Result<DecodeBuild> {
    let hidden = model.config.hidden;
    let space = model.config.param_space;
    let depths: Vec<Vec<usize>> = trees.iter().map(|t| node_depths(t)).collect();
    let weights: Vec<Vec<f64>> = match loss_cfg {
        Some(cfg) => trees
            .iter()
            .map(|t| level_weights(t, cfg.level_weight_gamma))
            .collect(),
        None => Vec::new(),
    };
    let mut dfeat: Vec<Vec<Option<FeatRef>>> = trees
        .iter()
        .map(|t| vec![None; t.nodes.len()])
        .collect();
    let mut preds: Vec<Vec<Option<(NodeId, usize)>>> = trees
        .iter()
        .map(|t| vec![None; t.nodes.len()])
        .collect();
    for (ti, t) in trees.iter().enumerate() {
        dfeat[ti][t.root] = Some(roots[ti]);
    }
    let mut max_depth = 0usize;
    for (ti, t) in trees.iter().enumerate() {
        for i in 0..t.nodes.len() {
            if t.nodes[i].children.is_some() {
                max_depth = max_depth.max(depths[ti][i]);
            }
        }
    }

    let mut terms: Vec<NodeId> = Vec::new();
    for d in 0..=max_depth {
        let mut entries: Vec<(usize, usize)> = Vec::new();
        for (ti, t) in trees.iter().enumerate() {
            for idx in 0..t.nodes.len() {
                if t.nodes[idx].children.is_some() && depths[ti][idx] == d {
                    entries.push((ti, idx));
                }
            }
        }
        if entries.is_empty() {
            continue;
        }
        let n = entries.len();
        let params = Tensor::from_fn(n, PARAM_DIM, |r, c| {
            let (ti, f) = entries[r];
            decode_input_params(trees[ti], f, space)[c]
        });
        let p_f = g.constant(params);
        let h_src: Vec<(NodeId, usize)> = entries
            .iter()
            .map(|&(ti, f)| {
                let (fh, _, r) = dfeat[ti][f].expect("parent decoded before child");
                (fh, r)
            })
            .collect();
        let c_src: Vec<(NodeId, usize)> = entries
            .iter()
            .map(|&(ti, f)| {
                let (_, fc, r) = dfeat[ti][f].expect("parent decoded before child");
                (fc, r)
            })
            .collect();
        let h_f = g.gather_rows(h_src)?;
        let c_f = g.gather_rows(c_src)?;
        let hc = g.concat_cols(h_f, c_f)?;
        let x = g.concat_cols(p_f, hc)?;
        let s_h = affine_nodes(g, h_f, mn.lift_h_w, mn.lift_h_b)?;
        let s_c = affine_nodes(g, c_f, mn.lift_c_w, mn.lift_c_b)?;
        let (h_lr, c_lr) = cell_nodes(g, x, s_h, s_c, mn.dec_wx, mn.dec_wh, mn.dec_b, 2 * hidden)?;
        for side in 0..2 {
            let (lo, hi) = (side * hidden, (side + 1) * hidden);
            let h_child = g.slice_cols(h_lr, lo, hi)?;
            let c_child = g.slice_cols(c_lr, lo, hi)?;
            let y = affine_nodes(g, h_child, mn.head_w, mn.head_b)?;
            for (i, &(ti, f)) in entries.iter().enumerate() {
                let child = trees[ti].nodes[f].children.expect("internal")[side];
                dfeat[ti][child] = Some((h_child, c_child, i));
                preds[ti][child] = Some((y, i));
            }
            if let Some(cfg) = loss_cfg {
                let targets = Tensor::from_fn(n, PARAM_DIM, |r, c| {
                    let (ti, f) = entries[r];
                    let child = trees[ti].nodes[f].children.expect("internal")[side];
                    node_params(trees[ti], child, space)[c]
                });
                let flags = Tensor::from_fn(n, 1, |r, _| {
                    let (ti, f) = entries[r];
                    let child = trees[ti].nodes[f].children.expect("internal")[side];
                    if trees[ti].nodes[child].is_leaf {
                        1.0
                    } else {
                        0.0
                    }
                });
                let w: Vec<f64> = entries
                    .iter()
                    .map(|&(ti, f)| {
                        let child = trees[ti].nodes[f].children.expect("internal")[side];
                        weights[ti][trees[ti].nodes[child].level]
                    })
                    .collect();
                let p6 = g.slice_cols(y, 0, PARAM_DIM)?;
                let tgt = g.constant(targets);
                let diff = g.sub(p6, tgt)?;
                let a = g.abs(diff);
                let rs = g.row_scale(a, w.clone())?;
                let l1 = g.sum_all(rs);
                let logit = g.slice_cols(y, PARAM_DIM, PARAM_DIM + 1)?;
                let bl = g.bce_with_logits(logit, flags)?;
                let rb = g.row_scale(bl, w)?;
                let bsum = g.sum_all(rb);
                let bterm = g.scale(bsum, cfg.bce_weight);
                let term = g.add(l1, bterm)?;
                terms.push(term);
            }
        }
    }
    let loss = match loss_cfg {
        Some(_) => {
            let mut total = terms[0];
            for &t in &terms[1..] {
                total = g.add(total, t)?;
            }
            Some(g.scale(total, 1.0 / trees.len() as f64))
        }
        None => None,
    };
    Ok(DecodeBuild { preds, loss })
}

// ---------------------------------------------------------------------------
// Public forward API

/// Root features of every tree, batched level-by-level across the forest.
/// Bitwise equal to encoding each tree alone: every op is row-local with a
/// fixed accumulation order.
pub fn encode_forest(model: &TreeAutoencoder, trees: &[&SpatialTree]) -> Result<Vec<NodeFeature>> {
    if trees.is_empty() {
        return Err(Error::invalid("encode_forest: empty forest"));
    }
    let mut g = Graph::new();
    let mn = lift_model(&mut g, model, false);
    let roots = build_encode(&mut g, &mn, model, trees)?;
    Ok(roots
        .into_iter()
        .map(|(hn, cn, r)| NodeFeature {
            hidden: g.value(hn).row(r).to_vec(),
            cell: g.value(cn).row(r).to_vec(),
        })
        .collect())
}

pub fn encode_tree(model: &TreeAutoencoder, tree: &SpatialTree) -> Result<NodeFeature> {
    Ok(encode_forest(model, &[tree])?.pop().expect("one tree in"))
}

/// One encoder merge over explicit (params, feature) child pairs.
pub fn encode_level(
    model: &TreeAutoencoder,
    pairs: &[(ChildInput, ChildInput)],
) -> Result<Vec<NodeFeature>> {
    let hidden = model.config.hidden;
    if pairs.is_empty() {
        return Err(Error::invalid("encode_level: no pairs"));
    }
    for (l, r) in pairs {
        for side in [l, r] {
            if side.1.hidden.len() != hidden || side.1.cell.len() != hidden {
                return Err(Error::invalid(format!(
                    "encode_level: feature size {} vs hidden {hidden}",
                    side.1.hidden.len()
                )));
            }
        }
    }
    let n = pairs.len();
    let mut g = Graph::new();
    let mn = lift_model(&mut g, model, false);
    let mut halves = Vec::with_capacity(2);
    for side in 0..2 {
        let pick = |r: usize| if side == 0 { &pairs[r].0 } else { &pairs[r].1 };
        let p = g.constant(Tensor::from_fn(n, PARAM_DIM, |r, c| pick(r).0[c]));
        let h = g.constant(Tensor::from_fn(n, hidden, |r, c| pick(r).1.hidden[c]));
        let c = g.constant(Tensor::from_fn(n, hidden, |r, c| pick(r).1.cell[c]));
        halves.push(cell_nodes(&mut g, p, h, c, mn.enc_wx, mn.enc_wh, mn.enc_b, hidden)?);
    }
    let h_p = g.add(halves[0].0, halves[1].0)?;
    let c_p = g.add(halves[0].1, halves[1].1)?;
    Ok((0..n)
        .map(|r| NodeFeature {
            hidden: g.value(h_p).row(r).to_vec(),
            cell: g.value(c_p).row(r).to_vec(),
        })
        .collect())
}

/// Teacher-forced predictions for every non-root node, in node-index order.
/// True parent params feed each step; features are the predicted ones.
pub fn decode_teacher_forced(
    model: &TreeAutoencoder,
    tree: &SpatialTree,
    root_feature: &NodeFeature,
) -> Result<Vec<NodePrediction>> {
    let hidden = model.config.hidden;
    if root_feature.hidden.len() != hidden || root_feature.cell.len() != hidden {
        return Err(Error::invalid(format!(
            "root feature size {} vs hidden {hidden}",
            root_feature.hidden.len()
        )));
    }
    let mut g = Graph::new();
    let mn = lift_model(&mut g, model, false);
    let hr = g.constant(Tensor::row_vector(&root_feature.hidden));
    let cr = g.constant(Tensor::row_vector(&root_feature.cell));
    let built = build_decode(&mut g, &mn, model, &[tree], &[(hr, cr, 0)], None)?;
    let mut out = Vec::with_capacity(tree.nodes.len() - 1);
    for (idx, slot) in built.preds[0].iter().enumerate() {
        if idx == tree.root {
            continue;
        }
        let (y, row) = slot.expect("every non-root node is predicted");
        let v = g.value(y).row(row);
        out.push(NodePrediction {
            node: idx,
            params: v[..PARAM_DIM].try_into().expect("six params"),
            leaf_logit: v[PARAM_DIM],
        });
    }
    Ok(out)
}

fn run_loss(
    model: &TreeAutoencoder,
    trees: &[&SpatialTree],
    cfg: &LossConfig,
    with_grads: bool,
) -> Result<(f64, Option<Vec<(&'static str, Tensor)>>)> {
    cfg.validate()?;
    if trees.is_empty() {
        return Err(Error::invalid("loss over an empty batch"));
    }
    let mut g = Graph::new();
    let mn = lift_model(&mut g, model, with_grads);
    let roots = build_encode(&mut g, &mn, model, trees)?;
    let built = build_decode(&mut g, &mn, model, trees, &roots, Some(cfg))?;
    let loss = built.loss.expect("loss requested");
    let value = g.value(loss).data[0];
    if !value.is_finite() {
        return Err(Error::TrainingDiverged(format!("loss is {value}")));
    }
    if !with_grads {
        return Ok((value, None));
    }
    g.backward(loss)?;
    let names = model.named_params();
    let grads = mn
        .ordered()
        .iter()
        .zip(names)
        .map(|(&id, (name, _))| {
            (
                name,
                g.grad(id)
                    .cloned()
                    .expect("every parameter participates in the loss"),
            )
        })
        .collect();
    Ok((value, Some(grads)))
}

/// Mean per-tree weighted reconstruction loss over a batch.
pub fn batch_loss(model: &TreeAutoencoder, trees: &[&SpatialTree], cfg: &LossConfig) -> Result<f64> {
    run_loss(model, trees, cfg, false).map(|(v, _)| v)
}

/// Loss plus gradients for every parameter, ordered as
/// [`TreeAutoencoder::named_params`].
pub fn batch_loss_grads(
    model: &TreeAutoencoder,
    trees: &[&SpatialTree],
    cfg: &LossConfig,
) -> Result<(f64, Vec<(&'static str, Tensor)>)> {
    let (v, grads) = run_loss(model, trees, cfg, true)?;
    Ok((v, grads.expect("gradients requested")))
}

/// The same loss evaluated directly on explicit predictions; the training
/// graph must agree with this on its own decoded output.
pub fn prediction_loss(
    tree: &SpatialTree,
    predictions: &[NodePrediction],
    cfg: &LossConfig,
    space: ParamSpace,
) -> Result<f64> {
    cfg.validate()?;
    let mut by_node: Vec<Option<&NodePrediction>> = vec![None; tree.nodes.len()];
    for p in predictions {
        if p.node >= tree.nodes.len() || p.node == tree.root {
            return Err(Error::invalid(format!(
                "prediction for node {} outside the non-root set",
                p.node
            )));
        }
        if by_node[p.node].is_some() {
            return Err(Error::invalid(format!("duplicate prediction for node {}", p.node)));
        }
        by_node[p.node] = Some(p);
    }
    let weights = level_weights(tree, cfg.level_weight_gamma);
    let mut total = 0.0;
    for idx in 0..tree.nodes.len() {
        if idx == tree.root {
            continue;
        }
        let p = by_node[idx]
            .ok_or_else(|| Error::invalid(format!("missing prediction for node {idx}")))?;
        let target = node_params(tree, idx, space);
        let l1: f64 = (0..PARAM_DIM).map(|k| (p.params[k] - target[k]).abs()).sum();
        let flag = if tree.nodes[idx].is_leaf { 1.0 } else { 0.0 };
        let bce = bce_logit(p.leaf_logit, flag);
        total += weights[tree.nodes[idx].level] * (l1 + cfg.bce_weight * bce);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Plain-tensor path (no gradients)

/// Mirrors the graph's matmul loop exactly (row-local, k ascending).
fn mm(a: &Tensor, b: &Tensor) -> Tensor {
    debug_assert_eq!(a.cols, b.rows);
    let mut out = Tensor::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let arow = &a.data[i * a.cols..(i + 1) * a.cols];
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in arow.iter().enumerate() {
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            for j in 0..b.cols {
                orow[j] += aik * brow[j];
            }
        }
    }
    out
}

fn affine_apply(a: &Affine, x: &Tensor) -> Tensor {
    let mut y = mm(x, &a.w);
    for r in 0..y.rows {
        for j in 0..y.cols {
            y.data[r * y.cols + j] += a.b.data[j];
        }
    }
    y
}

fn cell_apply(cell: &CellParams, x: &Tensor, h: &Tensor, c: &Tensor) -> (Tensor, Tensor) {
    let s = cell.state_size();
    let zx = mm(x, &cell.wx);
    let zh = mm(h, &cell.wh);
    let rows = x.rows;
    let mut z = zx;
    for (zv, &hv) in z.data.iter_mut().zip(&zh.data) {
        *zv += hv;
    }
    for r in 0..rows {
        for j in 0..4 * s {
            z.data[r * 4 * s + j] += cell.b.data[j];
        }
    }
    let mut h2 = Tensor::zeros(rows, s);
    let mut c2 = Tensor::zeros(rows, s);
    for r in 0..rows {
        for j in 0..s {
            let zr = &z.data[r * 4 * s..(r + 1) * 4 * s];
            let i = sigmoid(zr[j]);
            let f = sigmoid(zr[s + j]);
            let gg = zr[2 * s + j].tanh();
            let o = sigmoid(zr[3 * s + j]);
            let cv = f * c.data[r * s + j] + i * gg;
            c2.data[r * s + j] = cv;
            h2.data[r * s + j] = o * cv.tanh();
        }
    }
    (h2, c2)
}

/// One LSTM cell application on explicit tensors. Rows are independent
/// samples; `x` is rows x input, `h`/`c` are rows x state.
pub fn lstm_cell_forward(
    cell: &CellParams,
    x: &Tensor,
    h: &Tensor,
    c: &Tensor,
) -> Result<(Tensor, Tensor)> {
    let s = cell.state_size();
    if cell.wx.cols != 4 * s || cell.b.shape() != (1, 4 * s) {
        return Err(Error::invalid(format!(
            "cell params disagree on state size {s}"
        )));
    }
    if x.cols != cell.wx.rows {
        return Err(Error::invalid(format!(
            "cell input width {} vs weight rows {}",
            x.cols, cell.wx.rows
        )));
    }
    if h.shape() != (x.rows, s) || c.shape() != (x.rows, s) {
        return Err(Error::invalid(format!(
            "cell state shapes {:?}/{:?} vs ({}, {s})",
            h.shape(),
            c.shape(),
            x.rows
        )));
    }
    Ok(cell_apply(cell, x, h, c))
}

/// One top-down step: parent (params, feature) to both children's
/// (params, leaf logit, feature).
pub fn decode_step(
    model: &TreeAutoencoder,
    parent_params: &[f64; 6],
    parent: &NodeFeature,
) -> Result<(ChildPrediction, ChildPrediction)> {
    let hidden = model.config.hidden;
    if parent.hidden.len() != hidden || parent.cell.len() != hidden {
        return Err(Error::invalid(format!(
            "parent feature size {} vs hidden {hidden}",
            parent.hidden.len()
        )));
    }
    let h_f = Tensor::row_vector(&parent.hidden);
    let c_f = Tensor::row_vector(&parent.cell);
    let mut x = Vec::with_capacity(PARAM_DIM + 2 * hidden);
    x.extend_from_slice(parent_params);
    x.extend_from_slice(&parent.hidden);
    x.extend_from_slice(&parent.cell);
    let x = Tensor::row_vector(&x);
    let s_h = affine_apply(&model.lift_h, &h_f);
    let s_c = affine_apply(&model.lift_c, &c_f);
    let (h_lr, c_lr) = cell_apply(&model.decoder, &x, &s_h, &s_c);
    let child = |side: usize| {
        let (lo, hi) = (side * hidden, (side + 1) * hidden);
        let feature = NodeFeature {
            hidden: h_lr.data[lo..hi].to_vec(),
            cell: c_lr.data[lo..hi].to_vec(),
        };
        let h_child = Tensor::row_vector(&feature.hidden);
        let y = affine_apply(&model.head, &h_child);
        ChildPrediction {
            params: y.data[..PARAM_DIM].try_into().expect("six params"),
            leaf_logit: y.data[PARAM_DIM],
            feature,
        }
    };
    Ok((child(0), child(1)))
}

fn cuboid_clamped(p: [f64; 6]) -> Result<Cuboid> {
    Cuboid::new(p[0], p[1], p[2].max(0.0), p[3].max(0.0), p[4].max(0.0), p[5])
}

/// Free-running decode from a (sampled or encoded) root feature. Expansion
/// stops at a node once its leaf probability clears `leaf_threshold` or its
/// depth hits `max_depth`; negative predicted extents clamp to zero.
pub fn decode_free(
    model: &TreeAutoencoder,
    root_params: &[f64; 6],
    root_feature: &NodeFeature,
    max_depth: usize,
    leaf_threshold: f64,
) -> Result<Vec<Cuboid>> {
    if max_depth < 1 {
        return Err(Error::invalid("decode_free: max_depth must be at least 1"));
    }
    struct Pending {
        input: [f64; 6],
        abs: [f64; 6],
        feature: NodeFeature,
        depth: usize,
    }
    let mut queue = VecDeque::new();
    queue.push_back(Pending {
        input: *root_params,
        abs: *root_params,
        feature: root_feature.clone(),
        depth: 0,
    });
    let mut leaves = Vec::new();
    while let Some(p) = queue.pop_front() {
        let (left, right) = decode_step(model, &p.input, &p.feature)?;
        for c in [left, right] {
            let abs = match model.config.param_space {
                ParamSpace::Relative => compose_params(c.params, p.abs),
                ParamSpace::Absolute => c.params,
            };
            if sigmoid(c.leaf_logit) > leaf_threshold || p.depth + 1 == max_depth {
                leaves.push(cuboid_clamped(abs)?);
            } else {
                queue.push_back(Pending {
                    input: c.params,
                    abs,
                    feature: c.feature,
                    depth: p.depth + 1,
                });
            }
        }
    }
    Ok(leaves)
}

/// Leaf cuboids a teacher-forced decode implies: predicted params composed
/// down the ground-truth tree from the root's absolute params (relative
/// space), or used directly (absolute space). Leaves come back in node-index
/// order; `preds` must cover every non-root node exactly once.
pub fn reconstructed_leaves(
    tree: &SpatialTree,
    preds: &[NodePrediction],
    space: ParamSpace,
) -> Result<Vec<Cuboid>> {
    let n = tree.nodes.len();
    let mut params: Vec<Option<[f64; 6]>> = vec![None; n];
    for p in preds {
        if p.node >= n || p.node == tree.root {
            return Err(Error::invalid(format!("prediction for invalid node {}", p.node)));
        }
        if params[p.node].replace(p.params).is_some() {
            return Err(Error::invalid(format!("duplicate prediction for node {}", p.node)));
        }
    }
    let mut abs = vec![[0.0; 6]; n];
    abs[tree.root] = params_of(&tree.nodes[tree.root].cuboid);
    // Parents are created after their children, so a reverse index scan
    // resolves every parent's absolute params before its children need them.
    for idx in (0..n).rev() {
        if idx == tree.root {
            continue;
        }
        let predicted = params[idx]
            .ok_or_else(|| Error::invalid(format!("missing prediction for node {idx}")))?;
        abs[idx] = match space {
            ParamSpace::Relative => {
                let parent = tree.nodes[idx].parent.expect("non-root has a parent");
                compose_params(predicted, abs[parent])
            }
            ParamSpace::Absolute => predicted,
        };
    }
    (0..n)
        .filter(|idx| tree.nodes[*idx].is_leaf)
        .map(|idx| cuboid_clamped(abs[idx]))
        .collect()
}
