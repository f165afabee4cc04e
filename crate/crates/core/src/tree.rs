//! Layout sets and their binary spatial hierarchies.
//!
//! A layout set is a group of neighboring boxes treated as one sample. The
//! hierarchy is built by greedy agglomeration: the closest active pair under
//! the weighted spatial-geometric distance merges into a parent whose
//! footprint is the minimum bounding rectangle of the pair. Per-level index
//! matrices record the merge rules so whole forests can be processed level by
//! level in one batch.

use crate::error::{Error, Result};
use crate::geometry::{angle_gap, normalize_angle, union_mbr, Cuboid};

/// Similarity transform mapping a normalized set back to its source
/// coordinates: `original = normalized * scale + (cx, cy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub cx: f64,
    pub cy: f64,
    pub scale: f64,
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        cx: 0.0,
        cy: 0.0,
        scale: 1.0,
    };
}

impl Default for Frame {
    fn default() -> Self {
        Frame::IDENTITY
    }
}

/// A named group of neighboring boxes treated as one sample.
#[derive(Debug, Clone)]
pub struct LayoutSet {
    pub id: String,
    pub cuboids: Vec<Cuboid>,
    pub frame: Frame,
}

impl LayoutSet {
    /// A set needs at least two boxes; anything smaller has no hierarchy.
    pub fn new(id: impl Into<String>, cuboids: Vec<Cuboid>) -> Result<Self> {
        if cuboids.len() < 2 {
            return Err(Error::invalid(format!(
                "layout set needs at least 2 cuboids, got {}",
                cuboids.len()
            )));
        }
        Ok(LayoutSet {
            id: id.into(),
            cuboids,
            frame: Frame::IDENTITY,
        })
    }
}

/// Weights of the five distance components: center offset, area difference,
/// aspect-ratio difference, angle gap, and merge waste.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdWeights {
    pub center: f64,
    pub area: f64,
    pub shape: f64,
    pub angle: f64,
    pub merge: f64,
}

impl SgdWeights {
    pub fn new(center: f64, area: f64, shape: f64, angle: f64, merge: f64) -> Result<Self> {
        let w = SgdWeights {
            center,
            area,
            shape,
            angle,
            merge,
        };
        for v in w.as_array() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "distance weights must be finite and nonnegative, got {v}"
                )));
            }
        }
        if w.as_array().iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("distance weights must not all be zero"));
        }
        Ok(w)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.center, self.area, self.shape, self.angle, self.merge]
    }
}

impl Default for SgdWeights {
    fn default() -> Self {
        SgdWeights {
            center: 5.0,
            area: 2.0,
            shape: 0.1,
            angle: 1.0,
            merge: 1.0,
        }
    }
}

/// The five raw distance components between two boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdComponents {
    /// Euclidean distance between centers.
    pub center: f64,
    /// Absolute footprint-area difference.
    pub area: f64,
    /// Absolute length/width ratio difference.
    pub shape: f64,
    /// Gap between the pair's mean angle and their joint MBR's angle,
    /// folded into `[0, pi/2]`.
    pub angle: f64,
    /// Area the joint MBR adds over the two footprints combined.
    pub merge: f64,
}

/// All five components. Errs on zero-width boxes because the aspect ratio is
/// undefined there; use [`sgd_distance`] with a zero shape weight to skip it.
pub fn sgd_components(i: &Cuboid, j: &Cuboid) -> Result<SgdComponents> {
    components_inner(i, j, true)
}

fn components_inner(i: &Cuboid, j: &Cuboid, need_shape: bool) -> Result<SgdComponents> {
    let shape = if need_shape {
        if i.w == 0.0 || j.w == 0.0 {
            return Err(Error::DegenerateShape(
                "aspect ratio undefined for zero-width box".into(),
            ));
        }
        (i.l / i.w - j.l / j.w).abs()
    } else {
        0.0
    };
    let mbr = union_mbr(i, j)?;
    Ok(SgdComponents {
        center: ((i.x - j.x).powi(2) + (i.y - j.y).powi(2)).sqrt(),
        area: (i.area() - j.area()).abs(),
        shape,
        angle: angle_gap((i.a + j.a) / 2.0 - mbr.a),
        merge: (i.area() + j.area() - mbr.area()).abs(),
    })
}

/// Weighted spatial-geometric distance: the dot product of the component
/// vector with the weights. Symmetric in its arguments.
pub fn sgd_distance(i: &Cuboid, j: &Cuboid, w: &SgdWeights) -> Result<f64> {
    let c = components_inner(i, j, w.shape > 0.0)?;
    Ok(w.center * c.center
        + w.area * c.area
        + w.shape * c.shape
        + w.angle * c.angle
        + w.merge * c.merge)
}

/// Child geometry in its parent's frame: center offsets scaled by the
/// parent's extents, extent ratios, and the folded angle difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelParams {
    pub x: f64,
    pub y: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub a: f64,
}

impl RelParams {
    /// What a box relative to itself looks like; also the placeholder stored
    /// on roots, which have no parent.
    pub const IDENTITY: RelParams = RelParams {
        x: 0.0,
        y: 0.0,
        l: 1.0,
        w: 1.0,
        h: 1.0,
        a: 0.0,
    };

    pub fn as_array(&self) -> [f64; 6] {
        [self.x, self.y, self.l, self.w, self.h, self.a]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        RelParams {
            x: v[0],
            y: v[1],
            l: v[2],
            w: v[3],
            h: v[4],
            a: v[5],
        }
    }
}

/// Expresses `child` in `parent`'s frame. The parent needs positive footprint
/// extents; a flat parent (`h = 0`) is fine when the child is flat too, which
/// keeps the 2D-box case total.
pub fn to_relative(child: &Cuboid, parent: &Cuboid) -> Result<RelParams> {
    if parent.l <= 0.0 || parent.w <= 0.0 {
        return Err(Error::DegenerateParent(format!(
            "parent footprint {} x {} has a zero extent",
            parent.l, parent.w
        )));
    }
    let h = if parent.h > 0.0 {
        child.h / parent.h
    } else if child.h == 0.0 {
        0.0
    } else {
        return Err(Error::DegenerateParent(format!(
            "flat parent cannot hold child of height {}",
            child.h
        )));
    };
    Ok(RelParams {
        x: (child.x - parent.x) / parent.l,
        y: (child.y - parent.y) / parent.w,
        l: child.l / parent.l,
        w: child.w / parent.w,
        h,
        a: normalize_angle(child.a - parent.a)?,
    })
}

/// Inverse of [`to_relative`]: places relative params back into a parent's
/// frame. Round-trips to 1e-12 (angle modulo pi).
pub fn to_absolute(rel: &RelParams, parent: &Cuboid) -> Result<Cuboid> {
    if parent.l <= 0.0 || parent.w <= 0.0 {
        return Err(Error::DegenerateParent(format!(
            "parent footprint {} x {} has a zero extent",
            parent.l, parent.w
        )));
    }
    let raw = compose_params(rel.as_array(), params_of(parent));
    Cuboid::new(raw[0], raw[1], raw[2], raw[3], raw[4], raw[5])
}

/// Raw composition of relative params over absolute parent params, both as
/// `[x, y, l, w, h, a]`. No validation, no angle folding; free-running
/// decoding clamps and folds only when materializing boxes.
pub fn compose_params(rel: [f64; 6], parent: [f64; 6]) -> [f64; 6] {
    [
        parent[0] + rel[0] * parent[2],
        parent[1] + rel[1] * parent[3],
        rel[2] * parent[2],
        rel[3] * parent[3],
        rel[4] * parent[4],
        parent[5] + rel[5],
    ]
}

/// A cuboid's six parameters as `[x, y, l, w, h, a]`.
pub fn params_of(c: &Cuboid) -> [f64; 6] {
    [c.x, c.y, c.l, c.w, c.h, c.a]
}

/// One node of a spatial hierarchy.
#[derive(Debug, Clone)]
pub struct TreeNode {
    /// The node's box in the set frame.
    pub cuboid: Cuboid,
    /// The node's box in its parent's frame; roots store the identity.
    pub relative: RelParams,
    pub is_leaf: bool,
    pub parent: Option<usize>,
    /// Left and right child indices; `None` for leaves.
    pub children: Option<[usize; 2]>,
    /// Leaves sit at level 0; a parent is one above its highest child.
    pub level: usize,
}

/// One level's merge rules: rows of (left child, right child, parent)
/// indices into the node table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexMatrix {
    pub rows: Vec<[usize; 3]>,
}

/// Binary hierarchy over one layout set.
///
/// Nodes 0..N-1 are the set's leaves in input order; each merge appends its
/// parent. `levels[k]` holds the rows whose parent sits at level `k + 1`,
/// so replaying the matrices bottom-up visits children before parents.
#[derive(Debug, Clone)]
pub struct SpatialTree {
    pub id: String,
    pub frame: Frame,
    pub nodes: Vec<TreeNode>,
    pub levels: Vec<IndexMatrix>,
    pub root: usize,
}

impl SpatialTree {
    /// Leaf boxes in node order (equal to the source set's cuboid order).
    pub fn leaf_cuboids(&self) -> Vec<Cuboid> {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf)
            .map(|n| n.cuboid)
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf).count()
    }

    /// Tree height: the root's level.
    pub fn height(&self) -> usize {
        self.levels.len()
    }

    /// Structural consistency: index ranges, parent/child agreement, level
    /// grouping, and the leaf/internal count balance. Deserialized trees go
    /// through this before anything trusts them.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        let bad = |msg: String| Err(Error::invalid(format!("tree {}: {msg}", self.id)));
        if n < 3 || n % 2 == 0 {
            return bad(format!("{n} nodes cannot form a full binary tree"));
        }
        if self.root >= n {
            return bad(format!("root index {} out of range", self.root));
        }
        let leaves = self.leaf_count();
        if leaves != n / 2 + 1 {
            return bad(format!("{leaves} leaves for {n} nodes"));
        }
        if self.nodes[self.root].parent.is_some() {
            return bad("root has a parent".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.is_leaf != node.children.is_none() {
                return bad(format!("node {i} mixes leaf flag and children"));
            }
            if node.parent.is_none() && i != self.root {
                return bad(format!("node {i} is an orphan"));
            }
            if let Some([l, r]) = node.children {
                if l >= n || r >= n {
                    return bad(format!("node {i} child index out of range"));
                }
                for c in [l, r] {
                    if self.nodes[c].parent != Some(i) {
                        return bad(format!("node {c} disagrees about parent {i}"));
                    }
                }
                if node.level != 1 + self.nodes[l].level.max(self.nodes[r].level) {
                    return bad(format!("node {i} level inconsistent with children"));
                }
            } else if node.level != 0 {
                return bad(format!("leaf {i} not at level 0"));
            }
        }
        if self.levels.len() != self.nodes[self.root].level {
            return bad("level count differs from root level".into());
        }
        let mut seen_child = vec![false; n];
        let mut seen_parent = vec![false; n];
        for (k, level) in self.levels.iter().enumerate() {
            for &[l, r, p] in &level.rows {
                if l >= n || r >= n || p >= n {
                    return bad(format!("level {k} row indices out of range"));
                }
                if self.nodes[p].level != k + 1 {
                    return bad(format!("node {p} grouped at level {}", k + 1));
                }
                if self.nodes[p].children != Some([l, r]) {
                    return bad(format!("level row for {p} disagrees with node table"));
                }
                for c in [l, r] {
                    if seen_child[c] {
                        return bad(format!("node {c} appears as a child twice"));
                    }
                    seen_child[c] = true;
                }
                if seen_parent[p] {
                    return bad(format!("node {p} appears as a parent twice"));
                }
                seen_parent[p] = true;
            }
        }
        for i in 0..n {
            if (i != self.root) != seen_child[i] {
                return bad(format!("node {i} missing from the index matrices"));
            }
        }
        Ok(())
    }
}

/// Greedy agglomeration under the weighted distance: repeatedly merge the
/// closest active pair, ties broken on the pair's (lowest, highest) node
/// indices. The parent's footprint is the pair's joint MBR and its height
/// the taller child's.
pub fn build_tree(set: &LayoutSet, weights: &SgdWeights) -> Result<SpatialTree> {
    let n = set.cuboids.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "cannot build a hierarchy over {n} cuboids"
        )));
    }
    let mut nodes: Vec<TreeNode> = set
        .cuboids
        .iter()
        .map(|c| TreeNode {
            cuboid: *c,
            relative: RelParams::IDENTITY,
            is_leaf: true,
            parent: None,
            children: None,
            level: 0,
        })
        .collect();
    // Active pool stays sorted: retain preserves order and each new parent
    // has the largest index so far.
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges: Vec<[usize; 3]> = Vec::with_capacity(n - 1);
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for ai in 0..active.len() {
            for aj in ai + 1..active.len() {
                let (i, j) = (active[ai], active[aj]);
                let d = sgd_distance(&nodes[i].cuboid, &nodes[j].cuboid, weights)?;
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => d < bd || (d == bd && (i, j) < (bi, bj)),
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("pool holds at least one pair");
        let mbr = union_mbr(&nodes[i].cuboid, &nodes[j].cuboid)?;
        let parent_cuboid = Cuboid {
            h: nodes[i].cuboid.h.max(nodes[j].cuboid.h),
            ..mbr
        };
        let level = 1 + nodes[i].level.max(nodes[j].level);
        let p = nodes.len();
        nodes.push(TreeNode {
            cuboid: parent_cuboid,
            relative: RelParams::IDENTITY,
            is_leaf: false,
            parent: None,
            children: Some([i, j]),
            level,
        });
        nodes[i].parent = Some(p);
        nodes[j].parent = Some(p);
        active.retain(|&k| k != i && k != j);
        active.push(p);
        merges.push([i, j, p]);
    }
    let root = active[0];
    for idx in 0..nodes.len() {
        if let Some(p) = nodes[idx].parent {
            nodes[idx].relative = to_relative(&nodes[idx].cuboid, &nodes[p].cuboid)?;
        }
    }
    let mut levels = vec![IndexMatrix::default(); nodes[root].level];
    for [l, r, p] in merges {
        levels[nodes[p].level - 1].rows.push([l, r, p]);
    }
    Ok(SpatialTree {
        id: set.id.clone(),
        frame: set.frame,
        nodes,
        levels,
        root,
    })
}

/// Centers the set's corner bounding box at the origin and scales its longest
/// side to 1, so every footprint corner lands in `[-0.5, 0.5]^2`. The returned
/// frame composes over any existing one, so denormalization still recovers the
/// original coordinates.
pub fn normalize_frame(set: &LayoutSet) -> Result<LayoutSet> {
    let (mut lox, mut hix) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut loy, mut hiy) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &set.cuboids {
        for [px, py] in c.footprint_corners() {
            lox = lox.min(px);
            hix = hix.max(px);
            loy = loy.min(py);
            hiy = hiy.max(py);
        }
    }
    let s = (hix - lox).max(hiy - loy);
    if !(s > 0.0) {
        return Err(Error::invalid("layout set has zero total extent"));
    }
    let (cx, cy) = ((lox + hix) / 2.0, (loy + hiy) / 2.0);
    let cuboids = set
        .cuboids
        .iter()
        .map(|c| Cuboid {
            x: (c.x - cx) / s,
            y: (c.y - cy) / s,
            l: c.l / s,
            w: c.w / s,
            h: c.h / s,
            a: c.a,
        })
        .collect();
    Ok(LayoutSet {
        id: set.id.clone(),
        cuboids,
        frame: Frame {
            cx: set.frame.cx + cx * set.frame.scale,
            cy: set.frame.cy + cy * set.frame.scale,
            scale: s * set.frame.scale,
        },
    })
}

/// Applies the recorded frame, returning the set in source coordinates with
/// an identity frame.
pub fn denormalize_frame(set: &LayoutSet) -> LayoutSet {
    let f = set.frame;
    let cuboids = set
        .cuboids
        .iter()
        .map(|c| Cuboid {
            x: c.x * f.scale + f.cx,
            y: c.y * f.scale + f.cy,
            l: c.l * f.scale,
            w: c.w * f.scale,
            h: c.h * f.scale,
            a: c.a,
        })
        .collect();
    LayoutSet {
        id: set.id.clone(),
        cuboids,
        frame: Frame::IDENTITY,
    }
}
