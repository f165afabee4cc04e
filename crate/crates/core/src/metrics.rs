//! Layout evaluation metrics over corner point clouds and footprints.
//!
//! Reconstruction quality is scored per layout pair (chamfer, emd), set-level
//! generation quality compares whole collections (jsd, coverage, mmd), and
//! oar measures footprint overlap within a single layout. All metrics are
//! pure functions with deterministic summation order.

use crate::error::{Error, Result};
use crate::geometry::{overlap_area, Cuboid};

/// Overlap smaller than this does not count; touching edges are not overlap.
const OAR_EPS: f64 = 1e-9;

/// Histogram resolution per axis used when none is configured.
pub const JSD_DEFAULT_BINS: usize = 28;

/// Corner extraction mode: footprints only, or full boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointMode {
    TwoD,
    ThreeD,
}

/// A non-empty list of finite 2D or 3D points, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    pts: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, pts: Vec<f64>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!("point dim must be 2 or 3, got {dim}")));
        }
        if pts.is_empty() {
            return Err(Error::invalid("point cloud must not be empty"));
        }
        if pts.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "flat coordinate count {} is not a multiple of dim {dim}",
                pts.len()
            )));
        }
        if !pts.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("point cloud has non-finite coordinates"));
        }
        Ok(PointCloud { dim, pts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.pts.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.pts[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.pts.chunks_exact(self.dim)
    }
}

/// Corner points of every box in the layout: 4 footprint corners in 2D mode,
/// all 8 box corners in 3D mode.
pub fn layout_to_points(set: &[Cuboid], mode: PointMode) -> Result<PointCloud> {
    if set.is_empty() {
        return Err(Error::invalid("layout has no cuboids to convert"));
    }
    let mut pts = Vec::new();
    for c in set {
        match mode {
            PointMode::TwoD => {
                for p in c.footprint_corners() {
                    pts.extend_from_slice(&p);
                }
            }
            PointMode::ThreeD => {
                for p in c.corners_3d() {
                    pts.extend_from_slice(&p);
                }
            }
        }
    }
    let dim = match mode {
        PointMode::TwoD => 2,
        PointMode::ThreeD => 3,
    };
    PointCloud::new(dim, pts)
}

fn sq_dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn nearest_sq(p: &[f64], cloud: &PointCloud) -> f64 {
    cloud.points().map(|q| sq_dist(p, q)).fold(f64::INFINITY, f64::min)
}

fn check_same_dim(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::invalid(format!(
            "point clouds mix dims {} and {}",
            a.dim, b.dim
        )));
    }
    Ok(())
}

/// Mean squared nearest-neighbor distance from `a` into `b`, plus the same
/// from `b` into `a`.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_same_dim(a, b)?;
    let ab: f64 = a.points().map(|p| nearest_sq(p, b)).sum::<f64>() / a.len() as f64;
    let ba: f64 = b.points().map(|p| nearest_sq(p, a)).sum::<f64>() / b.len() as f64;
    Ok(ab + ba)
}

/// O(n^3) assignment solver over a row-major square cost matrix; returns the
/// minimal total cost. Potentials-with-augmenting-rows formulation.
fn min_assignment_cost(n: usize, cost: &[f64]) -> f64 {
    debug_assert_eq!(cost.len(), n * n);
    // 1-indexed working arrays; column 0 is the virtual unmatched slot.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| cost[(row_of[j] - 1) * n + (j - 1)]).sum()
}

/// Minimum mean Euclidean transport cost under a perfect matching. Requires
/// equally sized clouds. Arguments are ordered canonically first so the swap
/// solves the identical problem and the result is exactly symmetric.
pub fn emd(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_same_dim(a, b)?;
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "emd needs equal cloud sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let swap = a
        .pts
        .iter()
        .zip(&b.pts)
        .find_map(|(x, y)| x.partial_cmp(y).unwrap().is_ne().then(|| x > y))
        .unwrap_or(false);
    let (a, b) = if swap { (b, a) } else { (a, b) };
    let n = a.len();
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = sq_dist(a.point(i), b.point(j)).sqrt();
        }
    }
    Ok(min_assignment_cost(n, &cost) / n as f64)
}

/// Per-axis histogram geometry shared by both occupancy distributions.
struct BinGrid {
    dim: usize,
    bins: usize,
    lo: [f64; 3],
    width: [f64; 3],
}

impl BinGrid {
    fn cell(&self, p: &[f64]) -> usize {
        let mut idx = 0usize;
        for ax in 0..self.dim {
            let k = if self.width[ax] > 0.0 {
                (((p[ax] - self.lo[ax]) / self.width[ax]) as usize).min(self.bins - 1)
            } else {
                0
            };
            idx = idx * self.bins + k;
        }
        idx
    }
}

fn occupancy(grid: &BinGrid, clouds: &[PointCloud]) -> Vec<f64> {
    let mut counts = vec![0.0; grid.bins.pow(grid.dim as u32)];
    let mut total = 0.0;
    for cloud in clouds {
        for p in cloud.points() {
            counts[grid.cell(p)] += 1.0;
            total += 1.0;
        }
    }
    for c in &mut counts {
        *c /= total;
    }
    counts
}

/// Jensen-Shannon divergence between the voxel-occupancy distributions of two
/// collections, on a shared `bins`-per-axis grid over the union bounds of both
/// (expanded 1%). Natural log; 0*log0 = 0; result in [0, ln 2].
pub fn jsd(reference: &[PointCloud], generated: &[PointCloud], bins: usize) -> Result<f64> {
    if reference.is_empty() || generated.is_empty() {
        return Err(Error::invalid("jsd needs non-empty reference and generated sets"));
    }
    let dim = reference[0].dim();
    for cloud in reference.iter().chain(generated) {
        if cloud.dim() != dim {
            return Err(Error::invalid("jsd inputs mix point dims"));
        }
    }
    if bins == 0 || bins.pow(dim as u32) > 1 << 24 {
        return Err(Error::invalid(format!("unusable bin resolution {bins}")));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for cloud in reference.iter().chain(generated) {
        for p in cloud.points() {
            for ax in 0..dim {
                lo[ax] = lo[ax].min(p[ax]);
                hi[ax] = hi[ax].max(p[ax]);
            }
        }
    }
    let mut width = [0.0; 3];
    for ax in 0..dim {
        let pad = 0.005 * (hi[ax] - lo[ax]);
        lo[ax] -= pad;
        hi[ax] += pad;
        width[ax] = (hi[ax] - lo[ax]) / bins as f64;
    }
    let grid = BinGrid { dim, bins, lo, width };
    let p = occupancy(&grid, reference);
    let q = occupancy(&grid, generated);
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(&q) {
        let m = 0.5 * (pi + qi);
        // Both halves of a cell are combined before accumulation so that
        // swapping the arguments reproduces the identical addition sequence.
        let mut cell = 0.0;
        if pi > 0.0 {
            cell += 0.5 * pi * (pi / m).ln();
        }
        if qi > 0.0 {
            cell += 0.5 * qi * (qi / m).ln();
        }
        acc += cell;
    }
    Ok(acc)
}

fn chamfer_nearest(cloud: &PointCloud, among: &[PointCloud]) -> Result<(usize, f64)> {
    let mut best = (0usize, f64::INFINITY);
    for (i, other) in among.iter().enumerate() {
        let d = chamfer(cloud, other)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best)
}

/// Fraction of reference clouds that are the chamfer-nearest match of at
/// least one generated cloud. Ties pick the lowest reference index.
pub fn coverage(reference: &[PointCloud], generated: &[PointCloud]) -> Result<f64> {
    if reference.is_empty() || generated.is_empty() {
        return Err(Error::invalid("coverage needs non-empty reference and generated sets"));
    }
    let mut matched = vec![false; reference.len()];
    for cloud in generated {
        matched[chamfer_nearest(cloud, reference)?.0] = true;
    }
    Ok(matched.iter().filter(|m| **m).count() as f64 / reference.len() as f64)
}

/// Mean over reference clouds of the chamfer distance to the closest
/// generated cloud.
pub fn mmd(reference: &[PointCloud], generated: &[PointCloud]) -> Result<f64> {
    if reference.is_empty() || generated.is_empty() {
        return Err(Error::invalid("mmd needs non-empty reference and generated sets"));
    }
    let mut sum = 0.0;
    for cloud in reference {
        sum += chamfer_nearest(cloud, generated)?.1;
    }
    Ok(sum / reference.len() as f64)
}

/// Overlapping area ratio: the footprint area of boxes that overlap at least
/// one other box, over the total footprint area. Zero-area boxes join
/// neither sum.
pub fn oar(set: &[Cuboid]) -> Result<f64> {
    let boxes: Vec<&Cuboid> = set.iter().filter(|c| c.area() > 0.0).collect();
    if boxes.is_empty() {
        return Err(Error::invalid(
            "oar needs at least one cuboid with positive footprint area",
        ));
    }
    let mut overlapping = vec![false; boxes.len()];
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if overlap_area(boxes[i], boxes[j]) > OAR_EPS {
                overlapping[i] = true;
                overlapping[j] = true;
            }
        }
    }
    let total: f64 = boxes.iter().map(|c| c.area()).sum();
    let overlapped: f64 = boxes
        .iter()
        .zip(&overlapping)
        .filter(|(_, o)| **o)
        .map(|(c, _)| c.area())
        .sum();
    Ok(overlapped / total)
}

/// Scores of one evaluation run; only the metrics that apply are set.
/// Renders in the fixed column order jsd, cov, mmd, cd, emd, oar.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricReport {
    pub jsd: Option<f64>,
    pub cov: Option<f64>,
    pub mmd: Option<f64>,
    pub cd: Option<f64>,
    pub emd: Option<f64>,
    pub oar: Option<f64>,
}

impl MetricReport {
    fn columns(&self) -> Vec<(&'static str, f64)> {
        [
            ("jsd", self.jsd),
            ("cov", self.cov),
            ("mmd", self.mmd),
            ("cd", self.cd),
            ("emd", self.emd),
            ("oar", self.oar),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.map(|v| (name, v)))
        .collect()
    }

    /// One header row and one value row; values keep full precision.
    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        let names: Vec<&str> = cols.iter().map(|(n, _)| *n).collect();
        let values: Vec<String> = cols.iter().map(|(_, v)| v.to_string()).collect();
        format!("{}\n{}\n", names.join(","), values.join(","))
    }

    /// Aligned two-line table with values rounded to six decimals.
    pub fn to_table(&self) -> String {
        let mut header = String::new();
        let mut row = String::new();
        for (i, (name, v)) in self.columns().into_iter().enumerate() {
            let value = format!("{v:.6}");
            let w = name.len().max(value.len());
            if i > 0 {
                header.push_str("  ");
                row.push_str("  ");
            }
            header.push_str(&format!("{name:>w$}"));
            row.push_str(&format!("{value:>w$}"));
        }
        format!("{header}\n{row}\n")
    }
}
