//! PCA over latent codes and feature-space summaries of latent clusters.

use crate::error::{Error, Result};
use crate::geometry::Cuboid;
use crate::nn::Tensor;

use super::{gmm_fit, CovarianceType};

/// Columns of the per-cluster footprint-statistics table.
pub const CLUSTER_FEATURE_NAMES: [&str; 7] = [
    "mean_area",
    "mean_perimeter",
    "mean_aspect",
    "mean_rotation",
    "std_area",
    "std_perimeter",
    "std_rotation",
];

/// A linear projection fitted to centered latents.
#[derive(Debug, Clone)]
pub struct PcaModel {
    /// Per-axis data mean, subtracted before projecting.
    pub mean: Vec<f64>,
    /// d x D orthonormal rows, ordered by captured variance.
    pub components: Tensor,
    /// Variance along each retained row, descending.
    pub explained_variance: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns the eigenvalues and the matrix whose columns are eigenvectors.
fn symmetric_eigen(m: &Tensor) -> (Vec<f64>, Tensor) {
    let d = m.rows;
    let mut a = m.clone();
    let mut v = Tensor::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 });
    let frob2: f64 = a.data.iter().map(|x| x * x).sum();
    let stop = frob2 * 1e-30;
    for _ in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
            .map(|(p, q)| a.get(p, q) * a.get(p, q))
            .sum::<f64>()
            * 2.0;
        if off <= stop {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..d {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..d {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..d).map(|i| a.get(i, i)).collect(), v)
}

/// Fit a `d_out`-dimensional PCA. Components are eigenvectors of the sample
/// covariance (normalized by N), sign-fixed so each row's largest-magnitude
/// entry is positive.
pub fn pca_fit(latents: &Tensor, d_out: usize) -> Result<PcaModel> {
    let (n, dim) = latents.shape();
    if n == 0 || dim == 0 {
        return Err(Error::invalid("pca needs a non-empty latent matrix"));
    }
    if d_out == 0 || d_out > dim.min(n) {
        return Err(Error::invalid(format!(
            "pca output dim must satisfy 1 <= d <= min(n, dim) = {}, got {d_out}",
            dim.min(n)
        )));
    }
    if !latents.is_finite() {
        return Err(Error::invalid("latents contain non-finite values"));
    }
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(latents.row(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = Tensor::zeros(dim, dim);
    for i in 0..n {
        let x = latents.row(i);
        for a in 0..dim {
            let da = x[a] - mean[a];
            for b in a..dim {
                let v = cov.get(a, b) + da * (x[b] - mean[b]);
                cov.set(a, b, v);
            }
        }
    }
    for a in 0..dim {
        for b in a..dim {
            let v = cov.get(a, b) / n as f64;
            cov.set(a, b, v);
            cov.set(b, a, v);
        }
    }
    let (eig, vecs) = symmetric_eigen(&cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|a, b| eig[*b].partial_cmp(&eig[*a]).unwrap());
    let mut components = Tensor::zeros(d_out, dim);
    let mut explained = Vec::with_capacity(d_out);
    for (row, col) in order.iter().take(d_out).enumerate() {
        let mut lead = 0;
        for k in 1..dim {
            if vecs.get(k, *col).abs() > vecs.get(lead, *col).abs() {
                lead = k;
            }
        }
        let flip = if vecs.get(lead, *col) < 0.0 { -1.0 } else { 1.0 };
        for k in 0..dim {
            components.set(row, k, flip * vecs.get(k, *col));
        }
        explained.push(eig[*col]);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: explained,
    })
}

/// Project rows of `latents` onto the retained components: `(X - mean) W^T`.
pub fn pca_project(model: &PcaModel, latents: &Tensor) -> Result<Tensor> {
    let dim = model.mean.len();
    if latents.cols != dim {
        return Err(Error::invalid(format!(
            "latents have dim {}, pca expects {dim}",
            latents.cols
        )));
    }
    let d_out = model.components.rows;
    let mut out = Tensor::zeros(latents.rows, d_out);
    for i in 0..latents.rows {
        let x = latents.row(i);
        for r in 0..d_out {
            let w = model.components.row(r);
            let v = (0..dim).map(|k| (x[k] - model.mean[k]) * w[k]).sum();
            out.set(i, r, v);
        }
    }
    Ok(out)
}

/// Map projected rows back to latent space: `mean + Z W`.
pub fn pca_reconstruct(model: &PcaModel, projected: &Tensor) -> Result<Tensor> {
    let d_out = model.components.rows;
    if projected.cols != d_out {
        return Err(Error::invalid(format!(
            "projected rows have dim {}, pca retains {d_out}",
            projected.cols
        )));
    }
    let dim = model.mean.len();
    let mut out = Tensor::zeros(projected.rows, dim);
    for i in 0..projected.rows {
        let z = projected.row(i);
        for k in 0..dim {
            let mut v = model.mean[k];
            for r in 0..d_out {
                v += z[r] * model.components.get(r, k);
            }
            out.set(i, k, v);
        }
    }
    Ok(out)
}

/// Latent clusters plus the footprint statistics that describe them.
#[derive(Debug, Clone)]
pub struct ClusterSummary {
    /// Cluster index per layout, aligned with the input rows.
    pub labels: Vec<usize>,
    /// K x 7 table of [`CLUSTER_FEATURE_NAMES`] values per cluster.
    pub raw: Tensor,
    /// `raw` min-max scaled per column across clusters; flat columns map to 0.
    pub scaled: Tensor,
}

/// Reduce latents with PCA (at most `min(n, dim)` directions), fit a
/// full-covariance mixture on the projection, label each layout by its most
/// responsible component, and summarize every cluster's footprints.
pub fn cluster_latents(
    latents: &Tensor,
    layouts: &[Vec<Cuboid>],
    d: usize,
    k: usize,
    seed: u64,
) -> Result<ClusterSummary> {
    if layouts.len() != latents.rows {
        return Err(Error::invalid(format!(
            "{} layouts for {} latent rows",
            layouts.len(),
            latents.rows
        )));
    }
    let d_eff = d.min(latents.cols).min(latents.rows);
    let pca = pca_fit(latents, d_eff)?;
    let projected = pca_project(&pca, latents)?;
    let model = gmm_fit(&projected, k, CovarianceType::Full, seed)?.model;
    let labels = model.hard_labels(&projected)?;
    let mut raw = Tensor::zeros(k, 7);
    for cluster in 0..k {
        let boxes: Vec<&Cuboid> = labels
            .iter()
            .zip(layouts)
            .filter(|(l, _)| **l == cluster)
            .flat_map(|(_, set)| set.iter())
            .collect();
        if boxes.is_empty() {
            continue;
        }
        let n = boxes.len() as f64;
        let mean = |f: &dyn Fn(&Cuboid) -> f64| boxes.iter().map(|b| f(b)).sum::<f64>() / n;
        let std = |f: &dyn Fn(&Cuboid) -> f64, m: f64| {
            (boxes.iter().map(|b| (f(b) - m) * (f(b) - m)).sum::<f64>() / n).sqrt()
        };
        let mean_area = mean(&|b| b.area());
        let mean_perim = mean(&|b| 2.0 * (b.l + b.w));
        let aspects: Vec<f64> = boxes.iter().filter(|b| b.w > 0.0).map(|b| b.l / b.w).collect();
        let mean_aspect = if aspects.is_empty() {
            0.0
        } else {
            aspects.iter().sum::<f64>() / aspects.len() as f64
        };
        let mean_rot = mean(&|b| b.a);
        let row = [
            mean_area,
            mean_perim,
            mean_aspect,
            mean_rot,
            std(&|b| b.area(), mean_area),
            std(&|b| 2.0 * (b.l + b.w), mean_perim),
            std(&|b| b.a, mean_rot),
        ];
        for (j, v) in row.iter().enumerate() {
            raw.set(cluster, j, *v);
        }
    }
    let mut scaled = Tensor::zeros(k, 7);
    for j in 0..7 {
        let col: Vec<f64> = (0..k).map(|i| raw.get(i, j)).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            for i in 0..k {
                scaled.set(i, j, (raw.get(i, j) - lo) / (hi - lo));
            }
        }
    }
    Ok(ClusterSummary { labels, raw, scaled })
}
