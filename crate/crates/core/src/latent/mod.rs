//! Density estimation and analysis over root latent codes.
//!
//! A Gaussian mixture fitted by EM models the distribution of encoder root
//! features; sampling it and decoding yields novel layouts. Everything runs
//! in log space so full-covariance responsibilities survive large latent
//! dims. PCA and latent clustering live in [`pca`]; model files in [`io`].

mod io;
mod pca;

pub use io::{read_gmm, read_pca, write_gmm, write_grid_csv, write_pca};
pub use pca::{
    cluster_latents, pca_fit, pca_project, pca_reconstruct, ClusterSummary, PcaModel,
    CLUSTER_FEATURE_NAMES,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Added to every covariance diagonal; keeps each component invertible.
pub const COVARIANCE_FLOOR: f64 = 1e-6;

/// EM stops once the total log-likelihood moves less than this.
const EM_TOL: f64 = 1e-6;
const EM_MAX_ITERS: usize = 500;
/// A component owning less responsibility mass than this has collapsed.
const COLLAPSE_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceType {
    Full,
    Diag,
    Tied,
    Spherical,
}

impl CovarianceType {
    pub const ALL: [CovarianceType; 4] = [
        CovarianceType::Full,
        CovarianceType::Diag,
        CovarianceType::Tied,
        CovarianceType::Spherical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CovarianceType::Full => "full",
            CovarianceType::Diag => "diag",
            CovarianceType::Tied => "tied",
            CovarianceType::Spherical => "spherical",
        }
    }
}

impl std::fmt::Display for CovarianceType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CovarianceType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CovarianceType::Full),
            "diag" => Ok(CovarianceType::Diag),
            "tied" => Ok(CovarianceType::Tied),
            "spherical" => Ok(CovarianceType::Spherical),
            other => Err(Error::invalid(format!("unknown covariance type {other:?}"))),
        }
    }
}

/// Component covariances in one of four parameterizations.
#[derive(Debug, Clone)]
pub enum Covariances {
    /// One D x D matrix per component.
    Full(Vec<Tensor>),
    /// K x D per-axis variances.
    Diag(Tensor),
    /// A single D x D matrix shared by all components.
    Tied(Tensor),
    /// One isotropic variance per component.
    Spherical(Vec<f64>),
}

impl Covariances {
    pub fn cov_type(&self) -> CovarianceType {
        match self {
            Covariances::Full(_) => CovarianceType::Full,
            Covariances::Diag(_) => CovarianceType::Diag,
            Covariances::Tied(_) => CovarianceType::Tied,
            Covariances::Spherical(_) => CovarianceType::Spherical,
        }
    }
}

/// A fitted Gaussian mixture over D-dimensional latents.
#[derive(Debug, Clone)]
pub struct GmmModel {
    /// Mixing weights; nonnegative, sum to 1.
    pub weights: Vec<f64>,
    /// K x D component means.
    pub means: Tensor,
    pub covariances: Covariances,
}

/// `gmm_fit` output: the model plus the per-iteration log-likelihood trace
/// (monotone non-decreasing absent component reinitializations).
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    pub log_likelihoods: Vec<f64>,
}

/// Cholesky factors and log-determinants needed to evaluate densities.
enum Prepared {
    /// Per-component (lower factor, logdet).
    Full(Vec<(Vec<f64>, f64)>),
    /// One shared (lower factor, logdet).
    Tied(Vec<f64>, f64),
    /// Per-component logdets; variances read from the model.
    Diag(Vec<f64>),
    Spherical(Vec<f64>),
}

/// Index of the offending component when a covariance is not positive
/// definite; `TIED_COMPONENT` marks the shared matrix.
const TIED_COMPONENT: usize = usize::MAX;

fn cholesky(d: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Some(l)
}

fn chol_logdet(d: usize, l: &[f64]) -> f64 {
    (0..d).map(|i| l[i * d + i].ln()).sum::<f64>() * 2.0
}

impl GmmModel {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.cols
    }

    pub fn cov_type(&self) -> CovarianceType {
        self.covariances.cov_type()
    }

    fn prepare(&self) -> std::result::Result<Prepared, usize> {
        let d = self.dim();
        match &self.covariances {
            Covariances::Full(mats) => {
                let mut chols = Vec::with_capacity(mats.len());
                for (k, m) in mats.iter().enumerate() {
                    let l = cholesky(d, &m.data).ok_or(k)?;
                    let logdet = chol_logdet(d, &l);
                    chols.push((l, logdet));
                }
                Ok(Prepared::Full(chols))
            }
            Covariances::Tied(m) => {
                let l = cholesky(d, &m.data).ok_or(TIED_COMPONENT)?;
                let logdet = chol_logdet(d, &l);
                Ok(Prepared::Tied(l, logdet))
            }
            Covariances::Diag(vars) => {
                let mut logdets = Vec::with_capacity(vars.rows);
                for k in 0..vars.rows {
                    let row = vars.row(k);
                    if row.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
                        return Err(k);
                    }
                    logdets.push(row.iter().map(|v| v.ln()).sum());
                }
                Ok(Prepared::Diag(logdets))
            }
            Covariances::Spherical(vars) => {
                let mut logdets = Vec::with_capacity(vars.len());
                for (k, v) in vars.iter().enumerate() {
                    if *v <= 0.0 || !v.is_finite() {
                        return Err(k);
                    }
                    logdets.push(d as f64 * v.ln());
                }
                Ok(Prepared::Spherical(logdets))
            }
        }
    }

    /// Log density of component `k` at `x`; `buf` holds the centered point.
    fn log_component(&self, prep: &Prepared, k: usize, x: &[f64], buf: &mut [f64]) -> f64 {
        let d = self.dim();
        let mean = self.means.row(k);
        for i in 0..d {
            buf[i] = x[i] - mean[i];
        }
        let (logdet, quad) = match (prep, &self.covariances) {
            (Prepared::Full(chols), _) => {
                let (l, logdet) = &chols[k];
                forward_solve(d, l, buf);
                (*logdet, buf.iter().map(|y| y * y).sum())
            }
            (Prepared::Tied(l, logdet), _) => {
                forward_solve(d, l, buf);
                (*logdet, buf.iter().map(|y| y * y).sum())
            }
            (Prepared::Diag(logdets), Covariances::Diag(vars)) => {
                let var = vars.row(k);
                let quad = buf.iter().zip(var).map(|(y, v)| y * y / v).sum();
                (logdets[k], quad)
            }
            (Prepared::Spherical(logdets), Covariances::Spherical(vars)) => {
                let quad = buf.iter().map(|y| y * y).sum::<f64>() / vars[k];
                (logdets[k], quad)
            }
            _ => unreachable!("prepared form matches the covariance type"),
        };
        let log_two_pi = (2.0 * std::f64::consts::PI).ln();
        -0.5 * (d as f64 * log_two_pi + logdet + quad)
    }

    fn e_step(&self, prep: &Prepared, latents: &Tensor) -> (Tensor, f64) {
        let (n, d) = latents.shape();
        let k = self.k();
        let mut resp = Tensor::zeros(n, k);
        let mut buf = vec![0.0; d];
        let mut lw = vec![0.0; k];
        let mut ll = 0.0;
        for i in 0..n {
            let x = latents.row(i);
            for (j, w) in self.weights.iter().enumerate() {
                lw[j] = if *w > 0.0 {
                    w.ln() + self.log_component(prep, j, x, &mut buf)
                } else {
                    f64::NEG_INFINITY
                };
            }
            let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + lw.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            for j in 0..k {
                resp.set(i, j, (lw[j] - lse).exp());
            }
            ll += lse;
        }
        (resp, ll)
    }

    /// Per-sample component responsibilities (rows sum to 1) and the total
    /// log-likelihood of `latents` under the model.
    pub fn responsibilities(&self, latents: &Tensor) -> Result<(Tensor, f64)> {
        if latents.cols != self.dim() || latents.rows == 0 {
            return Err(Error::invalid(format!(
                "latents are {} x {}, model dim is {}",
                latents.rows,
                latents.cols,
                self.dim()
            )));
        }
        let prep = self
            .prepare()
            .map_err(|_| Error::invalid("covariance is not positive definite"))?;
        Ok(self.e_step(&prep, latents))
    }

    /// Most responsible component per sample; ties pick the lowest index.
    pub fn hard_labels(&self, latents: &Tensor) -> Result<Vec<usize>> {
        let (resp, _) = self.responsibilities(latents)?;
        Ok((0..resp.rows)
            .map(|i| {
                let row = resp.row(i);
                let mut best = 0;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect())
    }
}

fn forward_solve(d: usize, l: &[f64], b: &mut [f64]) {
    for i in 0..d {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * d + j] * b[j];
        }
        b[i] = s / l[i * d + i];
    }
}

/// Covariance of the whole dataset in the requested parameterization, floor
/// included; used to initialize components and to restart collapsed ones.
fn global_covariance(latents: &Tensor, cov_type: CovarianceType, k: usize, floor: f64) -> Covariances {
    let (n, d) = latents.shape();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(latents.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    match cov_type {
        CovarianceType::Full | CovarianceType::Tied => {
            let mut s = Tensor::zeros(d, d);
            for i in 0..n {
                let x = latents.row(i);
                for a in 0..d {
                    let da = x[a] - mean[a];
                    for b in a..d {
                        let v = s.get(a, b) + da * (x[b] - mean[b]);
                        s.set(a, b, v);
                    }
                }
            }
            for a in 0..d {
                for b in a..d {
                    let v = s.get(a, b) / n as f64 + if a == b { floor } else { 0.0 };
                    s.set(a, b, v);
                    s.set(b, a, v);
                }
            }
            match cov_type {
                CovarianceType::Full => Covariances::Full(vec![s; k]),
                _ => Covariances::Tied(s),
            }
        }
        CovarianceType::Diag | CovarianceType::Spherical => {
            let mut var = vec![0.0; d];
            for i in 0..n {
                for (v, (x, m)) in var.iter_mut().zip(latents.row(i).iter().zip(&mean)) {
                    *v += (x - m) * (x - m);
                }
            }
            for v in &mut var {
                *v = *v / n as f64 + floor;
            }
            match cov_type {
                CovarianceType::Diag => {
                    let rows: Vec<f64> = std::iter::repeat(&var)
                        .take(k)
                        .flat_map(|r| r.iter().copied())
                        .collect();
                    Covariances::Diag(Tensor::from_vec(k, d, rows).unwrap())
                }
                _ => {
                    let iso = var.iter().sum::<f64>() / d as f64;
                    Covariances::Spherical(vec![iso; k])
                }
            }
        }
    }
}

/// k-means++ seeding: the first center uniform, the rest sampled with
/// probability proportional to squared distance from the chosen set.
fn kmeans_pp_rows(latents: &Tensor, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = latents.rows;
    let mut centers = Vec::with_capacity(k);
    centers.push(rng.gen_range(0..n));
    let dist2 = |i: usize, j: usize| {
        latents
            .row(i)
            .iter()
            .zip(latents.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    };
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(i, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, v) in d2.iter().enumerate() {
                if r < *v {
                    pick = i;
                    break;
                }
                r -= v;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(next);
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(dist2(i, next));
        }
    }
    centers
}

struct MStep {
    weights: Vec<f64>,
    means: Tensor,
    covariances: Covariances,
    collapsed: Vec<usize>,
}

fn m_step(latents: &Tensor, resp: &Tensor, cov_type: CovarianceType, floor: f64) -> MStep {
    let (n, d) = latents.shape();
    let k = resp.cols;
    let mut mass = vec![0.0; k];
    for i in 0..n {
        for (m, r) in mass.iter_mut().zip(resp.row(i)) {
            *m += r;
        }
    }
    let collapsed: Vec<usize> = (0..k).filter(|j| mass[*j] < COLLAPSE_MASS).collect();
    if !collapsed.is_empty() {
        return MStep {
            weights: vec![],
            means: Tensor::zeros(0, 0),
            covariances: Covariances::Spherical(vec![]),
            collapsed,
        };
    }
    let weights: Vec<f64> = mass.iter().map(|m| m / n as f64).collect();
    let mut means = Tensor::zeros(k, d);
    for i in 0..n {
        let x = latents.row(i);
        let r = resp.row(i);
        for j in 0..k {
            for a in 0..d {
                let v = means.get(j, a) + r[j] * x[a];
                means.set(j, a, v);
            }
        }
    }
    for j in 0..k {
        for a in 0..d {
            let v = means.get(j, a) / mass[j];
            means.set(j, a, v);
        }
    }
    let covariances = match cov_type {
        CovarianceType::Full | CovarianceType::Tied => {
            let mut mats = vec![Tensor::zeros(d, d); k];
            let mut diff = vec![0.0; d];
            for i in 0..n {
                let x = latents.row(i);
                let r = resp.row(i);
                for j in 0..k {
                    if r[j] == 0.0 {
                        continue;
                    }
                    let mean = means.row(j);
                    for a in 0..d {
                        diff[a] = x[a] - mean[a];
                    }
                    let m = &mut mats[j];
                    for a in 0..d {
                        let w = r[j] * diff[a];
                        for b in a..d {
                            let v = m.get(a, b) + w * diff[b];
                            m.set(a, b, v);
                        }
                    }
                }
            }
            if cov_type == CovarianceType::Full {
                for (j, m) in mats.iter_mut().enumerate() {
                    finish_symmetric(m, mass[j], floor);
                }
                Covariances::Full(mats)
            } else {
                // Pooled across components: responsibility-weighted scatter
                // around each mean, normalized by the total sample count.
                let mut pooled = Tensor::zeros(d, d);
                for m in &mats {
                    for a in 0..d {
                        for b in a..d {
                            let v = pooled.get(a, b) + m.get(a, b);
                            pooled.set(a, b, v);
                        }
                    }
                }
                finish_symmetric(&mut pooled, n as f64, floor);
                Covariances::Tied(pooled)
            }
        }
        CovarianceType::Diag | CovarianceType::Spherical => {
            let mut vars = Tensor::zeros(k, d);
            for i in 0..n {
                let x = latents.row(i);
                let r = resp.row(i);
                for j in 0..k {
                    if r[j] == 0.0 {
                        continue;
                    }
                    let mean = means.row(j);
                    for a in 0..d {
                        let diff = x[a] - mean[a];
                        let v = vars.get(j, a) + r[j] * diff * diff;
                        vars.set(j, a, v);
                    }
                }
            }
            if cov_type == CovarianceType::Diag {
                for j in 0..k {
                    for a in 0..d {
                        let v = vars.get(j, a) / mass[j] + floor;
                        vars.set(j, a, v);
                    }
                }
                Covariances::Diag(vars)
            } else {
                let iso: Vec<f64> = (0..k)
                    .map(|j| vars.row(j).iter().sum::<f64>() / (mass[j] * d as f64) + floor)
                    .collect();
                Covariances::Spherical(iso)
            }
        }
    };
    MStep {
        weights,
        means,
        covariances,
        collapsed,
    }
}

fn finish_symmetric(m: &mut Tensor, denom: f64, floor: f64) {
    let d = m.rows;
    for a in 0..d {
        for b in a..d {
            let v = m.get(a, b) / denom + if a == b { floor } else { 0.0 };
            m.set(a, b, v);
            m.set(b, a, v);
        }
    }
}

/// Replace component `j` with a fresh start: a random data row as mean, the
/// global covariance, and a uniform share of the weights.
fn reinit_component(
    model: &mut GmmModel,
    j: usize,
    latents: &Tensor,
    floor: f64,
    rng: &mut ChaCha8Rng,
) {
    let row = rng.gen_range(0..latents.rows);
    for a in 0..latents.cols {
        model.means.set(j, a, latents.get(row, a));
    }
    let k = model.k();
    let global = global_covariance(latents, model.cov_type(), k, floor);
    match (&mut model.covariances, global) {
        (Covariances::Full(mats), Covariances::Full(g)) => mats[j] = g[0].clone(),
        (Covariances::Tied(m), Covariances::Tied(g)) => *m = g,
        (Covariances::Diag(vars), Covariances::Diag(g)) => {
            for a in 0..vars.cols {
                vars.set(j, a, g.get(0, a));
            }
        }
        (Covariances::Spherical(vars), Covariances::Spherical(g)) => vars[j] = g[0],
        _ => unreachable!("global covariance matches the model type"),
    }
    model.weights[j] = 1.0 / k as f64;
    let total: f64 = model.weights.iter().sum();
    for w in &mut model.weights {
        *w /= total;
    }
}

/// Fit a K-component mixture by EM with k-means++ seeding and the default
/// covariance floor. A collapsed component is restarted once; a second
/// collapse is an error.
pub fn gmm_fit(latents: &Tensor, k: usize, cov_type: CovarianceType, seed: u64) -> Result<GmmFit> {
    gmm_fit_with_floor(latents, k, cov_type, seed, COVARIANCE_FLOOR)
}

pub fn gmm_fit_with_floor(
    latents: &Tensor,
    k: usize,
    cov_type: CovarianceType,
    seed: u64,
    floor: f64,
) -> Result<GmmFit> {
    let (n, d) = latents.shape();
    if k == 0 || n <= k || d == 0 {
        return Err(Error::invalid(format!(
            "gmm needs n > k >= 1 and d > 0, got n={n}, k={k}, d={d}"
        )));
    }
    if !latents.is_finite() {
        return Err(Error::invalid("latents contain non-finite values"));
    }
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::invalid(format!("covariance floor must be positive, got {floor}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = kmeans_pp_rows(latents, k, &mut rng);
    let mut means = Tensor::zeros(k, d);
    for (j, c) in centers.iter().enumerate() {
        for a in 0..d {
            means.set(j, a, latents.get(*c, a));
        }
    }
    let mut model = GmmModel {
        weights: vec![1.0 / k as f64; k],
        means,
        covariances: global_covariance(latents, cov_type, k, floor),
    };
    let mut reinitialized = vec![false; k];
    let mut restart = |model: &mut GmmModel, js: &[usize], rng: &mut ChaCha8Rng| -> Result<()> {
        for j in js {
            if *j == TIED_COMPONENT {
                return Err(Error::invalid("tied covariance is not positive definite"));
            }
            if reinitialized[*j] {
                return Err(Error::invalid(format!(
                    "gmm component {j} collapsed again after reinitialization"
                )));
            }
            reinitialized[*j] = true;
            reinit_component(model, *j, latents, floor, rng);
        }
        Ok(())
    };
    let mut history = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..EM_MAX_ITERS {
        let prep = match model.prepare() {
            Ok(p) => p,
            Err(j) => {
                restart(&mut model, &[j], &mut rng)?;
                continue;
            }
        };
        let (resp, ll) = model.e_step(&prep, latents);
        if !ll.is_finite() {
            return Err(Error::invalid("gmm log-likelihood became non-finite"));
        }
        history.push(ll);
        if (ll - prev_ll).abs() < EM_TOL {
            break;
        }
        prev_ll = ll;
        let step = m_step(latents, &resp, cov_type, floor);
        if step.collapsed.is_empty() {
            model.weights = step.weights;
            model.means = step.means;
            model.covariances = step.covariances;
        } else {
            restart(&mut model, &step.collapsed, &mut rng)?;
        }
    }
    Ok(GmmFit {
        model,
        log_likelihoods: history,
    })
}

/// Ancestral sampling: a component drawn by weight, then its Gaussian.
/// Deterministic per seed.
pub fn gmm_sample(model: &GmmModel, n: usize, seed: u64) -> Result<Tensor> {
    let d = model.dim();
    let prep = model
        .prepare()
        .map_err(|_| Error::invalid("covariance is not positive definite"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Tensor::zeros(n, d);
    let mut z = vec![0.0; d];
    for i in 0..n {
        let mut u: f64 = rng.gen();
        let mut comp = model.k() - 1;
        for (j, w) in model.weights.iter().enumerate() {
            if u < *w {
                comp = j;
                break;
            }
            u -= w;
        }
        for v in &mut z {
            *v = rng.sample(StandardNormal);
        }
        let mean = model.means.row(comp);
        match &prep {
            Prepared::Full(chols) => lower_apply(d, &chols[comp].0, mean, &z, |a, v| out.set(i, a, v)),
            Prepared::Tied(l, _) => lower_apply(d, l, mean, &z, |a, v| out.set(i, a, v)),
            Prepared::Diag(_) => {
                let Covariances::Diag(vars) = &model.covariances else { unreachable!() };
                let var = vars.row(comp);
                for a in 0..d {
                    out.set(i, a, mean[a] + var[a].sqrt() * z[a]);
                }
            }
            Prepared::Spherical(_) => {
                let Covariances::Spherical(vars) = &model.covariances else { unreachable!() };
                let sd = vars[comp].sqrt();
                for a in 0..d {
                    out.set(i, a, mean[a] + sd * z[a]);
                }
            }
        }
    }
    Ok(out)
}

/// x = mean + L z for a lower-triangular factor, emitted per coordinate.
fn lower_apply(d: usize, l: &[f64], mean: &[f64], z: &[f64], mut emit: impl FnMut(usize, f64)) {
    for a in 0..d {
        let mut v = mean[a];
        for b in 0..=a {
            v += l[a * d + b] * z[b];
        }
        emit(a, v);
    }
}

/// One evaluated grid-search cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub components: usize,
    pub cov_type: CovarianceType,
    pub jsd: f64,
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub table: Vec<GridCell>,
    pub best_index: usize,
    pub best: GmmModel,
}

/// Fit every (K, covariance type) cell, score each with `eval` (lower is
/// better; the caller decodes samples and compares against its reference),
/// and return the full table plus the argmin model.
pub fn gmm_grid_search(
    latents: &Tensor,
    component_grid: &[usize],
    cov_types: &[CovarianceType],
    seed: u64,
    mut eval: impl FnMut(&GmmModel) -> Result<f64>,
) -> Result<GridSearch> {
    if component_grid.is_empty() || cov_types.is_empty() {
        return Err(Error::invalid("grid search needs non-empty component and type grids"));
    }
    let mut table = Vec::new();
    let mut best: Option<(usize, GmmModel)> = None;
    for k in component_grid {
        for cov_type in cov_types {
            let fit = gmm_fit(latents, *k, *cov_type, seed)?;
            let score = eval(&fit.model)?;
            if !score.is_finite() {
                return Err(Error::invalid(format!(
                    "grid eval returned non-finite score {score} at k={k}, {cov_type}"
                )));
            }
            table.push(GridCell {
                components: *k,
                cov_type: *cov_type,
                jsd: score,
            });
            let better = match &best {
                None => true,
                Some((idx, _)) => score < table[*idx].jsd,
            };
            if better {
                best = Some((table.len() - 1, fit.model));
            }
        }
    }
    let (best_index, best) = best.unwrap();
    Ok(GridSearch {
        table,
        best_index,
        best,
    })
}

/// Evenly spaced convex combinations of two latents, endpoints included.
pub fn interpolate(s: &[f64], t: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    if s.len() != t.len() {
        return Err(Error::invalid(format!(
            "interpolation endpoints have dims {} and {}",
            s.len(),
            t.len()
        )));
    }
    if steps < 2 {
        return Err(Error::invalid(format!("interpolation needs at least 2 steps, got {steps}")));
    }
    Ok((0..steps)
        .map(|i| {
            let alpha = i as f64 / (steps - 1) as f64;
            s.iter()
                .zip(t)
                .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
                .collect()
        })
        .collect())
}
