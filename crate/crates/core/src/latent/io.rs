//! Text formats for mixture models, PCA projections, and grid-search tables.
//!
//! Model files open with a versioned header, carry their dimensions as
//! key-value lines, then matrix blocks of shortest-round-trip floats:
//! ```text
//! # blockgen gmm v1
//! components <K>
//! dim <D>
//! cov_type <full|diag|tied|spherical>
//! block weights 1 <K>
//! block means <K> <D>
//! block covariance <R> <C>
//! ```
//! The covariance block is K stacked D x D matrices for `full`, K x D
//! variances for `diag`, one D x D matrix for `tied`, and 1 x K for
//! `spherical`. PCA files (`# blockgen pca v1`) hold `input_dim`,
//! `output_dim`, then blocks `mean`, `components`, `explained_variance`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forest_io::{parse, Lines};
use crate::nn::Tensor;

use super::{Covariances, CovarianceType, GmmModel, GridCell, PcaModel};

const GMM_HEADER: &str = "# blockgen gmm v1";
const PCA_HEADER: &str = "# blockgen pca v1";

fn expect_kv(lines: &mut Lines, key: &str, arity: usize) -> Result<Vec<String>> {
    let fields = lines
        .next_fields()?
        .ok_or_else(|| Error::schema(lines.number + 1, format!("missing \"{key}\" line")))?;
    if fields[0] != key || fields.len() != arity + 1 {
        return Err(Error::schema(
            lines.number,
            format!("expected \"{key}\" with {arity} value(s), got {:?}", fields.join(" ")),
        ));
    }
    Ok(fields[1..].to_vec())
}

fn write_matrix(
    out: &mut impl Write,
    name: &str,
    rows: usize,
    cols: usize,
    get: impl Fn(usize, usize) -> f64,
) -> Result<()> {
    writeln!(out, "block {name} {rows} {cols}")?;
    let mut line = String::new();
    for r in 0..rows {
        line.clear();
        for c in 0..cols {
            if c > 0 {
                line.push(' ');
            }
            line.push_str(&get(r, c).to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn read_matrix(lines: &mut Lines, name: &str) -> Result<Tensor> {
    let fields = expect_kv(lines, "block", 3)?;
    let head_line = lines.number;
    if fields[0] != name {
        return Err(Error::schema(
            head_line,
            format!("expected block {name:?}, got {:?}", fields[0]),
        ));
    }
    let rows: usize = parse(head_line, &fields[1])?;
    let cols: usize = parse(head_line, &fields[2])?;
    if rows == 0 || cols == 0 {
        return Err(Error::schema(head_line, format!("block {name} has an empty shape")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let row = lines
            .next_fields()?
            .ok_or_else(|| Error::schema(lines.number + 1, format!("truncated block {name}")))?;
        if row.len() != cols {
            return Err(Error::schema(
                lines.number,
                format!("block {name} row has {} values, expected {cols}", row.len()),
            ));
        }
        for field in &row {
            let v: f64 = parse(lines.number, field)?;
            if !v.is_finite() {
                return Err(Error::schema(lines.number, format!("non-finite value {field:?}")));
            }
            data.push(v);
        }
    }
    Ok(Tensor::from_vec(rows, cols, data).unwrap())
}

fn expect_end(lines: &mut Lines) -> Result<()> {
    if lines.next_fields()?.is_some() {
        return Err(Error::schema(lines.number, "unexpected trailing content"));
    }
    Ok(())
}

pub fn write_gmm(path: impl AsRef<Path>, model: &GmmModel) -> Result<()> {
    let (k, d) = (model.k(), model.dim());
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{GMM_HEADER}")?;
    writeln!(out, "components {k}")?;
    writeln!(out, "dim {d}")?;
    writeln!(out, "cov_type {}", model.cov_type())?;
    write_matrix(&mut out, "weights", 1, k, |_, c| model.weights[c])?;
    write_matrix(&mut out, "means", k, d, |r, c| model.means.get(r, c))?;
    match &model.covariances {
        Covariances::Full(mats) => {
            write_matrix(&mut out, "covariance", k * d, d, |r, c| mats[r / d].get(r % d, c))?
        }
        Covariances::Diag(vars) => {
            write_matrix(&mut out, "covariance", k, d, |r, c| vars.get(r, c))?
        }
        Covariances::Tied(m) => write_matrix(&mut out, "covariance", d, d, |r, c| m.get(r, c))?,
        Covariances::Spherical(vars) => {
            write_matrix(&mut out, "covariance", 1, k, |_, c| vars[c])?
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_gmm(path: impl AsRef<Path>) -> Result<GmmModel> {
    let mut lines = Lines::open(path.as_ref())?;
    lines.expect_header(GMM_HEADER)?;
    let k: usize = parse(lines.number, &expect_kv(&mut lines, "components", 1)?[0])?;
    let d: usize = parse(lines.number, &expect_kv(&mut lines, "dim", 1)?[0])?;
    if k == 0 || d == 0 {
        return Err(Error::schema(lines.number, "components and dim must be positive"));
    }
    let cov_type: CovarianceType =
        parse(lines.number, &expect_kv(&mut lines, "cov_type", 1)?[0])?;

    let weights_mat = read_matrix(&mut lines, "weights")?;
    if weights_mat.shape() != (1, k) {
        return Err(Error::schema(lines.number, format!("weights must be 1 x {k}")));
    }
    let weights = weights_mat.data;
    if weights.iter().any(|w| *w < 0.0) {
        return Err(Error::schema(lines.number, "weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::schema(
            lines.number,
            format!("weights sum to {total}, expected 1"),
        ));
    }

    let means = read_matrix(&mut lines, "means")?;
    if means.shape() != (k, d) {
        return Err(Error::schema(lines.number, format!("means must be {k} x {d}")));
    }

    let cov = read_matrix(&mut lines, "covariance")?;
    let cov_line = lines.number;
    let covariances = match cov_type {
        CovarianceType::Full => {
            if cov.shape() != (k * d, d) {
                return Err(Error::schema(cov_line, format!("full covariance must be {} x {d}", k * d)));
            }
            let mats = (0..k)
                .map(|j| {
                    let data = cov.data[j * d * d..(j + 1) * d * d].to_vec();
                    Tensor::from_vec(d, d, data).unwrap()
                })
                .collect();
            Covariances::Full(mats)
        }
        CovarianceType::Diag => {
            if cov.shape() != (k, d) {
                return Err(Error::schema(cov_line, format!("diag covariance must be {k} x {d}")));
            }
            Covariances::Diag(cov)
        }
        CovarianceType::Tied => {
            if cov.shape() != (d, d) {
                return Err(Error::schema(cov_line, format!("tied covariance must be {d} x {d}")));
            }
            Covariances::Tied(cov)
        }
        CovarianceType::Spherical => {
            if cov.shape() != (1, k) {
                return Err(Error::schema(cov_line, format!("spherical covariance must be 1 x {k}")));
            }
            Covariances::Spherical(cov.data)
        }
    };
    expect_end(&mut lines)?;

    let model = GmmModel {
        weights,
        means,
        covariances,
    };
    if model.prepare().is_err() {
        return Err(Error::schema(cov_line, "covariance is not positive definite"));
    }
    Ok(model)
}

pub fn write_pca(path: impl AsRef<Path>, model: &PcaModel) -> Result<()> {
    let d_in = model.mean.len();
    let d_out = model.components.rows;
    if model.components.cols != d_in || model.explained_variance.len() != d_out {
        return Err(Error::invalid("pca model fields have inconsistent shapes"));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{PCA_HEADER}")?;
    writeln!(out, "input_dim {d_in}")?;
    writeln!(out, "output_dim {d_out}")?;
    write_matrix(&mut out, "mean", 1, d_in, |_, c| model.mean[c])?;
    write_matrix(&mut out, "components", d_out, d_in, |r, c| model.components.get(r, c))?;
    write_matrix(&mut out, "explained_variance", 1, d_out, |_, c| {
        model.explained_variance[c]
    })?;
    out.flush()?;
    Ok(())
}

pub fn read_pca(path: impl AsRef<Path>) -> Result<PcaModel> {
    let mut lines = Lines::open(path.as_ref())?;
    lines.expect_header(PCA_HEADER)?;
    let d_in: usize = parse(lines.number, &expect_kv(&mut lines, "input_dim", 1)?[0])?;
    let d_out: usize = parse(lines.number, &expect_kv(&mut lines, "output_dim", 1)?[0])?;
    if d_in == 0 || d_out == 0 || d_out > d_in {
        return Err(Error::schema(
            lines.number,
            format!("need 1 <= output_dim <= input_dim, got {d_out} and {d_in}"),
        ));
    }
    let mean_mat = read_matrix(&mut lines, "mean")?;
    if mean_mat.shape() != (1, d_in) {
        return Err(Error::schema(lines.number, format!("mean must be 1 x {d_in}")));
    }
    let components = read_matrix(&mut lines, "components")?;
    if components.shape() != (d_out, d_in) {
        return Err(Error::schema(
            lines.number,
            format!("components must be {d_out} x {d_in}"),
        ));
    }
    let comp_line = lines.number;
    for i in 0..d_out {
        for j in i..d_out {
            let dot: f64 = components
                .row(i)
                .iter()
                .zip(components.row(j))
                .map(|(a, b)| a * b)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-9 {
                return Err(Error::schema(
                    comp_line,
                    format!("component rows {i} and {j} are not orthonormal (dot {dot})"),
                ));
            }
        }
    }
    let ev_mat = read_matrix(&mut lines, "explained_variance")?;
    if ev_mat.shape() != (1, d_out) {
        return Err(Error::schema(
            lines.number,
            format!("explained_variance must be 1 x {d_out}"),
        ));
    }
    let ev_line = lines.number;
    for pair in ev_mat.data.windows(2) {
        if pair[1] > pair[0] {
            return Err(Error::schema(ev_line, "explained variance must be non-increasing"));
        }
    }
    expect_end(&mut lines)?;
    Ok(PcaModel {
        mean: mean_mat.data,
        components,
        explained_variance: ev_mat.data,
    })
}

/// Grid-search table as CSV, one row per evaluated cell.
pub fn write_grid_csv(path: impl AsRef<Path>, table: &[GridCell]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "components,cov_type,jsd")?;
    for cell in table {
        writeln!(out, "{},{},{}", cell.components, cell.cov_type, cell.jsd)?;
    }
    out.flush()?;
    Ok(())
}
