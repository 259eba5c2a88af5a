//! Embedding extraction and PCA compression to 2D.
//!
//! Two routes produce the same 2D scatter data: `cnn_dr` projects
//! penultimate-layer network embeddings, `vanilla_dr` projects flattened
//! one-hot encodings directly. PCA fits on whichever matrix it is given;
//! wide matrices (more columns than rows) go through the Gram matrix so the
//! eigenproblem never exceeds the row count.

mod eigen;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::corpus::OneHotTensor;
use crate::nn::{NetError, Network};
use eigen::symmetric_eigen;

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// An encoded level with the identity it keeps through projection.
#[derive(Debug, Clone)]
pub struct EncodedLevel {
    pub id: String,
    pub generator: String,
    pub tensor: OneHotTensor,
}

/// Row-per-level embedding matrix with aligned ids and generator labels.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub values: Array2<f64>,
    pub level_ids: Vec<String>,
    pub generators: Vec<String>,
}

impl EmbeddingMatrix {
    pub fn new(
        values: Array2<f64>,
        level_ids: Vec<String>,
        generators: Vec<String>,
    ) -> Result<Self, CompressError> {
        if values.nrows() != level_ids.len() || values.nrows() != generators.len() {
            return Err(CompressError::ShapeMismatch(format!(
                "matrix has {} rows, {} ids, {} generators",
                values.nrows(),
                level_ids.len(),
                generators.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CompressError::DegenerateData(
                "embedding matrix contains non-finite values".into(),
            ));
        }
        Ok(Self {
            values,
            level_ids,
            generators,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }
}

/// A fitted PCA basis: column means, orthonormal components (rows), and the
/// fraction of total variance each component explains.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub column_means: Array1<f64>,
    /// Shape (k, d); row i is the i-th principal direction.
    pub components: Array2<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// One level's 2D coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub level_id: String,
    pub generator: String,
    pub pc1: f64,
    pub pc2: f64,
}

/// Post-activation output of the dense layer immediately before the output
/// layer: width 64 for the basic architecture, 1000 for VGG-16.
pub fn extract_embedding(
    network: &Network,
    level: &OneHotTensor,
) -> Result<Array1<f64>, CompressError> {
    Ok(network.penultimate_activation(&level.data)?)
}

/// Stacks per-level embeddings into a row-per-level matrix, preserving order.
pub fn embedding_matrix(
    network: &Network,
    levels: &[EncodedLevel],
) -> Result<EmbeddingMatrix, CompressError> {
    if levels.is_empty() {
        return Err(CompressError::InvalidRequest(
            "no levels to embed".into(),
        ));
    }
    let first = extract_embedding(network, &levels[0].tensor)?;
    let width = first.len();
    let mut values = Array2::zeros((levels.len(), width));
    values.row_mut(0).assign(&first);
    for (i, level) in levels.iter().enumerate().skip(1) {
        let row = extract_embedding(network, &level.tensor)?;
        values.row_mut(i).assign(&row);
    }
    EmbeddingMatrix::new(
        values,
        levels.iter().map(|l| l.id.clone()).collect(),
        levels.iter().map(|l| l.generator.clone()).collect(),
    )
}

/// Orients each component so its largest-magnitude entry is positive, which
/// pins the otherwise arbitrary eigenvector signs.
fn fix_component_signs(components: &mut Array2<f64>) {
    for mut row in components.rows_mut() {
        let mut best = 0usize;
        for i in 1..row.len() {
            if row[i].abs() > row[best].abs() {
                best = i;
            }
        }
        if row[best] < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }
}

/// Modified Gram-Schmidt pass; keeps near-exactly-orthonormal vectors stable.
fn orthonormalize_rows(components: &mut Array2<f64>) {
    let k = components.nrows();
    for i in 0..k {
        for j in 0..i {
            let dot = components.row(i).dot(&components.row(j));
            let other = components.row(j).to_owned();
            components.row_mut(i).scaled_add(-dot, &other);
        }
        let norm = components.row(i).dot(&components.row(i)).sqrt();
        if norm > 0.0 {
            components.row_mut(i).mapv_inplace(|v| v / norm);
        }
    }
}

/// Fits a k-component PCA: mean-centers columns and takes the top-k right
/// singular directions of the centered matrix, ordered by descending
/// explained variance, signs fixed by the largest-entry-positive rule.
pub fn pca_fit(matrix: &EmbeddingMatrix, k: usize) -> Result<PcaModel, CompressError> {
    let n = matrix.rows();
    let d = matrix.cols();
    if n < 2 {
        return Err(CompressError::InvalidRequest(format!(
            "PCA needs at least 2 rows, found {n}"
        )));
    }
    if k == 0 || k > d.min(n - 1) {
        return Err(CompressError::InvalidRequest(format!(
            "component count {k} out of range for a {n}x{d} matrix"
        )));
    }

    let column_means = matrix.values.sum_axis(ndarray::Axis(0)) / n as f64;
    let centered = &matrix.values - &column_means;

    // Total variance via the Frobenius norm; this equals the eigenvalue sum
    // of either scatter matrix below.
    let total_scatter: f64 = centered.iter().map(|v| v * v).sum();
    let input_scale: f64 =
        matrix.values.iter().map(|v| v * v).sum::<f64>() / (n * d) as f64;
    if total_scatter <= 1e-20 * (1.0 + input_scale) {
        return Err(CompressError::DegenerateData(
            "all rows are identical; no variance in any direction".into(),
        ));
    }

    let (eigenvalues, mut components) = if d <= n {
        // Scatter matrix X^T X is d x d.
        let scatter = centered.t().dot(&centered);
        let (values, vectors) = symmetric_eigen(&scatter);
        let top = Array2::from_shape_fn((k, d), |(i, j)| vectors[[i, j]]);
        (values, top)
    } else {
        // Gram route: eigenvectors u of X X^T give right singular vectors
        // X^T u / sigma.
        let gram = centered.dot(&centered.t());
        let (values, vectors) = symmetric_eigen(&gram);
        let mut top = Array2::zeros((k, d));
        let sigma_max = values[0].max(0.0).sqrt();
        for i in 0..k {
            let sigma = values[i].max(0.0).sqrt();
            if sigma > sigma_max * 1e-12 {
                let u = vectors.row(i);
                let dir = centered.t().dot(&u) / sigma;
                top.row_mut(i).assign(&dir);
            } else {
                // Rank exhausted: deterministically complete the basis from
                // standard basis vectors orthogonal to what we have.
                'basis: for e in 0..d {
                    let mut candidate = Array1::zeros(d);
                    candidate[e] = 1.0;
                    for j in 0..i {
                        let dot = top.row(j).dot(&candidate);
                        candidate.scaled_add(-dot, &top.row(j).to_owned());
                    }
                    let norm = candidate.dot(&candidate).sqrt();
                    if norm > 1e-6 {
                        top.row_mut(i).assign(&(candidate / norm));
                        break 'basis;
                    }
                }
            }
        }
        (values, top)
    };

    orthonormalize_rows(&mut components);
    fix_component_signs(&mut components);

    let explained_variance_ratio: Vec<f64> = eigenvalues
        .iter()
        .take(k)
        .map(|&v| (v.max(0.0) / total_scatter).clamp(0.0, 1.0))
        .collect();

    Ok(PcaModel {
        column_means,
        components,
        explained_variance_ratio,
    })
}

/// Projects rows onto the first two components, carrying ids and generator
/// labels through.
pub fn project_2d(
    model: &PcaModel,
    matrix: &EmbeddingMatrix,
) -> Result<Vec<ProjectedPoint>, CompressError> {
    if model.components.nrows() < 2 {
        return Err(CompressError::InvalidRequest(format!(
            "projection needs at least 2 components, model has {}",
            model.components.nrows()
        )));
    }
    if model.components.ncols() != matrix.cols() {
        return Err(CompressError::ShapeMismatch(format!(
            "model spans {} columns, matrix has {}",
            model.components.ncols(),
            matrix.cols()
        )));
    }
    let c1 = model.components.row(0);
    let c2 = model.components.row(1);
    let mut points = Vec::with_capacity(matrix.rows());
    for (i, row) in matrix.values.rows().into_iter().enumerate() {
        let centered = &row - &model.column_means;
        points.push(ProjectedPoint {
            level_id: matrix.level_ids[i].clone(),
            generator: matrix.generators[i].clone(),
            pc1: centered.dot(&c1),
            pc2: centered.dot(&c2),
        });
    }
    Ok(points)
}

/// The no-network baseline: PCA applied directly to row-major flattened
/// one-hot encodings.
pub fn vanilla_dr(levels: &[EncodedLevel]) -> Result<Vec<ProjectedPoint>, CompressError> {
    if levels.len() < 2 {
        return Err(CompressError::InvalidRequest(
            "need at least 2 levels to project".into(),
        ));
    }
    let width = levels[0].tensor.data.len();
    for level in levels {
        if level.tensor.data.len() != width {
            return Err(CompressError::ShapeMismatch(
                "levels have inhomogeneous one-hot shapes".into(),
            ));
        }
    }
    let mut values = Array2::zeros((levels.len(), width));
    for (i, level) in levels.iter().enumerate() {
        for (j, &v) in level.tensor.data.iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    let matrix = EmbeddingMatrix::new(
        values,
        levels.iter().map(|l| l.id.clone()).collect(),
        levels.iter().map(|l| l.generator.clone()).collect(),
    )?;
    let model = pca_fit(&matrix, 2)?;
    project_2d(&model, &matrix)
}

/// The network route: penultimate-layer embeddings, PCA to 2, projection.
pub fn cnn_dr(
    network: &Network,
    levels: &[EncodedLevel],
) -> Result<Vec<ProjectedPoint>, CompressError> {
    let matrix = embedding_matrix(network, levels)?;
    let model = pca_fit(&matrix, 2)?;
    project_2d(&model, &matrix)
}

#[cfg(test)]
mod tests;
