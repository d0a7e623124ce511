use log::warn;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

use super::Dataset;

pub const DEFAULT_GRAPH_THRESHOLD: f64 = 0.3;

/// Edge-difference operator `Ĝ`: row `k` is `x_i − x_j` for edge `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMatrix {
    pub matrix: SparseMatrix,
    pub edges: Vec<(usize, usize)>,
    /// Zero-variance features left out of every edge.
    pub skipped_features: Vec<usize>,
}

impl GraphMatrix {
    /// Edges must satisfy `i < j < dim` and be distinct.
    pub fn from_edges(dim: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &edges {
            if i >= j || j >= dim {
                return Err(Error::InvalidConfig(format!(
                    "edge ({i}, {j}) must satisfy i < j < {dim}"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidConfig(format!("duplicate edge ({i}, {j})")));
            }
        }
        let triplets: Vec<_> = edges
            .iter()
            .enumerate()
            .flat_map(|(k, &(i, j))| [(k, i, 1.0), (k, j, -1.0)])
            .collect();
        Ok(Self {
            matrix: SparseMatrix::from_triplets(edges.len(), dim, &triplets),
            edges,
            skipped_features: Vec::new(),
        })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }
}

/// Connects features `i < j` whose sample correlation satisfies
/// `|corr| ≥ threshold`. Constant features are skipped with a warning.
pub fn build_graph(dataset: &Dataset, threshold: f64) -> Result<GraphMatrix> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "graph threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let n = dataset.len() as f64;
    let raw = dataset.features.to_dense();
    let mut x = raw.clone();
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    let cov = x.transpose() * &x;
    let d = dataset.dim();

    let mut skipped = Vec::new();
    for j in 0..d {
        let scale = raw.column(j).amax().max(1.0);
        if cov[(j, j)] <= 1e-24 * n * scale * scale {
            warn!("feature {j} has zero variance; excluded from the graph");
            skipped.push(j);
        }
    }
    let mut edges = Vec::new();
    for i in 0..d {
        if skipped.contains(&i) {
            continue;
        }
        for j in i + 1..d {
            if skipped.contains(&j) {
                continue;
            }
            let corr = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
            if corr.abs() >= threshold {
                edges.push((i, j));
            }
        }
    }
    let mut graph = GraphMatrix::from_edges(d, edges)?;
    graph.skipped_features = skipped;
    Ok(graph)
}
