//! Attributed graphs, TU-format ingestion, node featurisation and
//! one-class splits.

mod features;
mod json;
mod split;
mod tu;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Tensor;

pub use features::{build_features, FeatureMode, FeatureSpec};
pub use json::{read_dataset_json, write_dataset_json};
pub use split::{make_split, Member, NormalClass, Split};
pub use tu::{parse_tu_dataset, write_tu_dataset};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing mandatory file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type DataResult<T> = Result<T, DataError>;

/// One undirected attributed graph.
///
/// The adjacency is symmetric with a zero diagonal and entries in `[0, 1]`;
/// graphs read from disk only use `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub adjacency: Tensor,
    pub features: Tensor,
    /// Dense class index (position in [`Dataset::class_values`]).
    pub class_label: usize,
    /// Raw integer node labels as read from disk, when present.
    pub node_labels: Option<Vec<i64>>,
}

impl Graph {
    /// Builds a binary graph from an undirected edge list. Self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], features: Tensor, class_label: usize) -> Self {
        let mut adjacency = Tensor::zeros(n, n);
        for &(u, v) in edges {
            if u != v {
                adjacency.set(u, v, 1.0);
                adjacency.set(v, u, 1.0);
            }
        }
        Self {
            adjacency,
            features,
            class_label,
            node_labels: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.row_slice(v).iter().filter(|&&a| a > 0.0).count()
    }

    /// Undirected edges `(u, v)` with `u < v` and a nonzero weight.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.node_count();
        let mut out = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if self.adjacency.get(u, v) > 0.0 {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Relabels nodes: node `v` of the result is node `perm[v]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.node_count();
        assert_eq!(perm.len(), n, "permutation length");
        let d = self.feature_dim();
        let mut adjacency = Tensor::zeros(n, n);
        let mut features = Tensor::zeros(n, d);
        for (new_u, &old_u) in perm.iter().enumerate() {
            for (new_v, &old_v) in perm.iter().enumerate() {
                adjacency.set(new_u, new_v, self.adjacency.get(old_u, old_v));
            }
            for c in 0..d {
                features.set(new_u, c, self.features.get(old_u, c));
            }
        }
        Self {
            adjacency,
            features,
            class_label: self.class_label,
            node_labels: self.node_labels.as_ref().map(|l| perm.iter().map(|&p| l[p]).collect()),
        }
    }

    /// Checks symmetry, zero diagonal and the `[0, 1]` range.
    pub fn validate(&self) -> DataResult<()> {
        let n = self.node_count();
        if self.adjacency.cols() != n {
            return Err(DataError::Invalid("adjacency is not square".into()));
        }
        if self.features.rows() != n {
            return Err(DataError::Invalid(format!(
                "feature rows {} do not match node count {n}",
                self.features.rows()
            )));
        }
        for u in 0..n {
            if self.adjacency.get(u, u) != 0.0 {
                return Err(DataError::Invalid(format!("nonzero diagonal at node {u}")));
            }
            for v in 0..n {
                let a = self.adjacency.get(u, v);
                if !(0.0..=1.0).contains(&a) || a != self.adjacency.get(v, u) {
                    return Err(DataError::Invalid(format!("bad adjacency entry at ({u}, {v})")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub feature_dim: usize,
    /// Raw graph-label values, sorted; a graph's `class_label` indexes this.
    pub class_values: Vec<i64>,
    /// True when features came from a node-attribute file.
    pub has_attributes: bool,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_values.len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count()];
        for g in &self.graphs {
            sizes[g.class_label] += 1;
        }
        sizes
    }
}
