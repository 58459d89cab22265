//! One-document JSON form of a dataset with explicit adjacency lists.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, DataResult, Dataset, Graph};
use crate::tensor::Tensor;

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    /// Neighbours of each node, ascending.
    adjacency: Vec<Vec<usize>>,
    features: Vec<Vec<f64>>,
    label: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_labels: Option<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    name: String,
    feature_dim: usize,
    has_attributes: bool,
    graphs: Vec<GraphDoc>,
}

pub fn write_dataset_json(dataset: &Dataset, path: impl AsRef<Path>) -> DataResult<()> {
    let graphs = dataset
        .graphs
        .iter()
        .map(|g| {
            let n = g.node_count();
            GraphDoc {
                adjacency: (0..n)
                    .map(|u| (0..n).filter(|&v| g.adjacency.get(u, v) > 0.0).collect())
                    .collect(),
                features: (0..n).map(|u| g.features.row_slice(u).to_vec()).collect(),
                label: dataset.class_values[g.class_label],
                node_labels: g.node_labels.clone(),
            }
        })
        .collect();
    let doc = DatasetDoc {
        name: dataset.name.clone(),
        feature_dim: dataset.feature_dim,
        has_attributes: dataset.has_attributes,
        graphs,
    };
    let path = path.as_ref();
    let text = serde_json::to_string(&doc)?;
    fs::write(path, text).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_dataset_json(path: impl AsRef<Path>) -> DataResult<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let doc: DatasetDoc = serde_json::from_str(&text)?;
    let mut class_values: Vec<i64> = doc.graphs.iter().map(|g| g.label).collect();
    class_values.sort_unstable();
    class_values.dedup();

    let mut graphs = Vec::with_capacity(doc.graphs.len());
    for (gi, g) in doc.graphs.into_iter().enumerate() {
        let n = g.adjacency.len();
        if g.features.len() != n {
            return Err(DataError::Invalid(format!(
                "graph {gi}: feature rows do not match nodes"
            )));
        }
        let mut adjacency = Tensor::zeros(n, n);
        for (u, nbrs) in g.adjacency.iter().enumerate() {
            for &v in nbrs {
                if v >= n {
                    return Err(DataError::Invalid(format!("graph {gi}: neighbour {v} out of range")));
                }
                adjacency.set(u, v, 1.0);
            }
        }
        let d = doc.feature_dim;
        let mut data = Vec::with_capacity(n * d);
        for row in &g.features {
            if row.len() != d {
                return Err(DataError::Invalid(format!(
                    "graph {gi}: feature width {} != {d}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let graph = Graph {
            adjacency,
            features: Tensor::from_vec(n, d, data).expect("length checked"),
            class_label: class_values.binary_search(&g.label).expect("collected"),
            node_labels: g.node_labels,
        };
        graph.validate()?;
        graphs.push(graph);
    }
    Ok(Dataset {
        name: doc.name,
        graphs,
        feature_dim: doc.feature_dim,
        class_values,
        has_attributes: doc.has_attributes,
    })
}
