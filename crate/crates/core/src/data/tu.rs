//! Reader and writer for the TU graph benchmark text format.
//!
//! A dataset `NAME` lives in one directory as
//! `NAME_A.txt` (edges `i, j`, 1-indexed global node ids),
//! `NAME_graph_indicator.txt` (graph id of node `k` on line `k`),
//! and optionally `NAME_graph_labels.txt`, `NAME_node_labels.txt`,
//! `NAME_node_attributes.txt`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{DataError, DataResult, Dataset, Graph};
use crate::tensor::Tensor;

struct LineFile {
    path: PathBuf,
    lines: Vec<String>,
}

impl LineFile {
    fn read(path: PathBuf) -> DataResult<Self> {
        let text = fs::read_to_string(&path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                DataError::MissingFile(path.clone())
            } else {
                DataError::Io {
                    path: path.clone(),
                    source,
                }
            }
        })?;
        let mut lines: Vec<String> = text.lines().map(|l| l.trim().to_string()).collect();
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        Ok(Self { path, lines })
    }

    fn read_optional(path: PathBuf) -> DataResult<Option<Self>> {
        if path.exists() {
            Self::read(path).map(Some)
        } else {
            Ok(None)
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> DataError {
        DataError::Parse {
            file: self.path.clone(),
            line: line + 1,
            message: message.into(),
        }
    }

    fn int(&self, line: usize, token: &str) -> DataResult<i64> {
        token
            .trim()
            .parse::<i64>()
            .map_err(|_| self.error(line, format!("expected an integer, found {token:?}")))
    }

    fn ints(&self) -> DataResult<Vec<i64>> {
        self.lines.iter().enumerate().map(|(i, l)| self.int(i, l)).collect()
    }
}

fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Reads a TU dataset. Edges are symmetrised; self-loops are dropped.
pub fn parse_tu_dataset(dir: impl AsRef<Path>, name: &str) -> DataResult<Dataset> {
    let dir = dir.as_ref();
    let edges_file = LineFile::read(file_path(dir, name, "A"))?;
    let indicator_file = LineFile::read(file_path(dir, name, "graph_indicator"))?;
    let graph_labels_file = LineFile::read_optional(file_path(dir, name, "graph_labels"))?;
    let node_labels_file = LineFile::read_optional(file_path(dir, name, "node_labels"))?;
    let attributes_file = LineFile::read_optional(file_path(dir, name, "node_attributes"))?;

    let indicator = indicator_file.ints()?;
    let node_total = indicator.len();
    if node_total == 0 {
        return Err(DataError::Invalid(format!("{name}: graph indicator is empty")));
    }
    let graph_count = indicator
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            if g < 1 {
                Err(indicator_file.error(i, format!("graph id {g} must be >= 1")))
            } else {
                Ok(g as usize)
            }
        })
        .collect::<DataResult<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);

    // global node -> (graph, local index), local indices in file order
    let mut sizes = vec![0usize; graph_count];
    let mut local = Vec::with_capacity(node_total);
    for &g in &indicator {
        let gi = g as usize - 1;
        local.push((gi, sizes[gi]));
        sizes[gi] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(DataError::Invalid(format!("{name}: graph {} has no nodes", empty + 1)));
    }

    let mut adjacency: Vec<Tensor> = sizes.iter().map(|&n| Tensor::zeros(n, n)).collect();
    for (i, line) in edges_file.lines.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(edges_file.error(i, format!("expected \"i, j\", found {line:?}")));
        };
        let (u, v) = (edges_file.int(i, a)?, edges_file.int(i, b)?);
        let resolve = |x: i64| -> DataResult<(usize, usize)> {
            if x < 1 || x as usize > node_total {
                return Err(edges_file.error(
                    i,
                    format!("node index {x} outside graph-indicator range 1..={node_total}"),
                ));
            }
            Ok(local[x as usize - 1])
        };
        let ((gu, lu), (gv, lv)) = (resolve(u)?, resolve(v)?);
        if gu != gv {
            return Err(edges_file.error(i, format!("edge ({u}, {v}) joins two different graphs")));
        }
        if lu != lv {
            adjacency[gu].set(lu, lv, 1.0);
            adjacency[gu].set(lv, lu, 1.0);
        }
    }

    let raw_graph_labels = match &graph_labels_file {
        Some(f) => {
            let labels = f.ints()?;
            if labels.len() != graph_count {
                return Err(DataError::Invalid(format!(
                    "{name}: {} graph labels for {graph_count} graphs",
                    labels.len()
                )));
            }
            labels
        }
        None => vec![0; graph_count],
    };
    let class_values: Vec<i64> = raw_graph_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let node_labels = match &node_labels_file {
        Some(f) => {
            let labels = f.ints()?;
            if labels.len() != node_total {
                return Err(DataError::Invalid(format!(
                    "{name}: {} node labels for {node_total} nodes",
                    labels.len()
                )));
            }
            Some(labels)
        }
        None => None,
    };

    let attributes = match &attributes_file {
        Some(f) => {
            if f.lines.len() != node_total {
                return Err(DataError::Invalid(format!(
                    "{name}: {} attribute rows for {node_total} nodes",
                    f.lines.len()
                )));
            }
            let mut rows = Vec::with_capacity(node_total);
            for (i, l) in f.lines.iter().enumerate() {
                let row = l
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| f.error(i, format!("expected a real number, found {t:?}")))
                    })
                    .collect::<DataResult<Vec<f64>>>()?;
                rows.push(row);
            }
            let d = rows[0].len();
            if let Some(bad) = rows.iter().position(|r| r.len() != d) {
                return Err(f.error(bad, format!("expected {d} attributes")));
            }
            Some((rows, d))
        }
        None => None,
    };

    let feature_dim = attributes.as_ref().map_or(0, |(_, d)| *d);
    let mut features: Vec<Tensor> = sizes.iter().map(|&n| Tensor::zeros(n, feature_dim)).collect();
    let mut per_graph_labels: Vec<Vec<i64>> = sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
    for (k, &(g, l)) in local.iter().enumerate() {
        if let Some((rows, _)) = &attributes {
            for (c, &v) in rows[k].iter().enumerate() {
                features[g].set(l, c, v);
            }
        }
        if let Some(labels) = &node_labels {
            per_graph_labels[g].push(labels[k]);
        }
    }

    let graphs = adjacency
        .into_iter()
        .zip(features)
        .zip(per_graph_labels)
        .zip(&raw_graph_labels)
        .map(|(((adjacency, features), labels), raw)| Graph {
            adjacency,
            features,
            class_label: class_values.binary_search(raw).expect("label collected above"),
            node_labels: node_labels.as_ref().map(|_| labels),
        })
        .collect();

    Ok(Dataset {
        name: name.to_string(),
        graphs,
        feature_dim,
        class_values,
        has_attributes: attributes.is_some(),
    })
}

/// Writes `dataset` in TU format. Node attributes are written only when the
/// dataset's features came from an attribute file.
pub fn write_tu_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> DataResult<()> {
    let dir = dir.as_ref();
    let name = &dataset.name;
    let io = |path: PathBuf| move |source| DataError::Io { path, source };
    fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;

    let mut edges = String::new();
    let mut indicator = String::new();
    let mut graph_labels = String::new();
    let mut node_labels = String::new();
    let mut attributes = String::new();
    let with_labels = dataset.graphs.iter().all(|g| g.node_labels.is_some());

    let mut offset = 0usize;
    for (gi, g) in dataset.graphs.iter().enumerate() {
        let n = g.node_count();
        for u in 0..n {
            for v in 0..n {
                if g.adjacency.get(u, v) > 0.0 {
                    let _ = writeln!(edges, "{}, {}", offset + u + 1, offset + v + 1);
                }
            }
            let _ = writeln!(indicator, "{}", gi + 1);
            if dataset.has_attributes {
                let row: Vec<String> = g.features.row_slice(u).iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(attributes, "{}", row.join(", "));
            }
        }
        if with_labels {
            for l in g.node_labels.as_ref().expect("checked") {
                let _ = writeln!(node_labels, "{l}");
            }
        }
        let _ = writeln!(graph_labels, "{}", dataset.class_values[g.class_label]);
        offset += n;
    }

    let write = |suffix: &str, body: &str| {
        let path = file_path(dir, name, suffix);
        fs::write(&path, body).map_err(io(path.clone()))
    };
    write("A", &edges)?;
    write("graph_indicator", &indicator)?;
    write("graph_labels", &graph_labels)?;
    if with_labels {
        write("node_labels", &node_labels)?;
    }
    if dataset.has_attributes {
        write("node_attributes", &attributes)?;
    }
    Ok(())
}
