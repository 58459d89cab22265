use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{DataError, DataResult, Dataset};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// One-hot encoding of the integer node label.
    OneHotNodeLabel,
    /// One-hot encoding of `min(degree, cap)`, for label-free graphs.
    DegreeOneHot,
    /// Keep the real-valued node attributes read from disk.
    Attributes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mode: FeatureMode,
    pub degree_cap: usize,
}

impl FeatureSpec {
    pub const DEFAULT_DEGREE_CAP: usize = 10;

    pub fn one_hot() -> Self {
        Self {
            mode: FeatureMode::OneHotNodeLabel,
            degree_cap: Self::DEFAULT_DEGREE_CAP,
        }
    }

    pub fn degree(cap: usize) -> Self {
        Self {
            mode: FeatureMode::DegreeOneHot,
            degree_cap: cap,
        }
    }
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self::one_hot()
    }
}

/// Replaces every graph's feature matrix according to `spec`.
///
/// Node labels are densified to contiguous indices in first-seen order over
/// the whole dataset before encoding.
pub fn build_features(mut dataset: Dataset, spec: FeatureSpec) -> DataResult<Dataset> {
    match spec.mode {
        FeatureMode::OneHotNodeLabel => {
            let mut index: HashMap<i64, usize> = HashMap::new();
            for g in &dataset.graphs {
                let labels = g.node_labels.as_ref().ok_or_else(|| {
                    DataError::Invalid(format!("{}: one-hot features need node labels", dataset.name))
                })?;
                for &l in labels {
                    let next = index.len();
                    index.entry(l).or_insert(next);
                }
            }
            let d = index.len();
            for g in &mut dataset.graphs {
                let labels = g.node_labels.as_ref().expect("checked above");
                let mut f = Tensor::zeros(labels.len(), d);
                for (v, l) in labels.iter().enumerate() {
                    f.set(v, index[l], 1.0);
                }
                g.features = f;
            }
            dataset.feature_dim = d;
        }
        FeatureMode::DegreeOneHot => {
            if spec.degree_cap < 1 {
                return Err(DataError::Invalid("degree_cap must be >= 1".into()));
            }
            let d = spec.degree_cap + 1;
            for g in &mut dataset.graphs {
                let n = g.node_count();
                let mut f = Tensor::zeros(n, d);
                for v in 0..n {
                    f.set(v, g.degree(v).min(spec.degree_cap), 1.0);
                }
                g.features = f;
            }
            dataset.feature_dim = d;
        }
        FeatureMode::Attributes => {
            if !dataset.has_attributes {
                return Err(DataError::Invalid(format!(
                    "{}: no node attributes to use as features",
                    dataset.name
                )));
            }
        }
    }
    Ok(dataset)
}
