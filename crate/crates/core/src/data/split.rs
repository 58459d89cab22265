use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, DataResult, Dataset, Graph};

/// Which dense class indices count as normal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormalClass {
    Single(usize),
    Many(Vec<usize>),
}

impl NormalClass {
    pub fn classes(&self) -> Vec<usize> {
        match self {
            Self::Single(c) => vec![*c],
            Self::Many(cs) => cs.clone(),
        }
    }

    pub fn contains(&self, class: usize) -> bool {
        match self {
            Self::Single(c) => *c == class,
            Self::Many(cs) => cs.contains(&class),
        }
    }
}

impl From<usize> for NormalClass {
    fn from(c: usize) -> Self {
        Self::Single(c)
    }
}

/// A graph placed in a split, with its index in the source dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub id: usize,
    pub graph: Graph,
    pub anomalous: bool,
}

/// One-class split: normals only in `train`; held-out normals plus at most
/// as many anomalies in `test`.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Member>,
    pub test: Vec<Member>,
    pub normal_class: NormalClass,
    pub seed: u64,
}

impl Split {
    pub fn train_graphs(&self) -> Vec<Graph> {
        self.train.iter().map(|m| m.graph.clone()).collect()
    }

    pub fn test_labels(&self) -> Vec<bool> {
        self.test.iter().map(|m| m.anomalous).collect()
    }

    pub fn anomalous_test_count(&self) -> usize {
        self.test.iter().filter(|m| m.anomalous).count()
    }
}

/// Shuffles the normal class by `seed`, trains on the first
/// `floor(train_fraction · |normal|)` graphs and tests on the rest plus
/// `min(#held-out normals, #anomalies)` anomalies drawn without replacement.
pub fn make_split(
    dataset: &Dataset,
    normal_class: impl Into<NormalClass>,
    train_fraction: f64,
    seed: u64,
) -> DataResult<Split> {
    let normal_class = normal_class.into();
    let classes = normal_class.classes();
    if classes.is_empty() {
        return Err(DataError::Split("no normal class given".into()));
    }
    if let Some(&bad) = classes.iter().find(|&&c| c >= dataset.class_count()) {
        return Err(DataError::Split(format!(
            "normal class {bad} not in dataset (classes 0..{})",
            dataset.class_count()
        )));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::Split(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }

    let (mut normal, mut anomalous): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| normal_class.contains(dataset.graphs[i].class_label));
    if anomalous.is_empty() {
        return Err(DataError::Split("no anomalous graphs available".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    normal.shuffle(&mut rng);
    anomalous.shuffle(&mut rng);

    let n_train = (train_fraction * normal.len() as f64).floor() as usize;
    let held_out = &normal[n_train..];
    let k = held_out.len().min(anomalous.len());

    let member = |id: usize, anomalous: bool| Member {
        id,
        graph: dataset.graphs[id].clone(),
        anomalous,
    };
    let train = normal[..n_train].iter().map(|&i| member(i, false)).collect();
    let test = held_out
        .iter()
        .map(|&i| member(i, false))
        .chain(anomalous[..k].iter().map(|&i| member(i, true)))
        .collect();

    Ok(Split {
        train,
        test,
        normal_class,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use std::collections::HashSet;

    fn toy(normal: usize, anomalous: usize) -> Dataset {
        let graphs = (0..normal + anomalous)
            .map(|i| Graph::from_edges(1, &[], Tensor::zeros(1, 1), usize::from(i >= normal)))
            .collect();
        Dataset {
            name: "toy".into(),
            graphs,
            feature_dim: 1,
            class_values: vec![0, 1],
            has_attributes: false,
        }
    }

    #[test]
    fn ten_normal_three_anomalous() {
        let s = make_split(&toy(10, 3), 0, 0.8, 1).unwrap();
        assert_eq!(s.train.len(), 8);
        assert_eq!(s.test.len(), 4);
        assert_eq!(s.anomalous_test_count(), 2);
    }

    #[test]
    fn anomalies_capped_by_available() {
        let s = make_split(&toy(100, 5), 0, 0.8, 3).unwrap();
        assert_eq!(s.test.len() - s.anomalous_test_count(), 20);
        assert_eq!(s.anomalous_test_count(), 5);
    }

    #[test]
    fn deterministic_by_seed() {
        let ds = toy(30, 30);
        let ids = |s: &Split| {
            (
                s.train.iter().map(|m| m.id).collect::<Vec<_>>(),
                s.test.iter().map(|m| m.id).collect::<Vec<_>>(),
            )
        };
        let a = make_split(&ds, 0, 0.8, 42).unwrap();
        let b = make_split(&ds, 0, 0.8, 42).unwrap();
        let c = make_split(&ds, 0, 0.8, 43).unwrap();
        assert_eq!(ids(&a), ids(&b));
        assert_ne!(ids(&a), ids(&c));
    }

    #[test]
    fn train_and_test_are_disjoint_and_train_is_normal() {
        let ds = toy(25, 40);
        for seed in 0..20 {
            let s = make_split(&ds, 1, 0.8, seed).unwrap();
            let train: HashSet<_> = s.train.iter().map(|m| m.id).collect();
            assert!(s.test.iter().all(|m| !train.contains(&m.id)));
            assert!(s.train.iter().all(|m| m.graph.class_label == 1));
            assert!(s.anomalous_test_count() * 2 <= s.test.len());
        }
    }

    #[test]
    fn multi_class_normal_set() {
        let mut ds = toy(6, 6);
        ds.class_values = vec![0, 1, 2];
        ds.graphs[11].class_label = 2;
        let s = make_split(&ds, NormalClass::Many(vec![0, 2]), 0.5, 0).unwrap();
        assert!(s.train.iter().all(|m| m.graph.class_label != 1));
        assert!(s.test.iter().filter(|m| m.anomalous).all(|m| m.graph.class_label == 1));
    }

    #[test]
    fn errors() {
        let ds = toy(5, 0);
        assert!(make_split(&ds, 0, 0.8, 0).is_err());
        let ds = toy(5, 5);
        assert!(make_split(&ds, 2, 0.8, 0).is_err());
        assert!(make_split(&ds, 0, 1.0, 0).is_err());
    }
}
