#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdgg::data::{Dataset, Graph};
use sdgg::Tensor;

/// Connected random graph on `n` nodes with one-hot labels over `d` classes.
pub fn random_graph(n: usize, d: usize, class: usize, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for _ in 0..n / 2 {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v {
            edges.push((u.min(v), u.max(v)));
        }
    }
    let mut x = Tensor::zeros(n, d);
    for v in 0..n {
        x.set(v, rng.random_range(0..d), 1.0);
    }
    Graph::from_edges(n, &edges, x, class)
}

pub fn toy_graphs(count: usize, d: usize, seed: u64) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..7);
            random_graph(n, d, 0, &mut rng)
        })
        .collect()
}

/// Two-class toy dataset: class 0 are paths with feature 0, class 1 are stars with feature 1.
pub fn toy_dataset(per_class: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::new();
    for class in 0..2 {
        for _ in 0..per_class {
            let n = rng.random_range(3..7);
            let edges: Vec<_> = if class == 0 {
                (1..n).map(|v| (v - 1, v)).collect()
            } else {
                (1..n).map(|v| (0, v)).collect()
            };
            let mut x = Tensor::zeros(n, 2);
            for v in 0..n {
                x.set(v, if rng.random_bool(0.9) { class } else { 1 - class }, 1.0);
            }
            graphs.push(Graph::from_edges(n, &edges, x, class));
        }
    }
    Dataset {
        name: "toy".into(),
        graphs,
        feature_dim: 2,
        class_values: vec![0, 1],
        has_attributes: false,
    }
}

pub fn data_root() -> PathBuf {
    std::env::var_os("SDGG_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}
