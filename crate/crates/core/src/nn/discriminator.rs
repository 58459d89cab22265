use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{graph_readout, GinStack, Linear};
use super::{Architecture, Bound, ParamSet};
use crate::autodiff::{Tape, Var};
use crate::data::Graph;
use crate::tensor::{Tensor, TensorResult};

/// GIN stack followed by concat/max readout.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEncoder {
    pub stack: GinStack,
}

impl GraphEncoder {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        arch: &Architecture,
        rng: &mut R,
    ) -> Self {
        Self {
            stack: GinStack::new(params, &format!("{name}/gin"), in_dim, arch.agg_dim, arch.layers, rng),
        }
    }

    /// Graph representation, `1 × K·agg_dim`.
    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>, adj: Var<'t>) -> TensorResult<Var<'t>> {
        graph_readout(&self.stack.forward(p, x, adj)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadActivation {
    /// Unbounded critic output.
    None,
    /// Classifier output in (0, 1).
    Sigmoid,
}

/// Affine map from a graph representation to one scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHead {
    pub linear: Linear,
    pub activation: HeadActivation,
}

impl ScoreHead {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        activation: HeadActivation,
        rng: &mut R,
    ) -> Self {
        Self {
            linear: Linear::new(params, &format!("{name}/linear"), in_dim, 1, rng),
            activation,
        }
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, h: Var<'t>) -> TensorResult<Var<'t>> {
        let s = self.linear.forward(p, h)?;
        Ok(match self.activation {
            HeadActivation::None => s,
            HeadActivation::Sigmoid => s.sigmoid(),
        })
    }
}

/// Critic (ATI/ATII) or classifier (NAT): encoder plus score head, owning its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub params: ParamSet,
    pub encoder: GraphEncoder,
    pub head: ScoreHead,
    pub input_dim: usize,
    pub arch: Architecture,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, arch: Architecture, activation: HeadActivation, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let encoder = GraphEncoder::new(&mut params, "encoder", input_dim, &arch, rng);
        let head = ScoreHead::new(&mut params, "head", arch.representation_dim(), activation, rng);
        Self {
            params,
            encoder,
            head,
            input_dim,
            arch,
        }
    }

    pub fn activation(&self) -> HeadActivation {
        self.head.activation
    }

    pub fn embed_var<'t>(&self, p: &Bound<'t>, x: Var<'t>, adj: Var<'t>) -> TensorResult<Var<'t>> {
        self.encoder.forward(p, x, adj)
    }

    /// Scalar head output (`1 × 1`) for one graph given as tape variables.
    pub fn score_var<'t>(&self, p: &Bound<'t>, x: Var<'t>, adj: Var<'t>) -> TensorResult<Var<'t>> {
        self.head.forward(p, self.encoder.forward(p, x, adj)?)
    }

    /// Head output for a stored graph, evaluated on a private tape.
    pub fn score(&self, g: &Graph) -> TensorResult<f64> {
        self.score_tensors(&g.features, &g.adjacency)
    }

    pub fn score_tensors(&self, x: &Tensor, adj: &Tensor) -> TensorResult<f64> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        self.score_var(&p, tape.constant(x.clone()), tape.constant(adj.clone()))?
            .item()
    }

    /// Readout vector of width `K·agg_dim`.
    pub fn embedding(&self, g: &Graph) -> TensorResult<Vec<f64>> {
        self.embedding_tensors(&g.features, &g.adjacency)
    }

    pub fn embedding_tensors(&self, x: &Tensor, adj: &Tensor) -> TensorResult<Vec<f64>> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let h = self.embed_var(&p, tape.constant(x.clone()), tape.constant(adj.clone()))?;
        Ok(h.value().into_data())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::sigmoid;
    use crate::tensor::TensorError;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path(n: usize, d: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        let feats = Tensor::from_vec(n, d, (0..n * d).map(|i| ((i * 7) % 5) as f64 / 4.0).collect()).unwrap();
        Graph::from_edges(n, &edges, feats, 0)
    }

    #[test]
    fn zero_classifier_head_scores_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut d = Discriminator::new(3, Architecture::default(), HeadActivation::Sigmoid, &mut rng);
        *d.params.get_mut(d.head.linear.weight) = Tensor::zeros(48, 1);
        for n in 1..5 {
            assert_eq!(d.score(&path(n, 3)).unwrap(), 0.5);
        }
    }

    #[test]
    fn embedding_width_is_layers_times_agg() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Discriminator::new(3, Architecture::default(), HeadActivation::None, &mut rng);
        assert_eq!(d.embedding(&path(4, 3)).unwrap().len(), 48);
    }

    #[test]
    fn feature_width_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Discriminator::new(3, Architecture::default(), HeadActivation::None, &mut rng);
        assert!(matches!(d.score(&path(4, 2)), Err(TensorError::ShapeMismatch { .. })));
    }

    #[test]
    fn relabelled_graph_scores_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = Discriminator::new(2, Architecture::default(), HeadActivation::Sigmoid, &mut rng);
        let g = Graph::from_edges(
            4,
            &[(0, 1), (1, 2), (2, 0), (2, 3)],
            Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.3, 0.7]]),
            0,
        );
        let base = d.score(&g).unwrap();
        let permuted = g.permuted(&[3, 1, 0, 2]);
        assert!((d.score(&permuted).unwrap() - base).abs() < 1e-6);
    }

    /// One GIN layer of width 1 with scalar weights on a 2-node graph, computed by hand.
    #[test]
    fn tiny_forward_by_hand() {
        let arch = Architecture {
            layers: 1,
            agg_dim: 1,
            latent_dim: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut d = Discriminator::new(1, arch, HeadActivation::Sigmoid, &mut rng);
        let gin = &d.encoder.stack.layers[0].mlp;
        let (w1, b1, w2, b2) = (gin.first.weight, gin.first.bias, gin.second.weight, gin.second.bias);
        let (wh, bh) = (d.head.linear.weight, d.head.linear.bias);
        *d.params.get_mut(w1) = Tensor::scalar(0.5);
        *d.params.get_mut(b1) = Tensor::scalar(-0.25);
        *d.params.get_mut(w2) = Tensor::scalar(2.0);
        *d.params.get_mut(b2) = Tensor::scalar(0.1);
        *d.params.get_mut(wh) = Tensor::scalar(-1.5);
        *d.params.get_mut(bh) = Tensor::scalar(0.2);

        let g = Graph::from_edges(2, &[(0, 1)], Tensor::from_rows(&[[1.0], [-2.0]]), 0);
        // aggregation: both rows 1 + (-2)
        let agg = -1.0;
        let hidden = f64::max(0.5 * agg - 0.25, 0.0);
        let node = f64::max(2.0 * hidden + 0.1, 0.0);
        let expected = sigmoid(-1.5 * node + 0.2);
        assert!((d.score(&g).unwrap() - expected).abs() < 1e-15);
    }
}
