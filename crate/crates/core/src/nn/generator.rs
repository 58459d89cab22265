use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{GinLayer, GinStack, Mlp};
use super::{Architecture, Bound, ParamSet};
use crate::autodiff::{Tape, Var};
use crate::tensor::{Tensor, TensorError, TensorResult};

/// Continuous adjacency `mask ⊙ (S + Sᵀ)/2` with `S = sigmoid(Z·Zᵀ)`.
///
/// Symmetric, zero diagonal, off-diagonal entries in (0, 1).
pub fn adjacency_from_latent<'t>(z: Var<'t>) -> TensorResult<Var<'t>> {
    let n = z.shape().rows;
    let s = z.matmul(z.transpose())?.sigmoid();
    let sym = s.add(s.transpose())?.scale(0.5);
    sym.mul(z.tape().constant(Tensor::off_diagonal_mask(n)))
}

/// `Z = μ + ε ⊙ σ`; `noise` should be a constant so no gradient reaches it.
pub fn reparameterize<'t>(mu: Var<'t>, sigma: Var<'t>, noise: Var<'t>) -> TensorResult<Var<'t>> {
    if mu.shape() != sigma.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "reparameterize",
            lhs: mu.shape(),
            rhs: sigma.shape(),
        });
    }
    mu.add(noise.mul(sigma)?)
}

/// A generated graph on the tape plus the latent Gaussians that produced it.
#[derive(Debug, Clone)]
pub struct GeneratedGraph<'t> {
    pub x: Var<'t>,
    pub adj: Var<'t>,
    /// `(μ, σ)` per VGAE; empty for the MLP generator.
    pub latents: Vec<(Var<'t>, Var<'t>)>,
}

/// Noise-to-graph generator: `X̃ = MLP(Z̃)`, `Ã` from `X̃X̃ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGenerator {
    pub params: ParamSet,
    pub mlp: Mlp,
    pub arch: Architecture,
    pub output_dim: usize,
}

impl MlpGenerator {
    pub fn new<R: Rng + ?Sized>(output_dim: usize, arch: Architecture, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let mlp = Mlp::new(&mut params, "mlp", arch.latent_dim, arch.agg_dim, output_dim, rng);
        Self {
            params,
            mlp,
            arch,
            output_dim,
        }
    }

    /// `z` is `n × latent_dim`, one row per generated node.
    pub fn generate<'t>(&self, p: &Bound<'t>, z: Var<'t>) -> TensorResult<GeneratedGraph<'t>> {
        if z.shape().rows == 0 {
            return Err(TensorError::Empty { op: "mlp_generate" });
        }
        let x = self.mlp.forward(p, z)?;
        let adj = adjacency_from_latent(x)?;
        Ok(GeneratedGraph {
            x,
            adj,
            latents: Vec::new(),
        })
    }

    /// Evaluates on a private tape, returning `(X̃, Ã)`.
    pub fn sample(&self, z: &Tensor) -> TensorResult<(Tensor, Tensor)> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let g = self.generate(&p, tape.constant(z.clone()))?;
        Ok((g.x.value(), g.adj.value()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VgaeKind {
    /// Has a decoder producing node attributes.
    Node,
    /// No decoder; the latent inner product is the adjacency.
    Edge,
}

/// GIN encoder with GIN mean and log-deviation heads over node-level features.
#[derive(Debug, Clone, PartialEq)]
pub struct Vgae {
    pub kind: VgaeKind,
    pub encoder: GinStack,
    pub mu: GinLayer,
    pub log_sigma: GinLayer,
    pub decoder: Option<Mlp>,
}

impl Vgae {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        kind: VgaeKind,
        input_dim: usize,
        arch: &Architecture,
        rng: &mut R,
    ) -> Self {
        let rep = arch.representation_dim();
        let encoder = GinStack::new(
            params,
            &format!("{name}/encoder"),
            input_dim,
            arch.agg_dim,
            arch.layers,
            rng,
        );
        let mu = GinLayer::new(
            params,
            &format!("{name}/mu"),
            rep,
            arch.agg_dim,
            arch.latent_dim,
            false,
            rng,
        );
        let log_sigma = GinLayer::new(
            params,
            &format!("{name}/log_sigma"),
            rep,
            arch.agg_dim,
            arch.latent_dim,
            false,
            rng,
        );
        // Latents start at Z = ε (μ = 0, σ = 1). Sum aggregation would
        // otherwise scale both heads with node degree and saturate the
        // inner-product adjacency at 0 or 1.
        for head in [&mu, &log_sigma] {
            params
                .get_mut(head.mlp.second.weight)
                .data_mut()
                .iter_mut()
                .for_each(|w| *w = 0.0);
        }
        let decoder = match kind {
            VgaeKind::Node => Some(Mlp::new(
                params,
                &format!("{name}/decoder"),
                arch.latent_dim,
                arch.agg_dim,
                input_dim,
                rng,
            )),
            VgaeKind::Edge => None,
        };
        Self {
            kind,
            encoder,
            mu,
            log_sigma,
            decoder,
        }
    }

    /// `(μ, σ)`, each `n × latent_dim`, with `σ = exp(·) > 0`.
    pub fn encode<'t>(&self, p: &Bound<'t>, x: Var<'t>, adj: Var<'t>) -> TensorResult<(Var<'t>, Var<'t>)> {
        let h = self.encoder.node_features(p, x, adj)?;
        let mu = self.mu.forward(p, h, adj)?;
        let sigma = self.log_sigma.forward(p, h, adj)?.exp();
        Ok((mu, sigma))
    }
}

/// Decodes `(X̃, Ã)` from node and edge latents of equal row count.
pub fn vgae_decode<'t>(
    node: &Vgae,
    p: &Bound<'t>,
    z_node: Var<'t>,
    z_edge: Var<'t>,
) -> TensorResult<(Var<'t>, Var<'t>)> {
    if z_node.shape().rows != z_edge.shape().rows {
        return Err(TensorError::ShapeMismatch {
            op: "vgae_decode latent rows",
            lhs: z_node.shape(),
            rhs: z_edge.shape(),
        });
    }
    let decoder = node.decoder.as_ref().ok_or(TensorError::Empty {
        op: "vgae_decode: node VGAE has no decoder",
    })?;
    let x = decoder.forward(p, z_node)?;
    let adj = adjacency_from_latent(z_edge)?;
    Ok((x, adj))
}

/// Standard normal draws for both VGAE latents of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNoise {
    pub node: Tensor,
    pub edge: Tensor,
}

impl GeneratorNoise {
    pub fn sample<R: Rng + ?Sized>(n: usize, latent_dim: usize, rng: &mut R) -> Self {
        let node = Tensor::standard_normal(n, latent_dim, rng);
        let edge = Tensor::standard_normal(n, latent_dim, rng);
        Self { node, edge }
    }

    pub fn zeros(n: usize, latent_dim: usize) -> Self {
        Self {
            node: Tensor::zeros(n, latent_dim),
            edge: Tensor::zeros(n, latent_dim),
        }
    }
}

/// Node-VGAE plus Edge-VGAE perturbing a real graph into a pseudo-anomaly of the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationGenerator {
    pub params: ParamSet,
    pub node: Vgae,
    pub edge: Vgae,
    pub arch: Architecture,
    pub input_dim: usize,
    /// Uses `Z = μ` instead of sampling.
    pub deterministic: bool,
}

impl PerturbationGenerator {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, arch: Architecture, deterministic: bool, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let node = Vgae::new(&mut params, "node_vgae", VgaeKind::Node, input_dim, &arch, rng);
        let edge = Vgae::new(&mut params, "edge_vgae", VgaeKind::Edge, input_dim, &arch, rng);
        Self {
            params,
            node,
            edge,
            arch,
            input_dim,
            deterministic,
        }
    }

    pub fn perturb<'t>(
        &self,
        p: &Bound<'t>,
        x: Var<'t>,
        adj: Var<'t>,
        noise: &GeneratorNoise,
    ) -> TensorResult<GeneratedGraph<'t>> {
        let tape = x.tape();
        let (node_mu, node_sigma) = self.node.encode(p, x, adj)?;
        let (edge_mu, edge_sigma) = self.edge.encode(p, x, adj)?;
        let (z_node, z_edge) = if self.deterministic {
            (node_mu, edge_mu)
        } else {
            (
                reparameterize(node_mu, node_sigma, tape.constant(noise.node.clone()))?,
                reparameterize(edge_mu, edge_sigma, tape.constant(noise.edge.clone()))?,
            )
        };
        let (gx, gadj) = vgae_decode(&self.node, p, z_node, z_edge)?;
        Ok(GeneratedGraph {
            x: gx,
            adj: gadj,
            latents: vec![(node_mu, node_sigma), (edge_mu, edge_sigma)],
        })
    }

    /// Evaluates on a private tape, returning `(X̃, Ã)`.
    pub fn sample(&self, x: &Tensor, adj: &Tensor, noise: &GeneratorNoise) -> TensorResult<(Tensor, Tensor)> {
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let g = self.perturb(&p, tape.constant(x.clone()), tape.constant(adj.clone()), noise)?;
        Ok((g.x.value(), g.adj.value()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::sigmoid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_valid_adjacency(a: &Tensor) {
        let n = a.rows();
        for i in 0..n {
            assert_eq!(a.get(i, i), 0.0);
            for j in 0..n {
                assert_eq!(a.get(i, j), a.get(j, i));
                assert!((0.0..=1.0).contains(&a.get(i, j)));
            }
        }
    }

    fn toy() -> (Tensor, Tensor) {
        let x = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
        let a = Tensor::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        (x, a)
    }

    #[test]
    fn zero_mlp_generator_gives_bias_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = MlpGenerator::new(3, Architecture::default(), &mut rng);
        let names: Vec<_> = g.params.names().to_vec();
        for (t, name) in g.params.tensors_mut().iter_mut().zip(&names) {
            *t = if name == "mlp/1/bias" {
                Tensor::row(&[0.5, -1.0, 2.0])
            } else {
                Tensor::zeros(t.rows(), t.cols())
            };
        }
        let z = Tensor::standard_normal(4, 10, &mut rng);
        let (x, a) = g.sample(&z).unwrap();
        for r in 0..4 {
            assert_eq!(x.row_slice(r), &[0.5, -1.0, 2.0]);
        }
        let off = sigmoid(0.25 + 1.0 + 4.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), if i == j { 0.0 } else { off });
            }
        }
    }

    #[test]
    fn mlp_generator_is_deterministic_and_valid() {
        let g = MlpGenerator::new(5, Architecture::default(), &mut ChaCha8Rng::seed_from_u64(3));
        let draw = || Tensor::standard_normal(6, 10, &mut ChaCha8Rng::seed_from_u64(77));
        let (x1, a1) = g.sample(&draw()).unwrap();
        let (x2, a2) = g.sample(&draw()).unwrap();
        assert_eq!((x1.shape().rows, x1.shape().cols), (6, 5));
        assert_eq!(x1, x2);
        assert_eq!(a1, a2);
        assert_valid_adjacency(&a1);
    }

    #[test]
    fn edge_latent_identity_gives_one_half_off_diagonal() {
        let tape = Tape::new();
        let a = adjacency_from_latent(tape.constant(Tensor::identity(2)))
            .unwrap()
            .value();
        assert_eq!(a, Tensor::from_rows(&[[0.0, 0.5], [0.5, 0.0]]));
        let a = adjacency_from_latent(tape.constant(Tensor::zeros(3, 4)))
            .unwrap()
            .value();
        assert_eq!(a, Tensor::off_diagonal_mask(3).map(|v| v * 0.5));
    }

    #[test]
    fn reparameterize_cases() {
        let tape = Tape::new();
        let mu = tape.param(Tensor::from_rows(&[[1.0, -2.0]]));
        let sigma = tape.param(Tensor::from_rows(&[[0.5, 3.0]]));
        let zero = tape.constant(Tensor::zeros(1, 2));
        assert_eq!(reparameterize(mu, sigma, zero).unwrap().value(), mu.value());
        let noise = tape.constant(Tensor::from_rows(&[[0.3, -0.7]]));
        let std = reparameterize(
            tape.constant(Tensor::zeros(1, 2)),
            tape.constant(Tensor::ones(1, 2)),
            noise,
        )
        .unwrap();
        assert_eq!(std.value(), noise.value());
        let z = reparameterize(mu, sigma, noise).unwrap();
        let g = tape.backward(z.sum()).unwrap();
        assert_eq!(g.get(mu).unwrap(), &Tensor::ones(1, 2));
        assert_eq!(g.get(sigma).unwrap(), &noise.value());
        assert!(g.get(noise).is_none());

        let bad = tape.constant(Tensor::zeros(2, 2));
        assert!(reparameterize(mu, bad, bad).is_err());
    }

    #[test]
    fn zero_log_sigma_head_gives_unit_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut g = PerturbationGenerator::new(2, Architecture::default(), false, &mut rng);
        let head = g.node.log_sigma.mlp.clone();
        for id in [head.first.weight, head.first.bias, head.second.weight, head.second.bias] {
            let t = g.params.get_mut(id);
            *t = Tensor::zeros(t.rows(), t.cols());
        }
        let (x, a) = toy();
        let tape = Tape::new();
        let p = g.params.bind_frozen(&tape);
        let (mu, sigma) = g.node.encode(&p, tape.constant(x), tape.constant(a)).unwrap();
        assert_eq!(sigma.value(), Tensor::ones(3, 10));
        assert_eq!(mu.shape(), sigma.shape());
    }

    #[test]
    fn single_node_encode_matches_heads_on_lone_node() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = PerturbationGenerator::new(2, Architecture::default(), false, &mut rng);
        let x = Tensor::row(&[0.4, 1.0]);
        let tape = Tape::new();
        let p = g.params.bind_frozen(&tape);
        let xv = tape.constant(x);
        let a = tape.constant(Tensor::zeros(1, 1));
        let (mu, sigma) = g.edge.encode(&p, xv, a).unwrap();
        assert_eq!(mu.shape().rows, 1);

        let mut h = xv;
        let mut parts = Vec::new();
        for layer in &g.edge.encoder.layers {
            h = layer.mlp.forward(&p, h).unwrap().relu();
            parts.push(h);
        }
        let hcat = Var::col_concat(&parts).unwrap();
        assert_eq!(mu.value(), g.edge.mu.mlp.forward(&p, hcat).unwrap().value());
        assert_eq!(
            sigma.value(),
            g.edge.log_sigma.mlp.forward(&p, hcat).unwrap().exp().value()
        );
    }

    #[test]
    fn perturbation_preserves_size_and_validity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = PerturbationGenerator::new(2, Architecture::default(), false, &mut rng);
        let (x, a) = toy();
        let noise = GeneratorNoise::sample(3, 10, &mut rng);
        let (gx, ga) = g.sample(&x, &a, &noise).unwrap();
        assert_eq!(gx.shape(), x.shape());
        assert_valid_adjacency(&ga);
    }

    #[test]
    fn deterministic_mode_ignores_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = PerturbationGenerator::new(2, Architecture::default(), true, &mut rng);
        let (x, a) = toy();
        let n1 = GeneratorNoise::sample(3, 10, &mut rng);
        let n2 = GeneratorNoise::sample(3, 10, &mut rng);
        assert_eq!(g.sample(&x, &a, &n1).unwrap(), g.sample(&x, &a, &n2).unwrap());
        let stochastic = PerturbationGenerator {
            deterministic: false,
            ..g.clone()
        };
        assert_ne!(
            stochastic.sample(&x, &a, &n1).unwrap(),
            stochastic.sample(&x, &a, &n2).unwrap()
        );
        assert_eq!(
            stochastic.sample(&x, &a, &GeneratorNoise::zeros(3, 10)).unwrap(),
            g.sample(&x, &a, &n1).unwrap()
        );
    }

    #[test]
    fn decode_row_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = PerturbationGenerator::new(2, Architecture::default(), true, &mut rng);
        let tape = Tape::new();
        let p = g.params.bind_frozen(&tape);
        let r = vgae_decode(
            &g.node,
            &p,
            tape.constant(Tensor::zeros(2, 10)),
            tape.constant(Tensor::zeros(3, 10)),
        );
        assert!(r.is_err());
        assert!(vgae_decode(
            &g.edge,
            &p,
            tape.constant(Tensor::zeros(2, 10)),
            tape.constant(Tensor::zeros(2, 10))
        )
        .is_err());
    }
}
