//! Gradient checks of every network block and every training loss on small
//! random inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{grad_check, grad_check_params, GradCheckReport};
use crate::autodiff::{Tape, Var};
use crate::data::Graph;
use crate::nn::{
    Architecture, Bound, Discriminator, GeneratorNoise, GinLayer, GraphEncoder, HeadActivation, Linear, Mlp,
    MlpGenerator, ParamSet, PerturbationGenerator,
};
use crate::synth2d::{nat_2d_objective, Classifier2d, Hidden, Vae2d, LATENT};
use crate::tensor::{Tensor, TensorResult};
use crate::train::{
    ati_generator_objective, atii_generator_objective, bce, critic_objective, graph_discrepancy, kl_loss,
    nat_objective, LossWeights,
};

/// Step for single blocks, whose outputs are of order one.
pub const BLOCK_STEP: f64 = 1e-5;
/// Step for full losses; their magnitude puts rounding noise near 1e-12.
pub const LOSS_STEP: f64 = 1e-4;
pub const FEATURE_DIM: usize = 3;

/// Connected random graph with continuous features and no two nodes sharing
/// a closed neighbourhood. Such twins get identical GIN embeddings (ε = 0
/// aggregates exactly over `N(v) ∪ {v}`), which puts the max readout on a tie.
fn random_graph(n: usize, rng: &mut impl Rng) -> Graph {
    loop {
        let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
        edges.push((0, n - 1));
        let x = Tensor::standard_normal(n, FEATURE_DIM, rng);
        let g = Graph::from_edges(n, &edges, x, 0);
        let closed: Vec<Vec<bool>> = (0..n)
            .map(|u| (0..n).map(|v| u == v || g.adjacency.get(u, v) > 0.0).collect())
            .collect();
        if (0..n).all(|u| (u + 1..n).all(|v| closed[u] != closed[v])) {
            return g;
        }
    }
}

fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect()).expect("sized")
}

/// Adds `N(0, scale²)` noise to every parameter. Zero-initialized biases
/// put dead-input ReLUs exactly on their kink, and zero-initialized
/// weights leave paths without gradient.
fn jitter(params: &mut ParamSet, scale: f64, rng: &mut ChaCha8Rng) {
    for t in params.tensors_mut() {
        let noise = Tensor::standard_normal(t.shape().rows, t.shape().cols, rng);
        for (v, e) in t.data_mut().iter_mut().zip(noise.data()) {
            *v += scale * e;
        }
    }
}

/// `Σ out ⊙ R` for a fixed random `R`, turning a matrix output into a scalar
/// whose gradient reaches every output entry.
fn project<'t>(out: Var<'t>, seed: u64) -> TensorResult<Var<'t>> {
    let s = out.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = out.tape().constant(Tensor::standard_normal(s.rows, s.cols, &mut rng));
    Ok(out.mul(r)?.sum())
}

/// Runs every check at tolerance `tol`; randomness is drawn from `seed`.
pub fn run_suite(tol: f64, seed: u64) -> TensorResult<Vec<GradCheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arch = Architecture::default();
    let graphs = [random_graph(4, &mut rng), random_graph(5, &mut rng)];
    let g = &graphs[0];
    let (gx, gadj) = (g.features.clone(), g.adjacency.clone());
    let mut out = Vec::new();

    // blocks
    let mut params = ParamSet::new();
    let linear = Linear::new(&mut params, "linear", FEATURE_DIM, 4, &mut rng);
    jitter(&mut params, 0.01, &mut rng);
    let input = Tensor::standard_normal(5, FEATURE_DIM, &mut rng);
    out.push(grad_check_params(
        "linear/params",
        &[&params],
        |t, b| project(linear.forward(&b[0], t.constant(input.clone()))?, 1),
        BLOCK_STEP,
        tol,
    )?);
    let frozen = params.clone();
    out.push(grad_check(
        "linear/input",
        |t, x| project(linear.forward(&frozen.bind_frozen(t), x)?, 1),
        &input,
        BLOCK_STEP,
        tol,
    )?);

    let mut params = ParamSet::new();
    let mlp = Mlp::new(&mut params, "mlp", FEATURE_DIM, 6, 2, &mut rng);
    jitter(&mut params, 0.01, &mut rng);
    out.push(grad_check_params(
        "mlp",
        &[&params],
        |t, b| project(mlp.forward(&b[0], t.constant(input.clone()))?, 2),
        BLOCK_STEP,
        tol,
    )?);

    for activate in [true, false] {
        let mut params = ParamSet::new();
        let gin = GinLayer::new(&mut params, "gin", FEATURE_DIM, 6, 5, activate, &mut rng);
        jitter(&mut params, 0.01, &mut rng);
        let name = if activate { "gin-layer/relu" } else { "gin-layer/linear" };
        out.push(grad_check_params(
            name,
            &[&params],
            |t, b| project(gin.forward(&b[0], t.constant(gx.clone()), t.constant(gadj.clone()))?, 3),
            BLOCK_STEP,
            tol,
        )?);
        let frozen = params.clone();
        let soft_adj = uniform(g.node_count(), g.node_count(), 0.0, 1.0, &mut rng);
        out.push(grad_check(
            &format!("{name}/adjacency"),
            |t, a| project(gin.forward(&frozen.bind_frozen(t), t.constant(gx.clone()), a)?, 3),
            &soft_adj,
            BLOCK_STEP,
            tol,
        )?);
    }

    let mut params = ParamSet::new();
    let encoder = GraphEncoder::new(&mut params, "encoder", FEATURE_DIM, &arch, &mut rng);
    jitter(&mut params, 0.01, &mut rng);
    out.push(grad_check_params(
        "encoder+readout",
        &[&params],
        |t, b| {
            project(
                encoder.forward(&b[0], t.constant(gx.clone()), t.constant(gadj.clone()))?,
                4,
            )
        },
        BLOCK_STEP,
        tol,
    )?);

    for activation in [HeadActivation::Sigmoid, HeadActivation::None] {
        let mut d = Discriminator::new(FEATURE_DIM, arch, activation, &mut rng);
        jitter(&mut d.params, 0.01, &mut rng);
        let name = match activation {
            HeadActivation::Sigmoid => "classifier-score",
            HeadActivation::None => "critic-score",
        };
        out.push(grad_check_params(
            name,
            &[&d.params],
            |t, b| d.score_var(&b[0], t.constant(gx.clone()), t.constant(gadj.clone())),
            BLOCK_STEP,
            tol,
        )?);
    }

    let mut mlp_gen = MlpGenerator::new(FEATURE_DIM, arch, &mut rng);
    jitter(&mut mlp_gen.params, 0.01, &mut rng);
    let z = Tensor::standard_normal(4, arch.latent_dim, &mut rng);
    out.push(grad_check_params(
        "mlp-generator",
        &[&mlp_gen.params],
        |t, b| {
            let fake = mlp_gen.generate(&b[0], t.constant(z.clone()))?;
            project(fake.x, 5)?.add(project(fake.adj, 6)?)
        },
        BLOCK_STEP,
        tol,
    )?);

    let mut pert = PerturbationGenerator::new(FEATURE_DIM, arch, false, &mut rng);
    jitter(&mut pert.params, 0.01, &mut rng);
    let noise = GeneratorNoise::sample(g.node_count(), arch.latent_dim, &mut rng);
    out.push(grad_check_params(
        "perturbation-generator",
        &[&pert.params],
        |t, b| {
            let fake = pert.perturb(&b[0], t.constant(gx.clone()), t.constant(gadj.clone()), &noise)?;
            let mut total = project(fake.x, 7)?.add(project(fake.adj, 8)?)?;
            for (k, (mu, sigma)) in fake.latents.iter().enumerate() {
                total = total
                    .add(project(*mu, 9 + k as u64)?)?
                    .add(project(*sigma, 11 + k as u64)?)?;
            }
            Ok(total)
        },
        BLOCK_STEP,
        tol,
    )?);

    // loss terms
    let mu = Tensor::standard_normal(4, 3, &mut rng);
    let sigma = uniform(4, 3, 0.3, 2.0, &mut rng);
    out.push(grad_check(
        "kl/mu",
        |t, m| kl_loss(m, t.constant(sigma.clone())),
        &mu,
        BLOCK_STEP,
        tol,
    )?);
    out.push(grad_check(
        "kl/sigma",
        |t, s| kl_loss(t.constant(mu.clone()), s),
        &sigma,
        BLOCK_STEP,
        tol,
    )?);
    let p = uniform(3, 2, 0.05, 0.95, &mut rng);
    out.push(grad_check("bce/label-0", |_, p| bce(p, 0.0), &p, BLOCK_STEP, tol)?);
    out.push(grad_check("bce/label-1", |_, p| bce(p, 1.0), &p, BLOCK_STEP, tol)?);
    let x_hat = Tensor::standard_normal(g.node_count(), FEATURE_DIM, &mut rng);
    let adj_hat = uniform(g.node_count(), g.node_count(), 0.05, 0.95, &mut rng);
    out.push(grad_check(
        "discrepancy/attributes",
        |t, xh| {
            graph_discrepancy(
                t.constant(gx.clone()),
                t.constant(gadj.clone()),
                xh,
                t.constant(adj_hat.clone()),
            )
        },
        &x_hat,
        BLOCK_STEP,
        tol,
    )?);
    out.push(grad_check(
        "discrepancy/adjacency",
        |t, ah| {
            graph_discrepancy(
                t.constant(gx.clone()),
                t.constant(gadj.clone()),
                t.constant(x_hat.clone()),
                ah,
            )
        },
        &adj_hat,
        BLOCK_STEP,
        tol,
    )?);

    out.extend(full_losses(&graphs, arch, tol, &mut rng)?);
    Ok(out)
}

fn batch_sum<'t>(
    tape: &'t Tape,
    graphs: &[Graph],
    mut per_graph: impl FnMut(usize, Var<'t>, Var<'t>) -> TensorResult<Var<'t>>,
) -> TensorResult<Var<'t>> {
    let scale = 1.0 / graphs.len() as f64;
    let mut total = tape.scalar(0.0);
    for (i, g) in graphs.iter().enumerate() {
        let l = per_graph(i, tape.constant(g.features.clone()), tape.constant(g.adjacency.clone()))?;
        total = total.add(l.scale(scale))?;
    }
    Ok(total)
}

/// Batch-mean training objectives with reparameterization noise held fixed.
fn full_losses(
    graphs: &[Graph],
    arch: Architecture,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> TensorResult<Vec<GradCheckReport>> {
    let mut out = Vec::new();
    // Unclipped critic weights keep every gradient path well above the noise floor.
    let mut critic = Discriminator::new(FEATURE_DIM, arch, HeadActivation::None, rng);
    jitter(&mut critic.params, 0.01, rng);
    let mut mlp_gen = MlpGenerator::new(FEATURE_DIM, arch, rng);
    jitter(&mut mlp_gen.params, 0.01, rng);
    let zs: Vec<Tensor> = graphs
        .iter()
        .map(|g| Tensor::standard_normal(g.node_count(), arch.latent_dim, rng))
        .collect();
    out.push(grad_check_params(
        "loss/ati-generator",
        &[&mlp_gen.params],
        |t, b| {
            let pc = critic.params.bind_frozen(t);
            batch_sum(t, graphs, |i, _, _| {
                Ok(ati_generator_objective(&critic, &pc, &mlp_gen, &b[0], t.constant(zs[i].clone()))?.0)
            })
        },
        LOSS_STEP,
        tol,
    )?);

    let fakes: Vec<(Tensor, Tensor)> = zs.iter().map(|z| mlp_gen.sample(z)).collect::<TensorResult<_>>()?;
    out.push(grad_check_params(
        "loss/critic",
        &[&critic.params],
        |t, b| {
            batch_sum(t, graphs, |i, x, adj| {
                let fake = (t.constant(fakes[i].0.clone()), t.constant(fakes[i].1.clone()));
                Ok(critic_objective(&critic, &b[0], (x, adj), fake)?.0)
            })
        },
        LOSS_STEP,
        tol,
    )?);

    let mut gen = PerturbationGenerator::new(FEATURE_DIM, arch, false, rng);
    jitter(&mut gen.params, 0.01, rng);
    let noise: Vec<GeneratorNoise> = graphs
        .iter()
        .map(|g| GeneratorNoise::sample(g.node_count(), arch.latent_dim, rng))
        .collect();
    for w in [
        LossWeights {
            lambda: 1.0,
            gamma: 1e-5,
        },
        LossWeights {
            lambda: 0.1,
            gamma: 1.0,
        },
    ] {
        out.push(grad_check_params(
            &format!("loss/atii-generator(lambda={},gamma={})", w.lambda, w.gamma),
            &[&gen.params],
            |t, b| {
                let pc = critic.params.bind_frozen(t);
                batch_sum(t, graphs, |i, x, adj| {
                    Ok(atii_generator_objective(&critic, &pc, &gen, &b[0], x, adj, &noise[i], w)?.0)
                })
            },
            LOSS_STEP,
            tol,
        )?);
    }

    let mut classifier = Discriminator::new(FEATURE_DIM, arch, HeadActivation::Sigmoid, rng);
    jitter(&mut classifier.params, 0.01, rng);
    for w in [
        LossWeights {
            lambda: 1.0,
            gamma: 1e-5,
        },
        LossWeights {
            lambda: 0.1,
            gamma: 1.0,
        },
    ] {
        out.push(grad_check_params(
            &format!("loss/nat(lambda={},gamma={})", w.lambda, w.gamma),
            &[&classifier.params, &gen.params],
            |t, b| {
                batch_sum(t, graphs, |i, x, adj| {
                    Ok(nat_objective(&classifier, &b[0], &gen, &b[1], x, adj, &noise[i], w)?.0)
                })
            },
            LOSS_STEP,
            tol,
        )?);
    }

    let vae = Vae2d::new(rng);
    let clf = Classifier2d::new(Hidden::Relu, rng);
    let points = Tensor::standard_normal(8, 2, rng);
    let eps = Tensor::standard_normal(8, LATENT, rng);
    out.push(grad_check_params(
        "loss/nat-2d",
        &[&vae.params, &clf.params],
        |t, b: &[Bound<'_>]| {
            let (l, _) = nat_2d_objective(
                &vae,
                &b[0],
                &clf,
                &b[1],
                t.constant(points.clone()),
                t.constant(eps.clone()),
                1.0,
                0.1,
            )?;
            Ok(l)
        },
        BLOCK_STEP,
        tol,
    )?);
    Ok(out)
}
