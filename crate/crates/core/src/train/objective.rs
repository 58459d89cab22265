//! Per-graph objectives. A batch objective is the mean of these over the batch.

use serde::Serialize;

use super::loss::{bce, graph_discrepancy, kl_loss};
use crate::autodiff::Var;
use crate::nn::{Bound, Discriminator, GeneratedGraph, GeneratorNoise, MlpGenerator, PerturbationGenerator};
use crate::tensor::TensorResult;

/// Values of the individual loss terms; zero where a term does not apply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LossComponents {
    /// The minimized objective of the step that produced these values.
    pub total: f64,
    /// NAT: `BCE(0, f(G)) + BCE(1, f(G̃))`.
    pub classification: f64,
    /// Adversarial generator term `−D(G̃)`.
    pub adversarial: f64,
    /// Critic loss `−D(G) + D(G̃)`.
    pub critic: f64,
    pub discrepancy: f64,
    pub kl: f64,
}

impl LossComponents {
    pub fn scaled(self, k: f64) -> Self {
        Self {
            total: self.total * k,
            classification: self.classification * k,
            adversarial: self.adversarial * k,
            critic: self.critic * k,
            discrepancy: self.discrepancy * k,
            kl: self.kl * k,
        }
    }

    pub fn accumulate(&mut self, other: &Self) {
        self.total += other.total;
        self.classification += other.classification;
        self.adversarial += other.adversarial;
        self.critic += other.critic;
        self.discrepancy += other.discrepancy;
        self.kl += other.kl;
    }

    pub fn is_finite(&self) -> bool {
        [
            self.total,
            self.classification,
            self.adversarial,
            self.critic,
            self.discrepancy,
            self.kl,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Weights of the generator-specific terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Discrepancy weight λ.
    pub lambda: f64,
    /// KL weight γ.
    pub gamma: f64,
}

/// `−D(G̃)` for a graph generated from noise `z`.
pub fn ati_generator_objective<'t>(
    critic: &Discriminator,
    pc: &Bound<'t>,
    gen: &MlpGenerator,
    pg: &Bound<'t>,
    z: Var<'t>,
) -> TensorResult<(Var<'t>, LossComponents)> {
    let fake = gen.generate(pg, z)?;
    let loss = critic.score_var(pc, fake.x, fake.adj)?.neg();
    let v = loss.item()?;
    Ok((
        loss,
        LossComponents {
            total: v,
            adversarial: v,
            ..Default::default()
        },
    ))
}

/// `−D(G) + D(G̃)`, the critic loss for one real/fake pair.
pub fn critic_objective<'t>(
    critic: &Discriminator,
    pc: &Bound<'t>,
    real: (Var<'t>, Var<'t>),
    fake: (Var<'t>, Var<'t>),
) -> TensorResult<(Var<'t>, LossComponents)> {
    let d_real = critic.score_var(pc, real.0, real.1)?;
    let d_fake = critic.score_var(pc, fake.0, fake.1)?;
    let loss = d_fake.sub(d_real)?;
    let v = loss.item()?;
    Ok((
        loss,
        LossComponents {
            total: v,
            critic: v,
            ..Default::default()
        },
    ))
}

/// Discrepancy between a graph and its perturbation, and the KL of both latents.
fn perturbation_terms<'t>(x: Var<'t>, adj: Var<'t>, fake: &GeneratedGraph<'t>) -> TensorResult<(Var<'t>, Var<'t>)> {
    let disc = graph_discrepancy(x, adj, fake.x, fake.adj)?;
    let mut kl: Option<Var<'t>> = None;
    for &(mu, sigma) in &fake.latents {
        let term = kl_loss(mu, sigma)?;
        kl = Some(match kl {
            Some(acc) => acc.add(term)?,
            None => term,
        });
    }
    let kl = kl.unwrap_or_else(|| x.tape().scalar(0.0));
    Ok((disc, kl))
}

fn weighted<'t>(base: Var<'t>, disc: Var<'t>, kl: Var<'t>, w: LossWeights) -> TensorResult<Var<'t>> {
    base.add(disc.scale(w.lambda))?.add(kl.scale(w.gamma))
}

/// `−D(G̃) + λ·discrepancy + γ·KL` for the perturbation `G̃` of `(x, adj)`.
#[allow(clippy::too_many_arguments)]
pub fn atii_generator_objective<'t>(
    critic: &Discriminator,
    pc: &Bound<'t>,
    gen: &PerturbationGenerator,
    pg: &Bound<'t>,
    x: Var<'t>,
    adj: Var<'t>,
    noise: &GeneratorNoise,
    w: LossWeights,
) -> TensorResult<(Var<'t>, LossComponents)> {
    let fake = gen.perturb(pg, x, adj, noise)?;
    let adversarial = critic.score_var(pc, fake.x, fake.adj)?.neg();
    let (disc, kl) = perturbation_terms(x, adj, &fake)?;
    let loss = weighted(adversarial, disc, kl, w)?;
    Ok((
        loss,
        LossComponents {
            total: loss.item()?,
            adversarial: adversarial.item()?,
            discrepancy: disc.item()?,
            kl: kl.item()?,
            ..Default::default()
        },
    ))
}

/// `BCE(0, f(G)) + BCE(1, f(G̃)) + λ·discrepancy + γ·KL`.
#[allow(clippy::too_many_arguments)]
pub fn nat_objective<'t>(
    classifier: &Discriminator,
    pc: &Bound<'t>,
    gen: &PerturbationGenerator,
    pg: &Bound<'t>,
    x: Var<'t>,
    adj: Var<'t>,
    noise: &GeneratorNoise,
    w: LossWeights,
) -> TensorResult<(Var<'t>, LossComponents)> {
    let fake = gen.perturb(pg, x, adj, noise)?;
    let p_real = classifier.score_var(pc, x, adj)?;
    let p_fake = classifier.score_var(pc, fake.x, fake.adj)?;
    let classification = bce(p_real, 0.0)?.add(bce(p_fake, 1.0)?)?;
    let (disc, kl) = perturbation_terms(x, adj, &fake)?;
    let loss = weighted(classification, disc, kl, w)?;
    Ok((
        loss,
        LossComponents {
            total: loss.item()?,
            classification: classification.item()?,
            discrepancy: disc.item()?,
            kl: kl.item()?,
            ..Default::default()
        },
    ))
}
