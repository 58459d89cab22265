//! Two-dimensional sine-manifold simulation of the non-adversarial method.
//!
//! Normal data lie in the band `x = sin(z) + e`, `e ~ U(−a, a)`. A small VAE
//! perturbs points and an MLP classifier separates real (label 0) from
//! perturbed (label 1) points, with the same joint objective as graph NAT
//! but with vector backbones.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Tape, Var};
use crate::eval::{format_sig, roc_auc, write_atomic, EvalError};
use crate::exec::Exec;
use crate::nn::{Bound, Linear, Mlp, ParamSet};
use crate::tensor::{Tensor, TensorError, TensorResult};
use crate::train::{bce, kl_loss, Optimizer, OptimizerKind};

pub const HIDDEN: usize = 16;
pub const LATENT: usize = 2;
pub const BOUNDARY_FILE: &str = "boundary.csv";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid 2-D simulation setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("non-finite loss at epoch {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type SynthResult<T> = Result<T, SynthError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineConfig {
    /// Noise half-width.
    pub a: f64,
    pub n_samples: usize,
    pub z_lo: f64,
    pub z_hi: f64,
    pub seed: u64,
}

impl Default for SineConfig {
    fn default() -> Self {
        Self {
            a: 0.1,
            n_samples: 1000,
            z_lo: 0.0,
            z_hi: 2.0 * PI,
            seed: 0,
        }
    }
}

impl SineConfig {
    pub fn validate(&self) -> SynthResult<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(SynthError::InvalidConfig(format!("a must be positive, got {}", self.a)));
        }
        if !(self.z_lo < self.z_hi) || !self.z_lo.is_finite() || !self.z_hi.is_finite() {
            return Err(SynthError::InvalidConfig(format!(
                "need z_lo < z_hi, got [{}, {}]",
                self.z_lo, self.z_hi
            )));
        }
        if self.n_samples < 2 {
            return Err(SynthError::InvalidConfig("n_samples must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub z: f64,
    pub x: f64,
}

/// `z ~ U(z_lo, z_hi)`, `x = sin z + e` with `e ~ U(−a, a)`.
pub fn gen_sine_data(cfg: &SineConfig) -> SynthResult<Vec<Point2>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.n_samples)
        .map(|_| {
            let z = rng.random_range(cfg.z_lo..cfg.z_hi);
            let e = rng.random_range(-cfg.a..cfg.a);
            Point2 { z, x: z.sin() + e }
        })
        .collect())
}

pub fn to_tensor(points: &[Point2]) -> Tensor {
    Tensor::from_vec(points.len(), 2, points.iter().flat_map(|p| [p.z, p.x]).collect()).expect("two columns per point")
}

/// VAE `2 → 16 → (μ, log σ) ∈ R² → 16 → 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vae2d {
    pub params: ParamSet,
    pub encoder: Linear,
    pub mu: Linear,
    pub log_sigma: Linear,
    pub decoder: Mlp,
}

impl Vae2d {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let encoder = Linear::new(&mut params, "encoder", 2, HIDDEN, rng);
        let mu = Linear::new(&mut params, "mu", HIDDEN, LATENT, rng);
        let log_sigma = Linear::new(&mut params, "log_sigma", HIDDEN, LATENT, rng);
        let decoder = Mlp::new(&mut params, "decoder", LATENT, HIDDEN, 2, rng);
        Self {
            params,
            encoder,
            mu,
            log_sigma,
            decoder,
        }
    }

    /// `(X̃, μ, σ)` with `Z = μ + σ ⊙ ε`.
    pub fn perturb<'t>(&self, p: &Bound<'t>, x: Var<'t>, noise: Var<'t>) -> TensorResult<(Var<'t>, Var<'t>, Var<'t>)> {
        let h = self.encoder.forward(p, x)?.relu();
        let mu = self.mu.forward(p, h)?;
        let sigma = self.log_sigma.forward(p, h)?.exp();
        let z = mu.add(sigma.mul(noise)?)?;
        Ok((self.decoder.forward(p, z)?, mu, sigma))
    }
}

/// Hidden-layer nonlinearity of the 2-D classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hidden {
    #[default]
    Relu,
    Tanh,
}

impl Hidden {
    fn apply<'t>(self, h: Var<'t>) -> Var<'t> {
        match self {
            Hidden::Relu => h.relu(),
            // tanh(h) = 2·σ(2h) − 1
            Hidden::Tanh => h.scale(2.0).sigmoid().scale(2.0).add_scalar(-1.0),
        }
    }
}

/// MLP `2 → 16 → 16 → 1` with a sigmoid output: the probability of being anomalous.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier2d {
    pub params: ParamSet,
    pub layers: [Linear; 3],
    pub hidden: Hidden,
}

impl Classifier2d {
    pub fn new<R: Rng + ?Sized>(hidden: Hidden, rng: &mut R) -> Self {
        let mut params = ParamSet::new();
        let layers = [
            Linear::new(&mut params, "0", 2, HIDDEN, rng),
            Linear::new(&mut params, "1", HIDDEN, HIDDEN, rng),
            Linear::new(&mut params, "2", HIDDEN, 1, rng),
        ];
        Self { params, layers, hidden }
    }

    /// Column of scores, one per input row.
    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> TensorResult<Var<'t>> {
        let h = self.hidden.apply(self.layers[0].forward(p, x)?);
        let h = self.hidden.apply(self.layers[1].forward(p, h)?);
        Ok(self.layers[2].forward(p, h)?.sigmoid())
    }

    pub fn scores(&self, points: &[Point2]) -> TensorResult<Vec<f64>> {
        if points.is_empty() {
            return Ok(Vec::new());
        }
        let tape = Tape::new();
        let p = self.params.bind_frozen(&tape);
        let s = self.forward(&p, tape.constant(to_tensor(points)))?;
        Ok(s.value().into_data())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Train2dConfig {
    /// Reconstruction weight λ.
    pub lambda: f64,
    /// KL weight γ.
    pub gamma: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: Hidden,
}

impl Default for Train2dConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma: 1e-5,
            epochs: 200,
            lr: 1e-3,
            batch_size: 50,
            seed: 0,
            hidden: Hidden::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Loss2d {
    pub total: f64,
    pub classification: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

/// `BCE(0, f(x)) + BCE(1, f(x̃)) + λ·mean((x − x̃)²) + γ·KL` over a batch of rows.
#[allow(clippy::too_many_arguments)]
pub fn nat_2d_objective<'t>(
    vae: &Vae2d,
    pv: &Bound<'t>,
    classifier: &Classifier2d,
    pc: &Bound<'t>,
    x: Var<'t>,
    noise: Var<'t>,
    lambda: f64,
    gamma: f64,
) -> TensorResult<(Var<'t>, Loss2d)> {
    let (x_hat, mu, sigma) = vae.perturb(pv, x, noise)?;
    let classification = bce(classifier.forward(pc, x)?, 0.0)?.add(bce(classifier.forward(pc, x_hat)?, 1.0)?)?;
    let diff = x.sub(x_hat)?;
    let reconstruction = diff.mul(diff)?.mean()?;
    let kl = kl_loss(mu, sigma)?;
    let loss = classification.add(reconstruction.scale(lambda))?.add(kl.scale(gamma))?;
    Ok((
        loss,
        Loss2d {
            total: loss.item()?,
            classification: classification.item()?,
            reconstruction: reconstruction.item()?,
            kl: kl.item()?,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct Train2dRun {
    pub vae: Vae2d,
    pub classifier: Classifier2d,
    /// Mean batch loss per epoch.
    pub losses: Vec<Loss2d>,
}

/// Joint Adam training of the VAE and the classifier; VAE initialised first.
pub fn train_2d(points: &[Point2], cfg: &Train2dConfig) -> SynthResult<Train2dRun> {
    if points.len() < 2 {
        return Err(SynthError::InvalidConfig(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr > 0.0) || !(cfg.lambda >= 0.0) || !(cfg.gamma >= 0.0) {
        return Err(SynthError::InvalidConfig(format!("{cfg:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vae = Vae2d::new(&mut rng);
    let mut classifier = Classifier2d::new(cfg.hidden, &mut rng);
    let mut vae_opt = Optimizer::new(OptimizerKind::Adam, cfg.lr, &vae.params);
    let mut clf_opt = Optimizer::new(OptimizerKind::Adam, cfg.lr, &classifier.params);

    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = Loss2d::default();
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Point2> = chunk.iter().map(|&i| points[i]).collect();
            let noise = Tensor::standard_normal(batch.len(), LATENT, &mut rng);
            let tape = Tape::new();
            let pv = vae.params.bind(&tape);
            let pc = classifier.params.bind(&tape);
            let x = tape.constant(to_tensor(&batch));
            let (loss, parts) = nat_2d_objective(
                &vae,
                &pv,
                &classifier,
                &pc,
                x,
                tape.constant(noise),
                cfg.lambda,
                cfg.gamma,
            )?;
            let grads = tape.backward(loss)?;
            vae_opt.step(&mut vae.params, &pv.grads(&grads))?;
            clf_opt.step(&mut classifier.params, &pc.grads(&grads))?;
            sum.total += parts.total;
            sum.classification += parts.classification;
            sum.reconstruction += parts.reconstruction;
            sum.kl += parts.kl;
            batches += 1;
        }
        let k = batches as f64;
        let mean = Loss2d {
            total: sum.total / k,
            classification: sum.classification / k,
            reconstruction: sum.reconstruction / k,
            kl: sum.kl / k,
        };
        if !mean.total.is_finite() || !vae.params.is_finite() || !classifier.params.is_finite() {
            return Err(SynthError::NonFinite(epoch));
        }
        losses.push(mean);
    }
    Ok(Train2dRun {
        vae,
        classifier,
        losses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub z: f64,
    pub x: f64,
    pub score: f64,
}

/// Scores on a `resolution × resolution` grid, row-major with `z` outer.
pub fn boundary_grid(
    classifier: &Classifier2d,
    z_range: (f64, f64),
    x_range: (f64, f64),
    resolution: usize,
    exec: Exec,
) -> SynthResult<Vec<GridPoint>> {
    if resolution < 2 {
        return Err(SynthError::InvalidConfig(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    for (lo, hi) in [z_range, x_range] {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(SynthError::InvalidConfig(format!("degenerate range [{lo}, {hi}]")));
        }
    }
    let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let rows = exec.map_range(resolution, |i| -> TensorResult<Vec<GridPoint>> {
        let z = at(z_range, i);
        let points: Vec<Point2> = (0..resolution).map(|j| Point2 { z, x: at(x_range, j) }).collect();
        let scores = classifier.scores(&points)?;
        Ok(points
            .iter()
            .zip(scores)
            .map(|(p, score)| GridPoint { z: p.z, x: p.x, score })
            .collect())
    });
    let mut grid = Vec::with_capacity(resolution * resolution);
    for row in rows {
        grid.extend(row?);
    }
    Ok(grid)
}

/// Writes `z,x,score` rows to `path`.
pub fn write_boundary_csv(grid: &[GridPoint], path: impl AsRef<Path>) -> SynthResult<()> {
    let mut s = String::from("z,x,score\n");
    for g in grid {
        let _ = writeln!(s, "{},{},{}", format_sig(g.z), format_sig(g.x), format_sig(g.score));
    }
    write_atomic(path.as_ref(), s.as_bytes())?;
    Ok(())
}

/// Among grid points with score below 0.5, the fractions inside and outside
/// the band `|x − sin z| ≤ a`, each relative to the number of grid points in
/// that region.
pub fn band_occupancy(grid: &[GridPoint], a: f64) -> (f64, f64) {
    let (mut inside, mut inside_low, mut outside, mut outside_low) = (0usize, 0usize, 0usize, 0usize);
    for g in grid {
        let low = g.score < 0.5;
        if (g.x - g.z.sin()).abs() <= a {
            inside += 1;
            inside_low += usize::from(low);
        } else {
            outside += 1;
            outside_low += usize::from(low);
        }
    }
    let frac = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    (frac(inside_low, inside), frac(outside_low, outside))
}

/// Held-out normals from `cfg` (with `seed`) against the same points shifted
/// vertically by `±U(0.5, 2.0)`; returns the AUC with anomalies positive.
pub fn off_manifold_auc(classifier: &Classifier2d, cfg: &SineConfig, seed: u64) -> SynthResult<f64> {
    let normals = gen_sine_data(&SineConfig { seed, ..*cfg })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0ff5);
    let anomalies: Vec<Point2> = normals
        .iter()
        .map(|p| {
            let shift = rng.random_range(0.5..2.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Point2 {
                z: p.z,
                x: p.x + sign * shift,
            }
        })
        .collect();
    let mut scores = classifier.scores(&normals)?;
    scores.extend(classifier.scores(&anomalies)?);
    let labels: Vec<bool> = (0..scores.len()).map(|i| i >= normals.len()).collect();
    Ok(roc_auc(&scores, &labels)?)
}
