//! Training procedures for the three detectors.
//!
//! * [`Method::Ati`]: an MLP generator maps Gaussian noise to graphs and is
//!   trained adversarially against a weight-clipped critic.
//! * [`Method::Atii`]: a Node-VGAE/Edge-VGAE pair perturbs real graphs and
//!   is trained adversarially, with discrepancy and KL penalties.
//! * [`Method::Nat`]: the perturbation generator and a sigmoid classifier
//!   minimize one joint objective, with real graphs labelled 0 and
//!   generated ones labelled 1.
//!
//! Batches are processed one graph per tape. Per-graph gradients are summed
//! in batch order, so runs are bit-identical under either [`Exec`] mode.

mod checkpoint;
mod loss;
mod objective;
mod optim;
mod procedure;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Graph;
use crate::exec::Exec;
use crate::nn::{Architecture, Discriminator, HeadActivation, MlpGenerator, ParamSet, PerturbationGenerator};
use crate::tensor::{Tensor, TensorError, TensorResult};

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, ParamArray, CHECKPOINT_FILE};
pub use loss::{bce, bce_matrix, discrepancy_loss, graph_discrepancy, kl_loss, PROB_CLAMP};
pub use objective::{
    ati_generator_objective, atii_generator_objective, critic_objective, nat_objective, LossComponents, LossWeights,
};
pub use optim::{Optimizer, OptimizerKind, ADAM_BETA1, ADAM_BETA2, OPTIMIZER_EPS, RMSPROP_DECAY};
pub use procedure::{
    atii_generator_gradient, batch_gradients, train, train_ati, train_atii, train_graphs, train_nat, write_log,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("the training set is empty")]
    EmptyTrainingSet,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { epoch: usize, what: &'static str },
    #[error("critic parameter {value} escaped the clip range [-{clip}, {clip}]")]
    ClipViolation { value: f64, clip: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type TrainResult<T> = Result<T, TrainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Adversarial, noise-to-graph MLP generator.
    Ati,
    /// Adversarial, VGAE perturbation generator.
    Atii,
    /// Non-adversarial joint training with the perturbation generator.
    Nat,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ati, Method::Atii, Method::Nat];

    pub fn is_adversarial(self) -> bool {
        self != Method::Nat
    }

    pub fn default_optimizer(self) -> OptimizerKind {
        match self {
            Method::Ati | Method::Atii => OptimizerKind::Rmsprop,
            Method::Nat => OptimizerKind::Adam,
        }
    }

    pub fn head_activation(self) -> HeadActivation {
        match self {
            Method::Nat => HeadActivation::Sigmoid,
            Method::Ati | Method::Atii => HeadActivation::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ati => "ati",
            Method::Atii => "atii",
            Method::Nat => "nat",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ati" => Ok(Method::Ati),
            "atii" => Ok(Method::Atii),
            "nat" => Ok(Method::Nat),
            other => Err(format!("unknown method {other:?} (expected ati, atii or nat)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    /// Discrepancy weight λ.
    pub lambda: f64,
    /// KL weight γ.
    pub gamma: f64,
    /// Critic weight bound c.
    pub clip: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    /// `None` picks RMSProp for the adversarial methods and Adam for NAT.
    pub optimizer: Option<OptimizerKind>,
    pub seed: u64,
    /// Perturbation generator uses `Z = μ` instead of sampling.
    pub deterministic_generator: bool,
    pub arch: Architecture,
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Nat,
            lambda: 1.0,
            gamma: 1e-5,
            clip: 0.01,
            batch_size: 4,
            lr: 1e-3,
            epochs: 300,
            optimizer: None,
            seed: 0,
            deterministic_generator: false,
            arch: Architecture::default(),
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn for_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn optimizer_kind(&self) -> OptimizerKind {
        self.optimizer.unwrap_or_else(|| self.method.default_optimizer())
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda: self.lambda,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> TrainResult<()> {
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if self.method.is_adversarial() && !(self.clip > 0.0 && self.clip.is_finite()) {
            return bad(format!("clip must be positive, got {}", self.clip));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        let a = self.arch;
        if a.layers == 0 || a.agg_dim == 0 || a.latent_dim == 0 {
            return bad("layers, agg_dim and latent_dim must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum GeneratorModel {
    Mlp(MlpGenerator),
    Perturbation(PerturbationGenerator),
}

impl GeneratorModel {
    pub fn params(&self) -> &ParamSet {
        match self {
            GeneratorModel::Mlp(g) => &g.params,
            GeneratorModel::Perturbation(g) => &g.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            GeneratorModel::Mlp(g) => &mut g.params,
            GeneratorModel::Perturbation(g) => &mut g.params,
        }
    }
}

/// Discriminator (critic or classifier) plus the generator it was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub method: Method,
    pub discriminator: Discriminator,
    pub generator: GeneratorModel,
}

impl TrainedModel {
    /// Freshly initialized networks; the discriminator draws from `rng` first.
    pub fn fresh<R: Rng + ?Sized>(
        method: Method,
        input_dim: usize,
        arch: Architecture,
        deterministic_generator: bool,
        rng: &mut R,
    ) -> Self {
        let discriminator = Discriminator::new(input_dim, arch, method.head_activation(), rng);
        let generator = match method {
            Method::Ati => GeneratorModel::Mlp(MlpGenerator::new(input_dim, arch, rng)),
            Method::Atii | Method::Nat => GeneratorModel::Perturbation(PerturbationGenerator::new(
                input_dim,
                arch,
                deterministic_generator,
                rng,
            )),
        };
        Self {
            method,
            discriminator,
            generator,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.discriminator.input_dim
    }

    pub fn arch(&self) -> Architecture {
        self.discriminator.arch
    }

    /// Higher means more anomalous: the classifier probability for NAT, the
    /// negated critic output otherwise.
    pub fn anomaly_score(&self, g: &Graph) -> TensorResult<f64> {
        self.anomaly_score_tensors(&g.features, &g.adjacency)
    }

    pub fn anomaly_score_tensors(&self, x: &Tensor, adj: &Tensor) -> TensorResult<f64> {
        let s = self.discriminator.score_tensors(x, adj)?;
        Ok(if self.method.is_adversarial() { -s } else { s })
    }

    pub fn is_finite(&self) -> bool {
        self.discriminator.params.is_finite() && self.generator.params().is_finite()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean over batches of the objective minimized by the generator step
    /// (adversarial methods) or the joint step (NAT).
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    pub wall_time_s: f64,
}

/// Hooks called by the training loop.
pub trait TrainObserver {
    /// After each critic update and clip (adversarial methods only).
    fn critic_step(&mut self, _critic: &ParamSet, _clip: f64) {}

    fn epoch_end(&mut self, _record: &EpochRecord, _discriminator: &Discriminator) {}
}

/// Observer that ignores every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl TrainObserver for NoObserver {}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: TrainedModel,
    pub log: Vec<EpochRecord>,
}
