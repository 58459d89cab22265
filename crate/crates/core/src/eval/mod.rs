//! Anomaly scoring, ranking metrics, multi-trial aggregation and exports.
//!
//! Scores follow one convention everywhere: higher means more anomalous.

mod export;
mod geometry;
mod metrics;
mod trials;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Graph, Split};
use crate::exec::Exec;
use crate::nn::Discriminator;
use crate::tensor::TensorError;
use crate::train::{EpochRecord, TrainError, TrainObserver, TrainedModel};

pub use export::{export_artifacts, format_sig, write_atomic, Role, EMBEDDINGS_FILE, METRICS_FILE, SCORES_FILE};
pub use geometry::{ball_volume, gamma_half_integer, interpolation_ratio, GeometryParams};
pub use metrics::{average_precision, pr_metrics, quantile, roc_auc, PrMetrics, ThresholdRule};
pub use trials::{run_trials, TrialOutcome, TrialReport, TrialSummary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {index} is not finite ({value})")]
    NonFiniteScore { index: usize, value: f64 },
    #[error("both classes are needed ({positives} anomalous, {negatives} normal)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("the train-quantile threshold needs training scores")]
    MissingTrainScores,
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid trial settings: {0}")]
    InvalidTrials(String),
    #[error("trial {index} (seed {seed}): {source}")]
    Trial {
        index: usize,
        seed: u64,
        #[source]
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type EvalResult<T> = Result<T, EvalError>;

/// Anomaly score of every graph, in input order.
pub fn anomaly_scores(model: &TrainedModel, graphs: &[Graph], exec: Exec) -> EvalResult<Vec<f64>> {
    Ok(exec.try_map(graphs, |g| model.anomaly_score(g))?)
}

/// Summary metrics, as written to `metrics.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub aucpr: f64,
    pub f1: f64,
    pub recall: f64,
    pub threshold: f64,
    pub n_test: usize,
    pub n_anomalous: usize,
}

/// Test scores with their labels (`true` = anomalous) and derived metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub auc: f64,
    pub aucpr: f64,
    pub f1: f64,
    pub recall: f64,
    pub threshold: f64,
}

impl ScoreReport {
    pub fn from_scores(
        scores: Vec<f64>,
        labels: Vec<bool>,
        rule: ThresholdRule,
        train_scores: Option<&[f64]>,
    ) -> EvalResult<Self> {
        let auc = roc_auc(&scores, &labels)?;
        let pr = pr_metrics(&scores, &labels, rule, train_scores)?;
        Ok(Self {
            scores,
            labels,
            auc,
            aucpr: pr.aucpr,
            f1: pr.f1,
            recall: pr.recall,
            threshold: pr.threshold,
        })
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            auc: self.auc,
            aucpr: self.aucpr,
            f1: self.f1,
            recall: self.recall,
            threshold: self.threshold,
            n_test: self.scores.len(),
            n_anomalous: self.labels.iter().filter(|&&l| l).count(),
        }
    }
}

/// Scores `split.test`; training scores are computed only when the rule needs them.
pub fn evaluate(model: &TrainedModel, split: &Split, rule: ThresholdRule, exec: Exec) -> EvalResult<ScoreReport> {
    let test: Vec<Graph> = split.test.iter().map(|m| m.graph.clone()).collect();
    let scores = anomaly_scores(model, &test, exec)?;
    let train_scores = match rule {
        ThresholdRule::TrainQuantile(_) => Some(anomaly_scores(model, &split.train_graphs(), exec)?),
        ThresholdRule::Fixed(_) => None,
    };
    ScoreReport::from_scores(scores, split.test_labels(), rule, train_scores.as_deref())
}

/// Test AUC after one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochAuc {
    pub epoch: usize,
    pub auc: f64,
}

/// Observer scoring a fixed labelled set at the end of every epoch.
#[derive(Debug, Clone)]
pub struct EpochEvaluator {
    graphs: Vec<Graph>,
    labels: Vec<bool>,
    adversarial: bool,
    pub history: Vec<EpochAuc>,
    /// First scoring failure, after which evaluation stops.
    pub error: Option<String>,
}

impl EpochEvaluator {
    pub fn new(split: &Split, adversarial: bool) -> Self {
        Self {
            graphs: split.test.iter().map(|m| m.graph.clone()).collect(),
            labels: split.test_labels(),
            adversarial,
            history: Vec::new(),
            error: None,
        }
    }

    pub fn final_auc(&self) -> Option<EpochAuc> {
        self.history.last().copied()
    }

    /// Highest AUC, earliest epoch on ties.
    pub fn best_auc(&self) -> Option<EpochAuc> {
        self.history
            .iter()
            .copied()
            .fold(None, |best: Option<EpochAuc>, e| match best {
                Some(b) if b.auc >= e.auc => Some(b),
                _ => Some(e),
            })
    }

    fn auc_of(&self, d: &Discriminator) -> EvalResult<f64> {
        let sign = if self.adversarial { -1.0 } else { 1.0 };
        let scores = self
            .graphs
            .iter()
            .map(|g| d.score(g).map(|s| sign * s))
            .collect::<Result<Vec<_>, _>>()?;
        roc_auc(&scores, &self.labels)
    }
}

impl TrainObserver for EpochEvaluator {
    fn epoch_end(&mut self, record: &EpochRecord, discriminator: &Discriminator) {
        if self.error.is_some() {
            return;
        }
        match self.auc_of(discriminator) {
            Ok(auc) => self.history.push(EpochAuc {
                epoch: record.epoch,
                auc,
            }),
            Err(e) => self.error = Some(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Member;
    use crate::nn::Architecture;
    use crate::tensor::Tensor;
    use crate::train::Method;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_split() -> Split {
        let path = |n: usize| {
            let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
            Graph::from_edges(n, &edges, Tensor::ones(n, 2), 0)
        };
        let member = |id, anomalous| Member {
            id,
            graph: path(id + 2),
            anomalous,
        };
        Split {
            train: vec![member(0, false), member(1, false)],
            test: vec![member(2, false), member(3, true), member(4, true)],
            normal_class: 0.into(),
            seed: 0,
        }
    }

    fn zero_head(method: Method) -> TrainedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = TrainedModel::fresh(method, 2, Architecture::default(), false, &mut rng);
        for (name, t) in m
            .discriminator
            .params
            .names()
            .to_vec()
            .iter()
            .zip(m.discriminator.params.tensors_mut())
        {
            if name.starts_with("head/") {
                *t = Tensor::zeros(t.rows(), t.cols());
            }
        }
        m
    }

    #[test]
    fn zeroed_classifier_head_scores_one_half() {
        let split = tiny_split();
        let model = zero_head(Method::Nat);
        let graphs: Vec<_> = split.test.iter().map(|m| m.graph.clone()).collect();
        for exec in [Exec::Sequential, Exec::Parallel] {
            assert!(anomaly_scores(&model, &graphs, exec).unwrap().iter().all(|&s| s == 0.5));
        }
    }

    #[test]
    fn critic_scores_are_negated() {
        let split = tiny_split();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = TrainedModel::fresh(Method::Atii, 2, Architecture::default(), false, &mut rng);
        let g = &split.test[0].graph;
        assert_eq!(
            anomaly_scores(&model, std::slice::from_ref(g), Exec::Sequential).unwrap()[0],
            -model.discriminator.score(g).unwrap()
        );
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let model = zero_head(Method::Nat);
        let g = Graph::from_edges(2, &[(0, 1)], Tensor::ones(2, 3), 0);
        assert!(matches!(
            anomaly_scores(&model, &[g], Exec::Sequential),
            Err(EvalError::Tensor(_))
        ));
    }

    #[test]
    fn report_counts_and_quantile_rule() {
        let split = tiny_split();
        let model = zero_head(Method::Ati);
        let r = evaluate(&model, &split, ThresholdRule::TrainQuantile(0.95), Exec::Sequential).unwrap();
        let m = r.metrics();
        assert_eq!((m.n_test, m.n_anomalous), (3, 2));
        // A zero critic head scores every graph alike.
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.threshold, 0.0);
    }

    #[test]
    fn epoch_evaluator_tracks_best() {
        let mut e = EpochEvaluator::new(&tiny_split(), false);
        e.history = vec![
            EpochAuc { epoch: 1, auc: 0.6 },
            EpochAuc { epoch: 2, auc: 0.9 },
            EpochAuc { epoch: 3, auc: 0.9 },
            EpochAuc { epoch: 4, auc: 0.7 },
        ];
        assert_eq!(e.best_auc().unwrap().epoch, 2);
        assert_eq!(e.final_auc().unwrap().epoch, 4);
    }
}
