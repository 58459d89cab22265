use serde::{Deserialize, Serialize};

use super::{evaluate, EvalError, EvalResult, Metrics, ThresholdRule};
use crate::data::{DataResult, Split};
use crate::train::{train, Method, NoObserver, TrainConfig};

/// Per-trial values with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl TrialSummary {
    /// Two-pass mean and population std; empty input gives NaN for both.
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            values,
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub method: Method,
    pub trials: Vec<TrialOutcome>,
    pub auc: TrialSummary,
    pub aucpr: TrialSummary,
    pub f1: TrialSummary,
    pub recall: TrialSummary,
}

/// Trains and evaluates `k` times with seeds `cfg.seed, …, cfg.seed + k − 1`,
/// each seed fixing both the split and the initialization.
///
/// Trials fan out under `cfg.exec`; the report lists them in seed order.
pub fn run_trials<F>(
    split_factory: F,
    cfg: &TrainConfig,
    k: usize,
    rule: Option<ThresholdRule>,
) -> EvalResult<TrialReport>
where
    F: Fn(u64) -> DataResult<Split> + Sync,
{
    if k == 0 {
        return Err(EvalError::InvalidTrials("need at least one trial".into()));
    }
    cfg.validate()?;
    let rule = rule.unwrap_or_else(|| ThresholdRule::default_for(cfg.method.is_adversarial()));
    let run_one = |index: usize| -> EvalResult<TrialOutcome> {
        let seed = cfg.seed.wrapping_add(index as u64);
        let wrap = |e: EvalError| EvalError::Trial {
            index,
            seed,
            source: Box::new(e),
        };
        let split = split_factory(seed).map_err(|e| wrap(e.into()))?;
        let trial_cfg = TrainConfig { seed, ..cfg.clone() };
        let run = train(&split, &trial_cfg, &mut NoObserver).map_err(|e| wrap(e.into()))?;
        let report = evaluate(&run.model, &split, rule, cfg.exec).map_err(wrap)?;
        Ok(TrialOutcome {
            seed,
            metrics: report.metrics(),
        })
    };
    let trials = cfg
        .exec
        .map_range(k, run_one)
        .into_iter()
        .collect::<EvalResult<Vec<_>>>()?;
    let column = |f: fn(&Metrics) -> f64| TrialSummary::from_values(trials.iter().map(|t| f(&t.metrics)).collect());
    Ok(TrialReport {
        method: cfg.method,
        auc: column(|m| m.auc),
        aucpr: column(|m| m.aucpr),
        f1: column(|m| m.f1),
        recall: column(|m| m.recall),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let s = TrialSummary::from_values(vec![0.5]);
        assert_eq!((s.mean, s.std), (0.5, 0.0));
        let s = TrialSummary::from_values(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        let s = TrialSummary::from_values(vec![0.7; 5]);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn zero_trials_rejected() {
        let r = run_trials(|_| unreachable!(), &TrainConfig::default(), 0, None);
        assert!(matches!(r, Err(EvalError::InvalidTrials(_))));
    }
}
