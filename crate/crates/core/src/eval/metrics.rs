use serde::{Deserialize, Serialize};

use super::{EvalError, EvalResult};

fn check(scores: &[f64], labels: &[bool]) -> EvalResult<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore {
            index: i,
            value: scores[i],
        });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass { positives, negatives });
    }
    Ok((positives, negatives))
}

/// Indices sorted by descending score, then split into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Area under the ROC curve, positives being the anomalies.
///
/// Computed from midranks: the doubled rank sum of the positives is an exact
/// integer, so the result equals `(wins + ties/2) / (P·N)` bit for bit.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> EvalResult<f64> {
    let (p, n) = check(scores, labels)?;
    let mut groups = tie_groups(scores);
    groups.reverse();
    // Ranks are 1-based in ascending order; a tie group covering ranks
    // lo+1..=lo+k has midrank lo + (k+1)/2, i.e. doubled 2·lo + k + 1.
    let mut doubled_rank_sum: u64 = 0;
    let mut lo = 0u64;
    for g in &groups {
        let k = g.len() as u64;
        let pos = g.iter().filter(|&&i| labels[i]).count() as u64;
        doubled_rank_sum += pos * (2 * lo + k + 1);
        lo += k;
    }
    let p64 = p as u64;
    let doubled_u = doubled_rank_sum - p64 * (p64 + 1);
    Ok(doubled_u as f64 / 2.0 / (p as f64 * n as f64))
}

/// Average precision: `Σ_k (R_k − R_{k−1})·P_k` over the distinct score
/// thresholds in descending order, predicting anomalous when `s ≥ t`.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> EvalResult<f64> {
    let (p, _) = check(scores, labels)?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for g in tie_groups(scores) {
        for &i in &g {
            if labels[i] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / p as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// How the F1/recall decision threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum ThresholdRule {
    Fixed(f64),
    /// Quantile `q` of the anomaly scores of the training normals.
    TrainQuantile(f64),
}

impl ThresholdRule {
    pub const CLASSIFIER_DEFAULT: ThresholdRule = ThresholdRule::Fixed(0.5);
    pub const CRITIC_DEFAULT: ThresholdRule = ThresholdRule::TrainQuantile(0.95);

    /// Fixed 0.5 for a sigmoid classifier, the 95th train percentile for a critic.
    pub fn default_for(adversarial: bool) -> Self {
        if adversarial {
            Self::CRITIC_DEFAULT
        } else {
            Self::CLASSIFIER_DEFAULT
        }
    }

    /// Fixed thresholds must be finite and quantiles lie in `[0, 1]`.
    pub fn validate(self) -> EvalResult<()> {
        match self {
            ThresholdRule::Fixed(t) if !t.is_finite() => {
                Err(EvalError::InvalidThreshold(format!("fixed threshold {t}")))
            }
            ThresholdRule::TrainQuantile(q) if !(0.0..=1.0).contains(&q) => {
                Err(EvalError::InvalidThreshold(format!("quantile {q} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    pub fn resolve(self, train_scores: Option<&[f64]>) -> EvalResult<f64> {
        match self {
            ThresholdRule::Fixed(t) if t.is_finite() => Ok(t),
            ThresholdRule::Fixed(t) => Err(EvalError::InvalidThreshold(format!("fixed threshold {t}"))),
            ThresholdRule::TrainQuantile(q) => {
                let s = train_scores
                    .filter(|s| !s.is_empty())
                    .ok_or(EvalError::MissingTrainScores)?;
                quantile(s, q)
            }
        }
    }
}

/// Linear-interpolation quantile at position `q·(n−1)` of the sorted values.
pub fn quantile(values: &[f64], q: f64) -> EvalResult<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(EvalError::InvalidThreshold(format!("quantile {q} outside [0, 1]")));
    }
    if values.is_empty() {
        return Err(EvalError::MissingTrainScores);
    }
    if let Some(i) = values.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore {
            index: i,
            value: values[i],
        });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrMetrics {
    pub aucpr: f64,
    pub f1: f64,
    pub recall: f64,
    pub threshold: f64,
}

/// Average precision, and F1 and recall when predicting anomalous at `s ≥ threshold`.
pub fn pr_metrics(
    scores: &[f64],
    labels: &[bool],
    rule: ThresholdRule,
    train_scores: Option<&[f64]>,
) -> EvalResult<PrMetrics> {
    let (p, _) = check(scores, labels)?;
    let aucpr = average_precision(scores, labels)?;
    let threshold = rule.resolve(train_scores)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        if s >= threshold {
            if l {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let recall = tp as f64 / p as f64;
    let f1 = if tp == 0 {
        0.0
    } else {
        let precision = tp as f64 / (tp + fp) as f64;
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PrMetrics {
        aucpr,
        f1,
        recall,
        threshold,
    })
}
