use serde::{Deserialize, Serialize};

use crate::nn::ParamSet;
use crate::tensor::{Tensor, TensorError, TensorResult};

pub const RMSPROP_DECAY: f64 = 0.99;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const OPTIMIZER_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Rmsprop,
    Adam,
}

/// Per-parameter optimizer accumulators; shapes mirror the parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    /// RMSProp: squared-gradient EMA. Adam: second moment.
    second: Vec<Tensor>,
    /// Adam first moment; empty for RMSProp.
    first: Vec<Tensor>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ParamSet) -> Self {
        let zeros = || {
            params
                .tensors()
                .iter()
                .map(|t| Tensor::zeros(t.rows(), t.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            kind,
            lr,
            second: zeros(),
            first: if kind == OptimizerKind::Adam {
                zeros()
            } else {
                Vec::new()
            },
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one descent step in place.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> TensorResult<()> {
        if grads.len() != params.len() || self.second.len() != params.len() {
            return Err(TensorError::CountMismatch {
                op: "optimizer step",
                left: params.len(),
                right: grads.len(),
            });
        }
        for (p, g) in params.tensors().iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "optimizer step",
                    lhs: p.shape(),
                    rhs: g.shape(),
                });
            }
        }
        self.steps += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Rmsprop => {
                for ((p, g), v) in params.tensors_mut().iter_mut().zip(grads).zip(&mut self.second) {
                    for ((w, &gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.data_mut()) {
                        *vi = RMSPROP_DECAY * *vi + (1.0 - RMSPROP_DECAY) * gi * gi;
                        *w -= lr * gi / (vi.sqrt() + OPTIMIZER_EPS);
                    }
                }
            }
            OptimizerKind::Adam => {
                let t = self.steps as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                let tensors = params
                    .tensors_mut()
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second);
                for (((p, g), m), v) in tensors {
                    let entries = p
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(m.data_mut())
                        .zip(v.data_mut());
                    for (((w, &gi), mi), vi) in entries {
                        *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * gi;
                        *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * gi * gi;
                        let m_hat = *mi / c1;
                        let v_hat = *vi / c2;
                        *w -= lr * m_hat / (v_hat.sqrt() + OPTIMIZER_EPS);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.register("w", Tensor::scalar(v));
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for kind in [OptimizerKind::Rmsprop, OptimizerKind::Adam] {
            let mut p = single(0.7);
            let mut opt = Optimizer::new(kind, 1e-3, &p);
            opt.step(&mut p, &[Tensor::scalar(0.0)]).unwrap();
            assert_eq!(p.tensors()[0].item().unwrap(), 0.7);
        }
    }

    #[test]
    fn first_adam_step_moves_by_lr() {
        let mut p = single(0.0);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 1e-3, &p);
        opt.step(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        // m̂ = 1, v̂ = 1 after bias correction
        let want = -1e-3 / (1.0 + OPTIMIZER_EPS);
        assert!((p.tensors()[0].item().unwrap() - want).abs() < 1e-18);
    }

    #[test]
    fn first_rmsprop_step_by_hand() {
        let mut p = single(1.0);
        let mut opt = Optimizer::new(OptimizerKind::Rmsprop, 0.01, &p);
        opt.step(&mut p, &[Tensor::scalar(2.0)]).unwrap();
        let v: f64 = 0.01 * 4.0;
        let want = 1.0 - 0.01 * 2.0 / (v.sqrt() + OPTIMIZER_EPS);
        assert_eq!(p.tensors()[0].item().unwrap(), want);
    }

    #[test]
    fn mismatched_gradients_error() {
        let mut p = single(1.0);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01, &p);
        assert!(opt.step(&mut p, &[]).is_err());
        assert!(opt.step(&mut p, &[Tensor::zeros(2, 1)]).is_err());
    }

    #[test]
    fn clipping_after_step() {
        let mut p = single(0.5);
        let mut opt = Optimizer::new(OptimizerKind::Rmsprop, 1e-3, &p);
        opt.step(&mut p, &[Tensor::scalar(-1.0)]).unwrap();
        p.clamp_all(0.01);
        assert_eq!(p.tensors()[0].item().unwrap(), 0.01);
    }
}
