//! Discrepancy, KL and binary cross-entropy terms.

use crate::autodiff::{Tape, Var};
use crate::data::Graph;
use crate::tensor::{Tensor, TensorError, TensorResult};

/// Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` before any log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Elementwise `−[t·log p + (1 − t)·log(1 − p)]` averaged over all entries,
/// with `target` a same-shape tensor of labels in [0, 1].
pub fn bce_matrix<'t>(p: Var<'t>, target: Var<'t>) -> TensorResult<Var<'t>> {
    let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let pos = target.mul(pc.log()?)?;
    let neg = target.rsub_scalar(1.0).mul(pc.rsub_scalar(1.0).log()?)?;
    Ok(pos.add(neg)?.mean()?.neg())
}

/// BCE of a probability (any shape) against one constant label.
pub fn bce<'t>(p: Var<'t>, label: f64) -> TensorResult<Var<'t>> {
    let s = p.shape();
    let target = p.tape().constant(Tensor::full(s.rows, s.cols, label));
    bce_matrix(p, target)
}

/// `‖X − X̃‖²_F + BCE(A, Ã)` for one graph; `Ã` is clamped inside the BCE.
pub fn graph_discrepancy<'t>(x: Var<'t>, adj: Var<'t>, x_hat: Var<'t>, adj_hat: Var<'t>) -> TensorResult<Var<'t>> {
    let recon = x.sub(x_hat)?.frobenius_sq();
    recon.add(bce_matrix(adj_hat, adj)?)
}

/// Batch-mean discrepancy between real graphs and their generated counterparts `(X̃, Ã)`.
pub fn discrepancy_loss(batch: &[&Graph], generated: &[(Tensor, Tensor)]) -> TensorResult<f64> {
    if batch.len() != generated.len() {
        return Err(TensorError::CountMismatch {
            op: "discrepancy_loss",
            left: batch.len(),
            right: generated.len(),
        });
    }
    if batch.is_empty() {
        return Err(TensorError::Empty { op: "discrepancy_loss" });
    }
    let tape = Tape::new();
    let mut total = 0.0;
    for (g, (xh, ah)) in batch.iter().zip(generated) {
        let term = graph_discrepancy(
            tape.constant(g.features.clone()),
            tape.constant(g.adjacency.clone()),
            tape.constant(xh.clone()),
            tape.constant(ah.clone()),
        )?;
        total += term.item()?;
    }
    Ok(total / batch.len() as f64)
}

/// `mean(½(μ² + σ² − 1 − 2·log σ))`, the KL divergence from `N(0, I)` per element.
pub fn kl_loss<'t>(mu: Var<'t>, sigma: Var<'t>) -> TensorResult<Var<'t>> {
    if mu.shape() != sigma.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "kl_loss",
            lhs: mu.shape(),
            rhs: sigma.shape(),
        });
    }
    let log_sigma = sigma.log()?;
    let inner = mu
        .mul(mu)?
        .add(sigma.mul(sigma)?)?
        .add_scalar(-1.0)
        .sub(log_sigma.scale(2.0))?;
    Ok(inner.mean()?.scale(0.5))
}
