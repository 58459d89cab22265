use rand::Rng;

use super::{Bound, ParamId, ParamSet};
use crate::autodiff::Var;
use crate::tensor::{Tensor, TensorError, TensorResult};

/// Affine map `x·W + b` applied row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Glorot-uniform weight, zero bias.
    pub fn new<R: Rng + ?Sized>(params: &mut ParamSet, name: &str, in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let weight = params.register(format!("{name}/weight"), Tensor::glorot(in_dim, out_dim, rng));
        let bias = params.register(format!("{name}/bias"), Tensor::zeros(1, out_dim));
        Self {
            weight,
            bias,
            in_dim,
            out_dim,
        }
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> TensorResult<Var<'t>> {
        let shape = x.shape();
        if shape.cols != self.in_dim {
            return Err(TensorError::ShapeMismatch {
                op: "linear",
                lhs: shape,
                rhs: p.var(self.weight).shape(),
            });
        }
        x.matmul(p.var(self.weight))?.add_row(p.var(self.bias))
    }
}

/// Two affine maps with a ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub first: Linear,
    pub second: Linear,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            first: Linear::new(params, &format!("{name}/0"), in_dim, hidden, rng),
            second: Linear::new(params, &format!("{name}/1"), hidden, out_dim, rng),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.first.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.second.out_dim
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>) -> TensorResult<Var<'t>> {
        let h = self.first.forward(p, x)?.relu();
        self.second.forward(p, h)
    }
}

/// Sum-aggregation GIN layer: `δ(MLP((1 + ε)·H + A·H))` with `ε = 0`.
///
/// `A` may be a weighted (continuous) adjacency. The outer activation `δ`
/// is ReLU, or the identity for the VGAE mean/log-deviation heads.
#[derive(Debug, Clone, PartialEq)]
pub struct GinLayer {
    pub mlp: Mlp,
    pub eps0: f64,
    pub activate: bool,
}

impl GinLayer {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        activate: bool,
        rng: &mut R,
    ) -> Self {
        Self {
            mlp: Mlp::new(params, &format!("{name}/mlp"), in_dim, hidden, out_dim, rng),
            eps0: 0.0,
            activate,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.mlp.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.mlp.out_dim()
    }

    /// `(1 + ε)·H + A·H`, the input to the combine MLP.
    pub fn aggregate<'t>(&self, h: Var<'t>, adj: Var<'t>) -> TensorResult<Var<'t>> {
        let own = if self.eps0 == 0.0 { h } else { h.scale(1.0 + self.eps0) };
        own.add(adj.matmul(h)?)
    }

    pub fn forward<'t>(&self, p: &Bound<'t>, h: Var<'t>, adj: Var<'t>) -> TensorResult<Var<'t>> {
        let width = h.shape().cols;
        if width != self.in_dim() {
            return Err(TensorError::ShapeMismatch {
                op: "gin layer input width",
                lhs: h.shape(),
                rhs: p.var(self.mlp.first.weight).shape(),
            });
        }
        let out = self.mlp.forward(p, self.aggregate(h, adj)?)?;
        Ok(if self.activate { out.relu() } else { out })
    }
}

/// `K` stacked GIN layers, all of output width `agg_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct GinStack {
    pub layers: Vec<GinLayer>,
}

impl GinStack {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        agg_dim: usize,
        depth: usize,
        rng: &mut R,
    ) -> Self {
        let layers = (0..depth)
            .map(|k| {
                let input = if k == 0 { in_dim } else { agg_dim };
                GinLayer::new(params, &format!("{name}/gin{k}"), input, agg_dim, agg_dim, true, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.iter().map(GinLayer::out_dim).sum()
    }

    /// Node features after each layer, starting from `h⁽⁰⁾ = X`.
    pub fn forward<'t>(&self, p: &Bound<'t>, x: Var<'t>, adj: Var<'t>) -> TensorResult<Vec<Var<'t>>> {
        let mut h = x;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            h = layer.forward(p, h, adj)?;
            out.push(h);
        }
        Ok(out)
    }

    /// Per-layer node features concatenated column-wise (`n × K·agg_dim`).
    pub fn node_features<'t>(&self, p: &Bound<'t>, x: Var<'t>, adj: Var<'t>) -> TensorResult<Var<'t>> {
        Var::col_concat(&self.forward(p, x, adj)?)
    }
}

/// Concatenates per-layer node features and takes the column-wise max over nodes.
pub fn graph_readout<'t>(per_layer: &[Var<'t>]) -> TensorResult<Var<'t>> {
    if per_layer.is_empty() {
        return Err(TensorError::Empty { op: "graph_readout" });
    }
    Var::col_concat(per_layer)?.col_max()
}
