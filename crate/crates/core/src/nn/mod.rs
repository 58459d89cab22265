//! GIN layers, graph readout, score heads and the two generator families.
//!
//! Parameters live in a [`ParamSet`] owned by each network. A forward pass
//! first binds the set onto a [`Tape`] (as trainable leaves or as frozen
//! constants) and the layers look their weights up by [`ParamId`].

mod discriminator;
mod generator;
mod layers;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Gradients, Tape, Var};
use crate::tensor::{Tensor, TensorError, TensorResult};

pub use discriminator::{Discriminator, GraphEncoder, HeadActivation, ScoreHead};
pub use generator::{
    adjacency_from_latent, reparameterize, vgae_decode, GeneratedGraph, GeneratorNoise, MlpGenerator,
    PerturbationGenerator, Vgae, VgaeKind,
};
pub use layers::{graph_readout, GinLayer, GinStack, Linear, Mlp};

/// Layer sizes shared by every network in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    /// Number of GIN layers per encoder.
    pub layers: usize,
    /// Width of every GIN layer output.
    pub agg_dim: usize,
    /// Width of generator latents (both the MLP noise and the VGAE codes).
    pub latent_dim: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            layers: 3,
            agg_dim: 16,
            latent_dim: 10,
        }
    }
}

impl Architecture {
    /// Width of the concatenated per-layer node features and of the readout.
    pub fn representation_dim(&self) -> usize {
        self.layers * self.agg_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(usize);

/// Named, ordered collection of parameter tensors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Largest absolute parameter value.
    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().map(Tensor::max_abs).fold(0.0, f64::max)
    }

    pub fn clamp_all(&mut self, bound: f64) {
        for t in &mut self.tensors {
            for v in t.data_mut() {
                *v = v.clamp(-bound, bound);
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    /// Overwrites all values from a flat vector in [`ParamSet::flatten`] order.
    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.scalar_count(), "flat parameter length");
        let mut offset = 0;
        for t in &mut self.tensors {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    /// Copies values from `other`, matching by name and shape.
    pub fn load_from(&mut self, other: &ParamSet) -> TensorResult<()> {
        if other.names != self.names {
            return Err(TensorError::Incompatible("parameter names differ".into()));
        }
        for (mine, theirs) in self.tensors.iter_mut().zip(&other.tensors) {
            if mine.shape() != theirs.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "load parameters",
                    lhs: mine.shape(),
                    rhs: theirs.shape(),
                });
            }
            *mine = theirs.clone();
        }
        Ok(())
    }

    /// Records every parameter on `tape` as a trainable leaf.
    pub fn bind<'t>(&self, tape: &'t Tape) -> Bound<'t> {
        Bound {
            vars: self.tensors.iter().map(|t| tape.param(t.clone())).collect(),
        }
    }

    /// Records every parameter on `tape` as a constant.
    pub fn bind_frozen<'t>(&self, tape: &'t Tape) -> Bound<'t> {
        Bound {
            vars: self.tensors.iter().map(|t| tape.constant(t.clone())).collect(),
        }
    }
}

/// A [`ParamSet`] recorded on a tape.
#[derive(Debug, Clone)]
pub struct Bound<'t> {
    vars: Vec<Var<'t>>,
}

impl<'t> Bound<'t> {
    pub fn var(&self, id: ParamId) -> Var<'t> {
        self.vars[id.0]
    }

    pub fn vars(&self) -> &[Var<'t>] {
        &self.vars
    }

    /// Gradients aligned with the bound set; zeros where the loss did not reach.
    pub fn grads(&self, g: &Gradients) -> Vec<Tensor> {
        self.vars.iter().map(|v| g.get_or_zeros(*v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_and_assign_round_trip() {
        let mut p = ParamSet::new();
        p.register("a", Tensor::from_rows(&[[1.0, 2.0]]));
        p.register("b", Tensor::scalar(3.0));
        let flat = p.flatten();
        assert_eq!(flat, vec![1.0, 2.0, 3.0]);
        p.assign_flat(&[4.0, 5.0, 6.0]);
        assert_eq!(p.get(ParamId(1)).item().unwrap(), 6.0);
        p.clamp_all(4.5);
        assert_eq!(p.flatten(), vec![4.0, 4.5, 4.5]);
    }

    #[test]
    fn frozen_binding_yields_no_gradients() {
        let mut p = ParamSet::new();
        let id = p.register("w", Tensor::scalar(2.0));
        let tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let b = p.bind_frozen(&tape);
        let loss = x.mul(b.var(id)).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(b.grads(&g)[0], Tensor::scalar(0.0));
        assert_eq!(g.get(x).unwrap().item().unwrap(), 2.0);
    }
}
