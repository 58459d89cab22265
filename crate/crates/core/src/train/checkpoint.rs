//! Single-document JSON checkpoints with parameters keyed by block path.
//!
//! Floats are written in shortest round-trip form, so a reloaded model
//! reproduces scores bit-exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeneratorModel, Method, TrainError, TrainResult, TrainedModel};
use crate::nn::{Architecture, ParamSet};
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "sdgg-checkpoint/1";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
const DISCRIMINATOR_PREFIX: &str = "discriminator/";
const GENERATOR_PREFIX: &str = "generator/";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamArray {
    /// `[rows, cols]`.
    pub shape: [usize; 2],
    /// Row-major values.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub method: Method,
    pub input_dim: usize,
    pub arch: Architecture,
    pub deterministic_generator: bool,
    pub params: BTreeMap<String, ParamArray>,
}

fn insert_all(out: &mut BTreeMap<String, ParamArray>, prefix: &str, set: &ParamSet) {
    for (name, t) in set.iter() {
        out.insert(
            format!("{prefix}{name}"),
            ParamArray {
                shape: [t.rows(), t.cols()],
                values: t.data().to_vec(),
            },
        );
    }
}

fn load_all(params: &BTreeMap<String, ParamArray>, prefix: &str, set: &mut ParamSet) -> TrainResult<()> {
    let names = set.names().to_vec();
    for (name, slot) in names.iter().zip(set.tensors_mut()) {
        let key = format!("{prefix}{name}");
        let arr = params
            .get(&key)
            .ok_or_else(|| TrainError::Checkpoint(format!("missing parameter {key}")))?;
        if arr.shape != [slot.rows(), slot.cols()] {
            return Err(TrainError::Checkpoint(format!(
                "{key}: stored shape {:?}, model expects {}x{}",
                arr.shape,
                slot.rows(),
                slot.cols()
            )));
        }
        *slot = Tensor::from_vec(arr.shape[0], arr.shape[1], arr.values.clone())
            .map_err(|e| TrainError::Checkpoint(format!("{key}: {e}")))?;
    }
    Ok(())
}

impl Checkpoint {
    pub fn from_model(model: &TrainedModel) -> Self {
        let mut params = BTreeMap::new();
        insert_all(&mut params, DISCRIMINATOR_PREFIX, &model.discriminator.params);
        insert_all(&mut params, GENERATOR_PREFIX, model.generator.params());
        let deterministic_generator = match &model.generator {
            GeneratorModel::Perturbation(g) => g.deterministic,
            GeneratorModel::Mlp(_) => false,
        };
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            method: model.method,
            input_dim: model.input_dim(),
            arch: model.arch(),
            deterministic_generator,
            params,
        }
    }

    pub fn to_model(&self) -> TrainResult<TrainedModel> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(TrainError::Checkpoint(format!("unsupported format {:?}", self.format)));
        }
        // Initial values are overwritten below; the seed only fixes the layout.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = TrainedModel::fresh(
            self.method,
            self.input_dim,
            self.arch,
            self.deterministic_generator,
            &mut rng,
        );
        load_all(&self.params, DISCRIMINATOR_PREFIX, &mut model.discriminator.params)?;
        load_all(&self.params, GENERATOR_PREFIX, model.generator.params_mut())?;
        let expected = model.discriminator.params.len() + model.generator.params().len();
        if self.params.len() != expected {
            return Err(TrainError::Checkpoint(format!(
                "{} stored parameters, model has {expected}",
                self.params.len()
            )));
        }
        Ok(model)
    }
}

/// Serializes to `path` via a temporary file and rename.
pub fn write_checkpoint(model: &TrainedModel, path: impl AsRef<Path>) -> TrainResult<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&Checkpoint::from_model(model))?;
    let tmp = path.with_extension("json.tmp");
    let io = |source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> TrainResult<TrainedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let ckpt: Checkpoint = serde_json::from_str(&text)?;
    ckpt.to_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Graph;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Graph::from_edges(
            3,
            &[(0, 1), (1, 2)],
            Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]),
            0,
        );
        let dir = tempfile::tempdir().unwrap();
        for method in Method::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let model = TrainedModel::fresh(method, 2, Architecture::default(), false, &mut rng);
            let path = dir.path().join(format!("{method}.json"));
            write_checkpoint(&model, &path).unwrap();
            let back = read_checkpoint(&path).unwrap();
            assert_eq!(back, model);
            assert_eq!(
                back.anomaly_score(&g).unwrap().to_bits(),
                model.anomaly_score(&g).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn missing_and_misshapen_parameters_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = TrainedModel::fresh(Method::Nat, 2, Architecture::default(), false, &mut rng);
        let ckpt = Checkpoint::from_model(&model);

        let mut missing = ckpt.clone();
        let first = missing.params.keys().next().unwrap().clone();
        missing.params.remove(&first);
        assert!(matches!(missing.to_model(), Err(TrainError::Checkpoint(_))));

        let mut bad = ckpt.clone();
        bad.params.get_mut(&first).unwrap().shape = [1, 1];
        assert!(bad.to_model().is_err());

        let mut extra = ckpt;
        extra.params.insert(
            "stray".into(),
            ParamArray {
                shape: [1, 1],
                values: vec![0.0],
            },
        );
        assert!(extra.to_model().is_err());
    }
}
