//! Flat key/value run configuration.
//!
//! Values come from three layers, later ones winning: the config file, the
//! `SDGG_SEED` environment variable (seed only), and `key=value` overrides.
//! Every key is validated before any command starts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

use crate::data::{FeatureMode, FeatureSpec, NormalClass};
use crate::eval::ThresholdRule;
use crate::exec::Exec;
use crate::synth2d::{Hidden, SineConfig, Train2dConfig};
use crate::train::{Method, OptimizerKind, TrainConfig};

pub const SEED_ENV: &str = "SDGG_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} is not valid key/value text: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {message}")]
    Type { key: String, message: String },
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("override `{0}` is not of the form key=value")]
    Override(String),
    #[error("{SEED_ENV}={value:?} is not a non-negative integer")]
    SeedEnv { value: String },
    #[error("no dataset configured: set `dataset_dir` (and optionally `dataset`)")]
    MissingDataset,
}

pub type ConfigResult<T> = Result<T, ConfigError>;

/// Grid and sampling settings of the 2-D sine simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub data: SineConfig,
    pub train: Train2dConfig,
    /// Grid points per axis for `boundary.csv`.
    pub resolution: usize,
    pub x_range: (f64, f64),
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            data: SineConfig::default(),
            train: Train2dConfig::default(),
            resolution: 100,
            x_range: (-3.0, 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Directory holding the TU-format files.
    pub dataset_dir: Option<PathBuf>,
    /// File prefix; defaults to the directory's last component.
    pub dataset: Option<String>,
    pub normal_class: NormalClass,
    pub train_fraction: f64,
    pub train: TrainConfig,
    pub trials: usize,
    pub features: FeatureSpec,
    pub eval_every_epoch: bool,
    /// `None` picks the method's default rule.
    pub threshold: Option<ThresholdRule>,
    pub out_dir: PathBuf,
    /// Checkpoint read by `eval`; defaults to `checkpoint.json` under `out_dir`.
    pub checkpoint: Option<PathBuf>,
    pub sim: SimConfig,
    pub gradcheck_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_dir: None,
            dataset: None,
            normal_class: NormalClass::Single(0),
            train_fraction: 0.8,
            train: TrainConfig::default(),
            trials: 3,
            features: FeatureSpec::one_hot(),
            eval_every_epoch: false,
            threshold: None,
            out_dir: PathBuf::from("out"),
            checkpoint: None,
            sim: SimConfig::default(),
            gradcheck_tol: 1e-4,
        }
    }
}

impl RunConfig {
    /// Dataset directory and file prefix.
    pub fn dataset(&self) -> ConfigResult<(PathBuf, String)> {
        let dir = self.dataset_dir.clone().ok_or(ConfigError::MissingDataset)?;
        let name = match &self.dataset {
            Some(n) => n.clone(),
            None => dir
                .file_name()
                .and_then(|s| s.to_str())
                .map(str::to_string)
                .ok_or(ConfigError::MissingDataset)?,
        };
        Ok((dir, name))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join(crate::train::CHECKPOINT_FILE))
    }

    pub fn threshold_rule(&self) -> ThresholdRule {
        self.threshold
            .unwrap_or_else(|| ThresholdRule::default_for(self.train.method.is_adversarial()))
    }

    /// Overlays `table` on the defaults, rejecting unknown keys and values
    /// of the wrong type or outside their domain.
    pub fn from_table(table: Table) -> ConfigResult<Self> {
        let mut c = Self::default();
        let mut threshold_fixed: Option<f64> = None;
        let mut threshold_quantile: Option<f64> = None;
        for (key, value) in table {
            let k = key.as_str();
            match k {
                "dataset_dir" => c.dataset_dir = Some(get::<PathBuf>(k, value)?),
                "dataset" => c.dataset = Some(get(k, value)?),
                "normal_class" => c.normal_class = get(k, value)?,
                "train_fraction" => c.train_fraction = get(k, value)?,
                "method" => c.train.method = parse_str::<Method>(k, value)?,
                "lambda" => c.train.lambda = get(k, value)?,
                "gamma" | "beta" => c.train.gamma = get(k, value)?,
                "clip" => c.train.clip = get(k, value)?,
                "batch_size" => c.train.batch_size = get(k, value)?,
                "lr" => c.train.lr = get(k, value)?,
                "epochs" => c.train.epochs = get(k, value)?,
                "optimizer" => c.train.optimizer = Some(get::<OptimizerKind>(k, value)?),
                "seed" => c.train.seed = get(k, value)?,
                "deterministic_generator" => c.train.deterministic_generator = get(k, value)?,
                "layers" => c.train.arch.layers = get(k, value)?,
                "agg_dim" => c.train.arch.agg_dim = get(k, value)?,
                "latent_dim" => c.train.arch.latent_dim = get(k, value)?,
                "exec" => c.train.exec = get::<Exec>(k, value)?,
                "trials" => c.trials = get(k, value)?,
                "features" => c.features.mode = get::<FeatureMode>(k, value)?,
                "degree_cap" => c.features.degree_cap = get(k, value)?,
                "eval_every_epoch" => c.eval_every_epoch = get(k, value)?,
                "threshold" => threshold_fixed = Some(get(k, value)?),
                "threshold_quantile" => threshold_quantile = Some(get(k, value)?),
                "out_dir" => c.out_dir = get(k, value)?,
                "checkpoint" => c.checkpoint = Some(get(k, value)?),
                "sim_a" => c.sim.data.a = get(k, value)?,
                "sim_samples" => c.sim.data.n_samples = get(k, value)?,
                "sim_z_lo" => c.sim.data.z_lo = get(k, value)?,
                "sim_z_hi" => c.sim.data.z_hi = get(k, value)?,
                "sim_x_lo" => c.sim.x_range.0 = get(k, value)?,
                "sim_x_hi" => c.sim.x_range.1 = get(k, value)?,
                "sim_lambda" => c.sim.train.lambda = get(k, value)?,
                "sim_gamma" => c.sim.train.gamma = get(k, value)?,
                "sim_epochs" => c.sim.train.epochs = get(k, value)?,
                "sim_lr" => c.sim.train.lr = get(k, value)?,
                "sim_batch_size" => c.sim.train.batch_size = get(k, value)?,
                "sim_hidden" => c.sim.train.hidden = get::<Hidden>(k, value)?,
                "sim_resolution" => c.sim.resolution = get(k, value)?,
                "gradcheck_tol" => c.gradcheck_tol = get(k, value)?,
                _ => return Err(ConfigError::UnknownKey(key)),
            }
        }
        c.threshold = match (threshold_fixed, threshold_quantile) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "threshold",
                    "set either `threshold` or `threshold_quantile`, not both",
                ));
            }
            (Some(t), None) => Some(ThresholdRule::Fixed(t)),
            (None, Some(q)) => Some(ThresholdRule::TrainQuantile(q)),
            (None, None) => None,
        };
        // The simulation shares the run seed.
        c.sim.data.seed = c.train.seed;
        c.sim.train.seed = c.train.seed;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> ConfigResult<()> {
        if let Err(e) = self.train.validate() {
            return Err(invalid("training", e.to_string()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(
                "train_fraction",
                format!("must lie in (0, 1), got {}", self.train_fraction),
            ));
        }
        if let NormalClass::Many(cs) = &self.normal_class {
            if cs.is_empty() {
                return Err(invalid("normal_class", "list must not be empty"));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.features.mode == FeatureMode::DegreeOneHot && self.features.degree_cap == 0 {
            return Err(invalid("degree_cap", "must be at least 1"));
        }
        if let Some(rule) = self.threshold {
            if let Err(e) = rule.validate() {
                return Err(invalid("threshold", e.to_string()));
            }
        }
        if let Err(e) = self.sim.data.validate() {
            return Err(invalid("sim", e.to_string()));
        }
        let t = &self.sim.train;
        if !(t.lambda >= 0.0 && t.gamma >= 0.0 && t.lr > 0.0 && t.epochs > 0 && t.batch_size > 0) {
            return Err(invalid(
                "sim",
                "need sim_lambda, sim_gamma >= 0 and sim_lr, sim_epochs, sim_batch_size > 0",
            ));
        }
        if self.sim.resolution < 2 {
            return Err(invalid("sim_resolution", "must be at least 2"));
        }
        if !(self.sim.x_range.0 < self.sim.x_range.1) {
            return Err(invalid("sim_x_lo", "need sim_x_lo < sim_x_hi"));
        }
        if !(self.gradcheck_tol > 0.0 && self.gradcheck_tol.is_finite()) {
            return Err(invalid("gradcheck_tol", "must be positive"));
        }
        Ok(())
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

fn get<T: DeserializeOwned>(key: &str, value: Value) -> ConfigResult<T> {
    value.try_into().map_err(|e: toml::de::Error| ConfigError::Type {
        key: key.to_string(),
        message: e.message().trim().to_string(),
    })
}

fn parse_str<T: std::str::FromStr<Err = String>>(key: &str, value: Value) -> ConfigResult<T> {
    let s: String = get(key, value)?;
    s.parse().map_err(|message| ConfigError::Type {
        key: key.to_string(),
        message,
    })
}

/// `key=value`, with the value read as a TOML value when it parses as one
/// and as a bare string otherwise.
pub fn parse_override(s: &str) -> ConfigResult<(String, Value)> {
    let (key, raw) = s.split_once('=').ok_or_else(|| ConfigError::Override(s.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(s.to_string()));
    }
    let raw = raw.trim();
    let value = toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Reads `path` (or starts empty when `None`), then applies `SDGG_SEED` from
/// `env_seed` and finally `overrides`.
pub fn parse_config_with_env(
    path: Option<&Path>,
    overrides: &[String],
    env_seed: Option<&str>,
) -> ConfigResult<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            toml::from_str::<Table>(&text).map_err(|e| ConfigError::Syntax {
                path: p.to_path_buf(),
                message: e.message().trim().to_string(),
            })?
        }
        None => Table::new(),
    };
    if let Some((key, v)) = table.iter().find(|(_, v)| v.is_table()) {
        return Err(ConfigError::Type {
            key: key.clone(),
            message: format!("sections are not supported, got {v}"),
        });
    }
    if let Some(raw) = env_seed {
        let seed: u64 = raw
            .trim()
            .parse()
            .map_err(|_| ConfigError::SeedEnv { value: raw.to_string() })?;
        let seed = i64::try_from(seed).map_err(|_| ConfigError::SeedEnv { value: raw.to_string() })?;
        table.insert("seed".into(), Value::Integer(seed));
    }
    for o in overrides {
        let (k, v) = parse_override(o)?;
        table.insert(k, v);
    }
    RunConfig::from_table(table)
}

/// [`parse_config_with_env`] reading `SDGG_SEED` from the process environment.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> ConfigResult<RunConfig> {
    let env = std::env::var(SEED_ENV).ok();
    parse_config_with_env(path, overrides, env.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_text(text: &str, overrides: &[&str], env: Option<&str>) -> ConfigResult<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        fs::write(&p, text).unwrap();
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        parse_config_with_env(Some(&p), &overrides, env)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = from_text("", &[], None).unwrap();
        assert_eq!(c, RunConfig::default());
        let t = &c.train;
        assert_eq!((t.lambda, t.gamma, t.clip, t.lr), (1.0, 1e-5, 0.01, 1e-3));
        assert_eq!((t.epochs, t.batch_size), (300, 4));
        assert_eq!((t.arch.layers, t.arch.agg_dim, t.arch.latent_dim), (3, 16, 10));
    }

    #[test]
    fn single_override_changes_only_its_key() {
        let c = from_text("", &["lambda=10"], None).unwrap();
        let mut expected = RunConfig::default();
        expected.train.lambda = 10.0;
        assert_eq!(c, expected);
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let e = from_text("", &["epochs=abc"], None).unwrap_err();
        assert!(matches!(&e, ConfigError::Type { key, .. } if key == "epochs"), "{e}");
        assert!(e.to_string().contains("epochs"));
        let e = from_text("epochs = 1.5\n", &[], None).unwrap_err();
        assert!(matches!(&e, ConfigError::Type { key, .. } if key == "epochs"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = from_text("lamda = 1\n", &[], None).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(k) if k == "lamda"));
        let e = from_text("", &["nope=1"], None).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey(k) if k == "nope"));
    }

    #[test]
    fn file_values_and_layer_precedence() {
        let text = "method = \"atii\"\nseed = 5\nnormal_class = [0, 2]\ndataset_dir = \"data/MUTAG\"\n";
        let c = from_text(text, &[], None).unwrap();
        assert_eq!(c.train.method, Method::Atii);
        assert_eq!(c.train.seed, 5);
        assert_eq!(c.normal_class, NormalClass::Many(vec![0, 2]));
        assert_eq!(c.dataset().unwrap(), (PathBuf::from("data/MUTAG"), "MUTAG".to_string()));

        assert_eq!(from_text(text, &[], Some("9")).unwrap().train.seed, 9);
        assert_eq!(from_text(text, &["seed=11"], Some("9")).unwrap().train.seed, 11);
        assert!(matches!(
            from_text(text, &[], Some("x")),
            Err(ConfigError::SeedEnv { .. })
        ));
    }

    #[test]
    fn enum_and_string_values() {
        let c = from_text(
            "",
            &[
                "optimizer=adam",
                "exec=sequential",
                "features=degree-one-hot",
                "sim_hidden=tanh",
            ],
            None,
        )
        .unwrap();
        assert_eq!(c.train.optimizer, Some(OptimizerKind::Adam));
        assert_eq!(c.train.exec, Exec::Sequential);
        assert_eq!(c.features.mode, FeatureMode::DegreeOneHot);
        assert_eq!(c.sim.train.hidden, Hidden::Tanh);
        assert!(matches!(from_text("", &["method=gan"], None), Err(ConfigError::Type { key, .. }) if key == "method"));
    }

    #[test]
    fn thresholds() {
        assert_eq!(
            from_text("", &[], None).unwrap().threshold_rule(),
            ThresholdRule::Fixed(0.5)
        );
        let c = from_text("method = \"ati\"\n", &[], None).unwrap();
        assert_eq!(c.threshold_rule(), ThresholdRule::TrainQuantile(0.95));
        let c = from_text("", &["threshold_quantile=0.9"], None).unwrap();
        assert_eq!(c.threshold, Some(ThresholdRule::TrainQuantile(0.9)));
        assert!(from_text("", &["threshold=0.3", "threshold_quantile=0.9"], None).is_err());
        assert!(from_text("", &["threshold_quantile=1.5"], None).is_err());
    }

    #[test]
    fn domain_errors() {
        for bad in [
            "epochs=0",
            "batch_size=0",
            "lambda=-1",
            "train_fraction=1",
            "trials=0",
            "normal_class=[]",
            "sim_resolution=1",
        ] {
            assert!(
                matches!(from_text("", &[bad], None), Err(ConfigError::Invalid { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            from_text("lambda = = 1\n", &[], None),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            from_text("[section]\nx = 1\n", &[], None),
            Err(ConfigError::Type { .. })
        ));
        assert!(matches!(
            from_text("", &["lambda"], None),
            Err(ConfigError::Override(_))
        ));
        assert!(matches!(
            RunConfig::default().dataset(),
            Err(ConfigError::MissingDataset)
        ));
        assert!(matches!(
            parse_config_with_env(Some(Path::new("/nonexistent/run.toml")), &[], None),
            Err(ConfigError::Io { .. })
        ));
    }

    #[test]
    fn override_values_fall_back_to_strings() {
        assert_eq!(parse_override("a=1").unwrap().1, Value::Integer(1));
        assert_eq!(parse_override("a = true").unwrap().1, Value::Boolean(true));
        assert_eq!(parse_override("a=nat").unwrap().1, Value::String("nat".into()));
        assert_eq!(parse_override("a=\"x y\"").unwrap().1, Value::String("x y".into()));
    }
}
