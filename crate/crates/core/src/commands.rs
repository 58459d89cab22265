//! The pipelines behind each CLI subcommand. Every artifact lands under
//! the configured output directory.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::data::{build_features, make_split, parse_tu_dataset, DataError, Dataset, Split};
use crate::eval::{
    export_artifacts, format_sig, run_trials, write_atomic, EpochAuc, EpochEvaluator, EvalError, TrialReport,
    EMBEDDINGS_FILE, METRICS_FILE, SCORES_FILE,
};
use crate::gradcheck::{run_suite, GradCheckReport};
use crate::synth2d::{
    band_occupancy, boundary_grid, gen_sine_data, off_manifold_auc, train_2d, write_boundary_csv, SynthError,
    BOUNDARY_FILE,
};
use crate::tensor::TensorError;
use crate::train::{
    read_checkpoint, train, write_checkpoint, write_log, NoObserver, TrainError, TrainObserver, CHECKPOINT_FILE,
};

pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const EPOCH_AUC_FILE: &str = "epoch_auc.json";
pub const TRIALS_FILE: &str = "trials.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SIMULATION_FILE: &str = "simulation.json";
pub const GRADCHECK_FILE: &str = "gradcheck.json";

/// λ and γ values of the sensitivity sweep: six decades from 0.001 to 100.
pub const SWEEP_GRID: [f64; 6] = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Eval,
    Trials,
    Sweep,
    Simulate2d,
    Gradcheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Train,
        Command::Eval,
        Command::Trials,
        Command::Sweep,
        Command::Simulate2d,
        Command::Gradcheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Trials => "trials",
            Command::Sweep => "sweep",
            Command::Simulate2d => "simulate-2d",
            Command::Gradcheck => "gradcheck",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("checkpoint expects {expected} input features, dataset has {found}")]
    FeatureMismatch { expected: usize, found: usize },
    #[error("epoch evaluation failed: {0}")]
    EpochEval(String),
    #[error("gradient check failed for: {}", .0.join(", "))]
    GradCheck(Vec<String>),
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

fn eval_is_data(e: &EvalError) -> bool {
    match e {
        EvalError::Data(_) => true,
        EvalError::Trial { source, .. } => eval_is_data(source),
        _ => false,
    }
}

impl CommandError {
    /// 2 for configuration, 3 for dataset and split, 4 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => EXIT_CONFIG,
            CommandError::Data(_) | CommandError::FeatureMismatch { .. } => EXIT_DATA,
            CommandError::Eval(e) if eval_is_data(e) => EXIT_DATA,
            _ => EXIT_RUNTIME,
        }
    }
}

pub type CommandResult<T> = Result<T, CommandError>;

/// What a command wrote, and a short human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn run_command(cmd: Command, cfg: &RunConfig) -> CommandResult<CommandOutput> {
    let out = cfg.out_dir.as_path();
    fs::create_dir_all(out).map_err(|source| CommandError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    match cmd {
        Command::Train => cmd_train(cfg, out),
        Command::Eval => cmd_eval(cfg, out),
        Command::Trials => cmd_trials(cfg, out),
        Command::Sweep => cmd_sweep(cfg, out),
        Command::Simulate2d => cmd_simulate(cfg, out),
        Command::Gradcheck => cmd_gradcheck(cfg, out),
    }
}

/// Reads the configured TU dataset and builds its features.
pub fn load_dataset(cfg: &RunConfig) -> CommandResult<Dataset> {
    let (dir, name) = cfg.dataset()?;
    let ds = parse_tu_dataset(&dir, &name)?;
    Ok(build_features(ds, cfg.features)?)
}

fn split_for(cfg: &RunConfig, ds: &Dataset, seed: u64) -> CommandResult<Split> {
    Ok(make_split(ds, cfg.normal_class.clone(), cfg.train_fraction, seed)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CommandResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn cmd_train(cfg: &RunConfig, out: &Path) -> CommandResult<CommandOutput> {
    let ds = load_dataset(cfg)?;
    let split = split_for(cfg, &ds, cfg.train.seed)?;
    let mut evaluator = cfg
        .eval_every_epoch
        .then(|| EpochEvaluator::new(&split, cfg.train.method.is_adversarial()));
    let observer: &mut dyn TrainObserver = match evaluator.as_mut() {
        Some(e) => e,
        None => &mut NoObserver,
    };
    let run = train(&split, &cfg.train, observer)?;

    let ckpt = out.join(CHECKPOINT_FILE);
    let log = out.join(TRAIN_LOG_FILE);
    write_checkpoint(&run.model, &ckpt)?;
    write_log(&log, &run.log)?;
    let mut files = vec![ckpt, log];
    let last = run.log.last().map(|r| r.objective).unwrap_or(f64::NAN);
    let mut summary = format!(
        "trained {} for {} epochs on {} graphs; final objective {}",
        cfg.train.method,
        run.log.len(),
        split.train.len(),
        format_sig(last)
    );
    if let Some(e) = evaluator {
        if let Some(msg) = e.error {
            return Err(CommandError::EpochEval(msg));
        }
        #[derive(Serialize)]
        struct EpochAucs<'a> {
            history: &'a [EpochAuc],
            best: Option<EpochAuc>,
            last: Option<EpochAuc>,
        }
        let path = out.join(EPOCH_AUC_FILE);
        write_json(
            &path,
            &EpochAucs {
                history: &e.history,
                best: e.best_auc(),
                last: e.final_auc(),
            },
        )?;
        files.push(path);
        if let (Some(b), Some(l)) = (e.best_auc(), e.final_auc()) {
            let _ = write!(
                summary,
                "; test AUC final {} (best {} at epoch {})",
                format_sig(l.auc),
                format_sig(b.auc),
                b.epoch
            );
        }
    }
    Ok(CommandOutput { files, summary })
}

fn cmd_eval(cfg: &RunConfig, out: &Path) -> CommandResult<CommandOutput> {
    let model = read_checkpoint(cfg.checkpoint_path())?;
    let ds = load_dataset(cfg)?;
    let found = ds.feature_dim;
    if found != model.discriminator.input_dim {
        return Err(CommandError::FeatureMismatch {
            expected: model.discriminator.input_dim,
            found,
        });
    }
    let split = split_for(cfg, &ds, cfg.train.seed)?;
    let rule = cfg
        .threshold
        .unwrap_or_else(|| crate::eval::ThresholdRule::default_for(model.method.is_adversarial()));
    let report = export_artifacts(&model, &split, rule, cfg.train.seed, cfg.train.exec, out)?;
    let m = report.metrics();
    Ok(CommandOutput {
        files: [EMBEDDINGS_FILE, SCORES_FILE, METRICS_FILE]
            .iter()
            .map(|f| out.join(f))
            .collect(),
        summary: format!(
            "{} on {} test graphs ({} anomalous): AUC {} AUCPR {} F1 {} recall {}",
            model.method,
            m.n_test,
            m.n_anomalous,
            format_sig(m.auc),
            format_sig(m.aucpr),
            format_sig(m.f1),
            format_sig(m.recall)
        ),
    })
}

fn trials_at(cfg: &RunConfig, ds: &Dataset, train_cfg: &crate::train::TrainConfig) -> CommandResult<TrialReport> {
    let factory = |seed| make_split(ds, cfg.normal_class.clone(), cfg.train_fraction, seed);
    Ok(run_trials(factory, train_cfg, cfg.trials, cfg.threshold)?)
}

fn cmd_trials(cfg: &RunConfig, out: &Path) -> CommandResult<CommandOutput> {
    let ds = load_dataset(cfg)?;
    let report = trials_at(cfg, &ds, &cfg.train)?;
    let path = out.join(TRIALS_FILE);
    write_json(&path, &report)?;
    Ok(CommandOutput {
        files: vec![path],
        summary: format!(
            "{} over {} trials: AUC {} ± {}",
            report.method,
            report.trials.len(),
            format_sig(report.auc.mean),
            format_sig(report.auc.std)
        ),
    })
}

fn cmd_sweep(cfg: &RunConfig, out: &Path) -> CommandResult<CommandOutput> {
    let ds = load_dataset(cfg)?;
    let mut csv = String::from("lambda,gamma,mean_auc,std_auc\n");
    let mut best: Option<(f64, f64, f64)> = None;
    for &lambda in &SWEEP_GRID {
        for &gamma in &SWEEP_GRID {
            let train_cfg = crate::train::TrainConfig {
                lambda,
                gamma,
                ..cfg.train.clone()
            };
            let r = trials_at(cfg, &ds, &train_cfg)?;
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                format_sig(lambda),
                format_sig(gamma),
                format_sig(r.auc.mean),
                format_sig(r.auc.std)
            );
            if best.is_none_or(|b| r.auc.mean > b.2) {
                best = Some((lambda, gamma, r.auc.mean));
            }
        }
    }
    let path = out.join(SWEEP_FILE);
    write_atomic(&path, csv.as_bytes())?;
    let (l, g, a) = best.expect("grid is non-empty");
    Ok(CommandOutput {
        files: vec![path],
        summary: format!(
            "{} cells; best mean AUC {} at lambda={} gamma={}",
            SWEEP_GRID.len() * SWEEP_GRID.len(),
            format_sig(a),
            format_sig(l),
            format_sig(g)
        ),
    })
}

/// Summary written next to `boundary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub off_manifold_auc: f64,
    /// Fraction of in-band grid points scoring below 0.5.
    pub low_score_fraction_in_band: f64,
    /// Fraction of off-band grid points scoring below 0.5.
    pub low_score_fraction_off_band: f64,
    pub final_loss: f64,
}

fn cmd_simulate(cfg: &RunConfig, out: &Path) -> CommandResult<CommandOutput> {
    let sim = &cfg.sim;
    let points = gen_sine_data(&sim.data)?;
    let run = train_2d(&points, &sim.train)?;
    let grid = boundary_grid(
        &run.classifier,
        (sim.data.z_lo, sim.data.z_hi),
        sim.x_range,
        sim.resolution,
        cfg.train.exec,
    )?;
    let boundary = out.join(BOUNDARY_FILE);
    write_boundary_csv(&grid, &boundary)?;
    // Held-out evaluation data uses the next seed.
    let auc = off_manifold_auc(&run.classifier, &sim.data, sim.data.seed.wrapping_add(1))?;
    let (inside, outside) = band_occupancy(&grid, sim.data.a);
    let summary = SimulationSummary {
        off_manifold_auc: auc,
        low_score_fraction_in_band: inside,
        low_score_fraction_off_band: outside,
        final_loss: run.losses.last().map(|l| l.total).unwrap_or(f64::NAN),
    };
    let path = out.join(SIMULATION_FILE);
    write_json(&path, &summary)?;
    Ok(CommandOutput {
        files: vec![boundary, path],
        summary: format!(
            "off-manifold AUC {}; low scores on {} of in-band and {} of off-band grid points",
            format_sig(auc),
            format_sig(inside),
            format_sig(outside)
        ),
    })
}

fn cmd_gradcheck(cfg: &RunConfig, out: &Path) -> CommandResult<CommandOutput> {
    let reports = run_suite(cfg.gradcheck_tol, cfg.train.seed)?;
    #[derive(Serialize)]
    struct Suite<'a> {
        passed: bool,
        tol: f64,
        checks: &'a [GradCheckReport],
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    let path = out.join(GRADCHECK_FILE);
    write_json(
        &path,
        &Suite {
            passed: failed.is_empty(),
            tol: cfg.gradcheck_tol,
            checks: &reports,
        },
    )?;
    if !failed.is_empty() {
        return Err(CommandError::GradCheck(failed));
    }
    let worst = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    Ok(CommandOutput {
        files: vec![path],
        summary: format!(
            "{} checks passed; worst relative error {}",
            reports.len(),
            format_sig(worst)
        ),
    })
}
