use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{evaluate, EvalError, EvalResult, ScoreReport, ThresholdRule};
use crate::data::Split;
use crate::exec::Exec;
use crate::nn::GeneratorNoise;
use crate::tensor::Tensor;
use crate::train::{GeneratorModel, TrainedModel};

pub const EMBEDDINGS_FILE: &str = "embeddings.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    TrainNormal,
    TestNormal,
    TestAnomalous,
    Generated,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::TrainNormal => "train-normal",
            Role::TestNormal => "test-normal",
            Role::TestAnomalous => "test-anomalous",
            Role::Generated => "generated",
        }
    }
}

/// `v` with nine significant digits, in fixed notation for exponents
/// `-4..9` and scientific otherwise, trailing zeros removed.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..9).contains(&exp) {
        trim(&format!("{v:.*}", (8 - exp) as usize))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// Writes via a sibling temporary file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> EvalResult<()> {
    let io = |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

struct Row {
    id: usize,
    role: Role,
    x: Tensor,
    adj: Tensor,
}

/// Writes `embeddings.csv`, `scores.csv` and `metrics.json` to `out_dir`.
///
/// Rows cover every split member once, plus for perturbation generators one
/// generated graph per training graph, sharing its source's id. Generator
/// noise is drawn from `seed`.
pub fn export_artifacts(
    model: &TrainedModel,
    split: &Split,
    rule: ThresholdRule,
    seed: u64,
    exec: Exec,
    out_dir: impl AsRef<Path>,
) -> EvalResult<ScoreReport> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|source| EvalError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut rows: Vec<Row> = Vec::new();
    for m in &split.train {
        rows.push(Row {
            id: m.id,
            role: Role::TrainNormal,
            x: m.graph.features.clone(),
            adj: m.graph.adjacency.clone(),
        });
    }
    for m in &split.test {
        rows.push(Row {
            id: m.id,
            role: if m.anomalous {
                Role::TestAnomalous
            } else {
                Role::TestNormal
            },
            x: m.graph.features.clone(),
            adj: m.graph.adjacency.clone(),
        });
    }
    if let GeneratorModel::Perturbation(gen) = &model.generator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<_> = split
            .train
            .iter()
            .map(|m| GeneratorNoise::sample(m.graph.node_count(), gen.arch.latent_dim, &mut rng))
            .collect();
        let generated = exec.map_range(split.train.len(), |i| {
            let g = &split.train[i].graph;
            gen.sample(&g.features, &g.adjacency, &noise[i])
        });
        for (m, g) in split.train.iter().zip(generated) {
            let (x, adj) = g?;
            rows.push(Row {
                id: m.id,
                role: Role::Generated,
                x,
                adj,
            });
        }
    }

    let per_row = exec.map(&rows, |r| -> EvalResult<(Vec<f64>, f64)> {
        let e = model.discriminator.embedding_tensors(&r.x, &r.adj)?;
        let s = model.anomaly_score_tensors(&r.x, &r.adj)?;
        Ok((e, s))
    });
    let per_row = per_row.into_iter().collect::<EvalResult<Vec<_>>>()?;

    let width = model.arch().representation_dim();
    let mut emb = String::from("id,role");
    for k in 0..width {
        let _ = write!(emb, ",e{k}");
    }
    emb.push('\n');
    let mut scores = String::from("id,role,score\n");
    for (r, (e, s)) in rows.iter().zip(&per_row) {
        let _ = write!(emb, "{},{}", r.id, r.role.as_str());
        for v in e {
            let _ = write!(emb, ",{}", format_sig(*v));
        }
        emb.push('\n');
        let _ = writeln!(scores, "{},{},{}", r.id, r.role.as_str(), format_sig(*s));
    }

    let report = evaluate(model, split, rule, exec)?;
    let metrics = serde_json::to_string_pretty(&report.metrics())?;
    write_atomic(&out_dir.join(EMBEDDINGS_FILE), emb.as_bytes())?;
    write_atomic(&out_dir.join(SCORES_FILE), scores.as_bytes())?;
    write_atomic(&out_dir.join(METRICS_FILE), metrics.as_bytes())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(-2.0 / 3.0), "-0.666666667");
        assert_eq!(format_sig(123456789.4), "123456789");
        assert_eq!(format_sig(1234567890.0), "1.23456789e9");
        assert_eq!(format_sig(0.000123456789123), "0.000123456789");
        assert_eq!(format_sig(1.5e-7), "1.5e-7");
        assert_eq!(format_sig(9.999999999), "10");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
