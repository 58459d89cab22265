use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{ati_generator_objective, atii_generator_objective, critic_objective, nat_objective};
use super::{
    EpochRecord, GeneratorModel, LossComponents, LossWeights, Method, Optimizer, TrainConfig, TrainError,
    TrainObserver, TrainResult, TrainRun, TrainedModel,
};
use crate::autodiff::{Tape, Var};
use crate::data::{Graph, Split};
use crate::exec::Exec;
use crate::nn::{Bound, Discriminator, GeneratorNoise, MlpGenerator, ParamSet, PerturbationGenerator};
use crate::tensor::{Tensor, TensorResult};

/// Mean-over-batch gradients for every set bound by `per_graph`, plus the
/// mean loss components.
///
/// `per_graph(i, tape)` builds graph `i`'s objective on its own tape and
/// returns the bindings whose gradients are wanted. Gradients are summed in
/// index order whatever the execution mode.
pub fn batch_gradients<F>(exec: Exec, count: usize, per_graph: F) -> TensorResult<(Vec<Vec<Tensor>>, LossComponents)>
where
    F: for<'t> Fn(usize, &'t Tape) -> TensorResult<(Var<'t>, Vec<Bound<'t>>, LossComponents)> + Sync + Send,
{
    let scale = 1.0 / count as f64;
    let results = exec.map_range(count, |i| -> TensorResult<(Vec<Vec<Tensor>>, LossComponents)> {
        let tape = Tape::new();
        let (loss, bound, components) = per_graph(i, &tape)?;
        let grads = tape.backward(loss.scale(scale))?;
        Ok((
            bound.iter().map(|b| b.grads(&grads)).collect(),
            components.scaled(scale),
        ))
    });

    let mut total: Option<Vec<Vec<Tensor>>> = None;
    let mut components = LossComponents::default();
    for r in results {
        let (grads, c) = r?;
        components.accumulate(&c);
        match total.as_mut() {
            None => total = Some(grads),
            Some(acc) => {
                for (set_acc, set) in acc.iter_mut().zip(&grads) {
                    for (a, g) in set_acc.iter_mut().zip(set) {
                        a.add_assign(g);
                    }
                }
            }
        }
    }
    Ok((total.unwrap_or_default(), components))
}

/// Mean-over-batch gradient of the perturbation generator's adversarial objective.
pub fn atii_generator_gradient(
    critic: &Discriminator,
    gen: &PerturbationGenerator,
    batch: &[&Graph],
    noise: &[GeneratorNoise],
    w: LossWeights,
    exec: Exec,
) -> TensorResult<(Vec<Tensor>, LossComponents)> {
    let (mut grads, c) = batch_gradients(exec, batch.len(), |i, tape| {
        let pc = critic.params.bind_frozen(tape);
        let pg = gen.params.bind(tape);
        let g = batch[i];
        let x = tape.constant(g.features.clone());
        let adj = tape.constant(g.adjacency.clone());
        let (loss, c) = atii_generator_objective(critic, &pc, gen, &pg, x, adj, &noise[i], w)?;
        Ok((loss, vec![pg], c))
    })?;
    Ok((grads.pop().unwrap_or_default(), c))
}

/// Trains `split.train` with the method named in `cfg`.
pub fn train(split: &Split, cfg: &TrainConfig, observer: &mut dyn TrainObserver) -> TrainResult<TrainRun> {
    let graphs: Vec<&Graph> = split.train.iter().map(|m| &m.graph).collect();
    train_graphs(&graphs, cfg, observer)
}

fn require(cfg: &TrainConfig, method: Method) -> TrainResult<()> {
    if cfg.method != method {
        return Err(TrainError::InvalidConfig(format!(
            "configuration is for {} but {method} training was requested",
            cfg.method
        )));
    }
    Ok(())
}

pub fn train_ati(split: &Split, cfg: &TrainConfig, observer: &mut dyn TrainObserver) -> TrainResult<TrainRun> {
    require(cfg, Method::Ati)?;
    train(split, cfg, observer)
}

pub fn train_atii(split: &Split, cfg: &TrainConfig, observer: &mut dyn TrainObserver) -> TrainResult<TrainRun> {
    require(cfg, Method::Atii)?;
    train(split, cfg, observer)
}

pub fn train_nat(split: &Split, cfg: &TrainConfig, observer: &mut dyn TrainObserver) -> TrainResult<TrainRun> {
    require(cfg, Method::Nat)?;
    train(split, cfg, observer)
}

/// Trains on an explicit list of normal graphs.
pub fn train_graphs(graphs: &[&Graph], cfg: &TrainConfig, observer: &mut dyn TrainObserver) -> TrainResult<TrainRun> {
    cfg.validate()?;
    let first = graphs.first().ok_or(TrainError::EmptyTrainingSet)?;
    let input_dim = first.feature_dim();
    if let Some(g) = graphs.iter().find(|g| g.feature_dim() != input_dim) {
        return Err(TrainError::InvalidConfig(format!(
            "training graphs disagree on feature width ({} vs {input_dim})",
            g.feature_dim()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = TrainedModel::fresh(cfg.method, input_dim, cfg.arch, cfg.deterministic_generator, &mut rng);
    let TrainedModel {
        method,
        discriminator,
        generator,
    } = model;

    let mut loop_state = Loop {
        graphs,
        cfg,
        rng,
        critic_opt: Optimizer::new(cfg.optimizer_kind(), cfg.lr, &discriminator.params),
        gen_opt: Optimizer::new(cfg.optimizer_kind(), cfg.lr, generator.params()),
        discriminator,
        log: Vec::with_capacity(cfg.epochs),
    };

    let generator = match generator {
        GeneratorModel::Mlp(mut g) => {
            loop_state.run(observer, |s, batch| s.ati_batch(&mut g, batch))?;
            GeneratorModel::Mlp(g)
        }
        GeneratorModel::Perturbation(mut g) => {
            match method {
                Method::Atii => loop_state.run(observer, |s, batch| s.atii_batch(&mut g, batch))?,
                _ => loop_state.run(observer, |s, batch| s.nat_batch(&mut g, batch))?,
            }
            GeneratorModel::Perturbation(g)
        }
    };

    Ok(TrainRun {
        model: TrainedModel {
            method,
            discriminator: loop_state.discriminator,
            generator,
        },
        log: loop_state.log,
    })
}

/// Per-batch losses: (generator or joint step, critic step if any).
type BatchLoss = (LossComponents, Option<LossComponents>);

struct Loop<'a> {
    graphs: &'a [&'a Graph],
    cfg: &'a TrainConfig,
    rng: ChaCha8Rng,
    discriminator: Discriminator,
    critic_opt: Optimizer,
    gen_opt: Optimizer,
    log: Vec<crate::train::EpochRecord>,
}

impl<'a> Loop<'a> {
    fn run<F>(&mut self, observer: &mut dyn TrainObserver, mut step: F) -> TrainResult<()>
    where
        F: FnMut(&mut Self, &[&'a Graph]) -> TrainResult<(BatchLoss, Option<f64>)>,
    {
        let n = self.graphs.len();
        for epoch in 1..=self.cfg.epochs {
            let start = Instant::now();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut self.rng);
            let mut main = LossComponents::default();
            let mut critic = LossComponents::default();
            let mut batches = 0usize;
            for chunk in order.chunks(self.cfg.batch_size) {
                let batch: Vec<&'a Graph> = chunk.iter().map(|&i| self.graphs[i]).collect();
                let ((m, c), clip_seen) = step(self, &batch)?;
                if let Some(value) = clip_seen {
                    return Err(TrainError::ClipViolation {
                        value,
                        clip: self.cfg.clip,
                    });
                }
                main.accumulate(&m);
                if let Some(c) = c {
                    critic.accumulate(&c);
                    observer.critic_step(&self.discriminator.params, self.cfg.clip);
                }
                batches += 1;
            }
            let k = 1.0 / batches as f64;
            let (main, critic) = (main.scaled(k), critic.scaled(k));
            if !main.is_finite() || !critic.is_finite() {
                return Err(TrainError::NonFinite { epoch, what: "loss" });
            }
            if !self.discriminator.params.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    what: "discriminator parameter",
                });
            }
            let record = self.record(epoch, &main, &critic, start.elapsed().as_secs_f64());
            observer.epoch_end(&record, &self.discriminator);
            self.log.push(record);
        }
        Ok(())
    }

    fn record(&self, epoch: usize, main: &LossComponents, critic: &LossComponents, wall_time_s: f64) -> EpochRecord {
        let method = self.cfg.method;
        let perturbs = method != Method::Ati;
        EpochRecord {
            epoch,
            objective: main.total,
            classification: (method == Method::Nat).then_some(main.classification),
            adversarial: method.is_adversarial().then_some(main.adversarial),
            critic: method.is_adversarial().then_some(critic.total),
            discrepancy: perturbs.then_some(main.discrepancy),
            kl: perturbs.then_some(main.kl),
            wall_time_s,
        }
    }

    /// Critic update followed by the clip; returns an out-of-range value if the clip failed.
    fn critic_update(&mut self, grads: &[Tensor]) -> TrainResult<Option<f64>> {
        self.critic_opt.step(&mut self.discriminator.params, grads)?;
        let c = self.cfg.clip;
        self.discriminator.params.clamp_all(c);
        let worst = self.discriminator.params.max_abs();
        Ok((worst > c).then_some(worst))
    }

    fn check_generator(&self, params: &ParamSet) -> TrainResult<()> {
        if !params.is_finite() {
            return Err(TrainError::NonFinite {
                epoch: self.log.len() + 1,
                what: "generator parameter",
            });
        }
        Ok(())
    }

    /// Fake node counts drawn from the training sizes, with matching noise.
    fn ati_noise(&mut self, count: usize) -> Vec<Tensor> {
        let latent = self.cfg.arch.latent_dim;
        (0..count)
            .map(|_| {
                let n = self.graphs[self.rng.random_range(0..self.graphs.len())].node_count();
                Tensor::standard_normal(n, latent, &mut self.rng)
            })
            .collect()
    }

    fn vgae_noise(&mut self, batch: &[&Graph]) -> Vec<GeneratorNoise> {
        let latent = self.cfg.arch.latent_dim;
        batch
            .iter()
            .map(|g| GeneratorNoise::sample(g.node_count(), latent, &mut self.rng))
            .collect()
    }

    fn ati_batch(&mut self, gen: &mut MlpGenerator, batch: &[&Graph]) -> TrainResult<(BatchLoss, Option<f64>)> {
        let exec = self.cfg.exec;
        let zs = self.ati_noise(batch.len());
        let critic = &self.discriminator;
        let g_ref = &*gen;
        let (grads, gen_loss) = batch_gradients(exec, zs.len(), |i, tape| {
            let pc = critic.params.bind_frozen(tape);
            let pg = g_ref.params.bind(tape);
            let (loss, c) = ati_generator_objective(critic, &pc, g_ref, &pg, tape.constant(zs[i].clone()))?;
            Ok((loss, vec![pg], c))
        })?;
        self.gen_opt.step(&mut gen.params, &grads[0])?;
        self.check_generator(&gen.params)?;

        let zs = self.ati_noise(batch.len());
        let g_ref = &*gen;
        let fakes = exec.try_map(&zs, |z| g_ref.sample(z))?;
        let critic = &self.discriminator;
        let (grads, critic_loss) = batch_gradients(exec, batch.len(), |i, tape| {
            let pc = critic.params.bind(tape);
            let real = (
                tape.constant(batch[i].features.clone()),
                tape.constant(batch[i].adjacency.clone()),
            );
            let fake = (tape.constant(fakes[i].0.clone()), tape.constant(fakes[i].1.clone()));
            let (loss, c) = critic_objective(critic, &pc, real, fake)?;
            Ok((loss, vec![pc], c))
        })?;
        let violation = self.critic_update(&grads[0])?;
        Ok(((gen_loss, Some(critic_loss)), violation))
    }

    fn atii_batch(
        &mut self,
        gen: &mut PerturbationGenerator,
        batch: &[&Graph],
    ) -> TrainResult<(BatchLoss, Option<f64>)> {
        let exec = self.cfg.exec;
        let noise = self.vgae_noise(batch);
        let (grads, gen_loss) =
            atii_generator_gradient(&self.discriminator, gen, batch, &noise, self.cfg.weights(), exec)?;
        self.gen_opt.step(&mut gen.params, &grads)?;
        self.check_generator(&gen.params)?;

        let noise = self.vgae_noise(batch);
        let g_ref = &*gen;
        let fakes = exec.map_range(batch.len(), |i| {
            g_ref.sample(&batch[i].features, &batch[i].adjacency, &noise[i])
        });
        let fakes = fakes.into_iter().collect::<TensorResult<Vec<_>>>()?;
        let critic = &self.discriminator;
        let (grads, critic_loss) = batch_gradients(exec, batch.len(), |i, tape| {
            let pc = critic.params.bind(tape);
            let real = (
                tape.constant(batch[i].features.clone()),
                tape.constant(batch[i].adjacency.clone()),
            );
            let fake = (tape.constant(fakes[i].0.clone()), tape.constant(fakes[i].1.clone()));
            let (loss, c) = critic_objective(critic, &pc, real, fake)?;
            Ok((loss, vec![pc], c))
        })?;
        let violation = self.critic_update(&grads[0])?;
        Ok(((gen_loss, Some(critic_loss)), violation))
    }

    fn nat_batch(
        &mut self,
        gen: &mut PerturbationGenerator,
        batch: &[&Graph],
    ) -> TrainResult<(BatchLoss, Option<f64>)> {
        let exec = self.cfg.exec;
        let w = self.cfg.weights();
        let noise = self.vgae_noise(batch);
        let classifier = &self.discriminator;
        let g_ref = &*gen;
        let (grads, loss) = batch_gradients(exec, batch.len(), |i, tape| {
            let pc = classifier.params.bind(tape);
            let pg = g_ref.params.bind(tape);
            let g = batch[i];
            let x = tape.constant(g.features.clone());
            let adj = tape.constant(g.adjacency.clone());
            let (loss, c) = nat_objective(classifier, &pc, g_ref, &pg, x, adj, &noise[i], w)?;
            Ok((loss, vec![pc, pg], c))
        })?;
        self.critic_opt.step(&mut self.discriminator.params, &grads[0])?;
        self.gen_opt.step(&mut gen.params, &grads[1])?;
        self.check_generator(&gen.params)?;
        Ok(((loss, None), None))
    }
}

/// Writes one JSON object per epoch.
pub fn write_log(path: impl AsRef<Path>, log: &[EpochRecord]) -> TrainResult<()> {
    let path = path.as_ref();
    let io = |source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for record in log {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}
