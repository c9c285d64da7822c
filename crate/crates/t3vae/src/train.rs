//! Minibatch training with Adam and early stopping on the model's own
//! validation objective (γ-loss for the t kinds, negative ELBO for the
//! Gaussian kinds), plus per-epoch CSV logging and checkpoint emission.
//!
//! Determinism: one seed fans out into independent rng streams — 0 for
//! parameter initialization, 1 for epoch shuffles, 2 for training-time MC
//! noise, and 1000+epoch for validation noise — so runs with equal configs
//! reproduce exactly and validation losses are comparable across variants.

use crate::autodiff::{Mat, Tape};
use crate::checkpoint::Checkpoint;
use crate::config::{ModelFamily, RunConfig};
use crate::data::{stream_rng, Batch};
use crate::error::{io_err, Error, Result};
use crate::hvae::{
    hier_constants, hier_elbo_loss, hier_gamma_loss, hier_sample_noise, HierConfig,
    HierConstants, HierKind,
};
use crate::models::{
    derive_constants, elbo_loss, gamma_loss, sample_noise, DerivedConstants, ModelConfig,
    ModelKind,
};
use crate::nn::{AdamState, Mlp};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;
use std::path::Path;
use std::time::Instant;

/// Rows per forward pass when evaluating the validation loss (no gradients
/// are kept, but tape values are, so chunking bounds memory).
const VAL_CHUNK: usize = 4096;

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_secs: f64,
}

/// Result of a training run: the best checkpoint plus the full log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochRecord>,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub stopped_early: bool,
}

/// The networks of one model instance, in optimizer slot order.
enum Driver {
    Flat {
        cfg: ModelConfig,
        consts: Option<DerivedConstants>,
        encoder: Mlp,
        decoder: Mlp,
    },
    Hier {
        cfg: HierConfig,
        consts: Option<HierConstants>,
        encoder1: Mlp,
        encoder2: Mlp,
        prior2: Mlp,
        decoder: Mlp,
    },
}

fn layer_sizes(in_dim: usize, hidden: &[usize], out_dim: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(in_dim);
    sizes.extend_from_slice(hidden);
    sizes.push(out_dim);
    sizes
}

/// Builds a net whose output head starts near zero. Scale heads are read
/// through exp, and heavy-tailed inputs can push a freshly He-initialized
/// head to values whose exponential overwhelms the loss for many epochs;
/// shrinking the last layer makes every net start at mean ≈ 0, scale ≈ 1.
fn new_net(sizes: &[usize], rng: &mut ChaCha12Rng) -> Result<Mlp> {
    let mut net = Mlp::new(sizes, rng)?;
    let head = net.layers.last_mut().expect("at least one layer");
    for w in head.w.data_mut() {
        *w *= 1e-2;
    }
    Ok(net)
}

impl Driver {
    fn init(run: &RunConfig, rng: &mut ChaCha12Rng) -> Result<Driver> {
        let hidden = &run.hidden_sizes;
        match run.family()? {
            ModelFamily::Flat(kind) => {
                let cfg = run.model_config()?;
                let consts =
                    if kind == ModelKind::T3Vae { Some(derive_constants(&cfg)?) } else { None };
                let encoder = new_net(&layer_sizes(cfg.n, hidden, 2 * cfg.m), rng)?;
                let decoder = new_net(&layer_sizes(cfg.m, hidden, cfg.n), rng)?;
                Ok(Driver::Flat { cfg, consts, encoder, decoder })
            }
            ModelFamily::Hier(kind) => {
                let cfg = run.hier_config()?;
                let consts =
                    if kind == HierKind::T3Hvae { Some(hier_constants(&cfg)?) } else { None };
                let encoder1 = new_net(&layer_sizes(cfg.n, hidden, 2 * cfg.m1), rng)?;
                let encoder2 = new_net(&layer_sizes(cfg.n + cfg.m1, hidden, 2 * cfg.m2), rng)?;
                let prior2 = new_net(&layer_sizes(cfg.m1, hidden, cfg.m2), rng)?;
                let decoder = new_net(&layer_sizes(cfg.m1 + cfg.m2, hidden, cfg.n), rng)?;
                Ok(Driver::Hier { cfg, consts, encoder1, encoder2, prior2, decoder })
            }
        }
    }

    fn nets(&self) -> Vec<(&'static str, &Mlp)> {
        match self {
            Driver::Flat { encoder, decoder, .. } => {
                vec![("encoder", encoder), ("decoder", decoder)]
            }
            Driver::Hier { encoder1, encoder2, prior2, decoder, .. } => vec![
                ("encoder1", encoder1),
                ("encoder2", encoder2),
                ("prior2", prior2),
                ("decoder", decoder),
            ],
        }
    }

    fn nets_mut(&mut self) -> Vec<&mut Mlp> {
        match self {
            Driver::Flat { encoder, decoder, .. } => vec![encoder, decoder],
            Driver::Hier { encoder1, encoder2, prior2, decoder, .. } => {
                vec![encoder1, encoder2, prior2, decoder]
            }
        }
    }

    /// Build the loss for `rows` of data on a fresh tape; returns the loss
    /// value and, when `with_grads`, the flattened leaf gradients in
    /// optimizer slot order.
    fn batch_loss(
        &self,
        rows: &Batch,
        mc: usize,
        rng: &mut ChaCha12Rng,
        with_grads: bool,
    ) -> Result<(f64, Option<Vec<Vec<f64>>>)> {
        let mut tape = Tape::new();
        let x = tape.leaf(Mat::from_vec(rows.rows(), rows.cols(), rows.data().to_vec()));
        let (loss, taped) = match self {
            Driver::Flat { cfg, consts, encoder, decoder } => {
                let te = encoder.bind(&mut tape);
                let td = decoder.bind(&mut tape);
                let noise = sample_noise(cfg, rows.rows(), mc, rng);
                let loss = match cfg.kind {
                    ModelKind::T3Vae => gamma_loss(
                        &mut tape,
                        x,
                        &te,
                        &td,
                        cfg,
                        consts.as_ref().expect("constants exist for t3vae"),
                        &noise,
                    )?,
                    _ => elbo_loss(&mut tape, x, &te, &td, cfg, &noise)?,
                };
                (loss, vec![te, td])
            }
            Driver::Hier { cfg, consts, encoder1, encoder2, prior2, decoder } => {
                let t1 = encoder1.bind(&mut tape);
                let t2 = encoder2.bind(&mut tape);
                let tp = prior2.bind(&mut tape);
                let td = decoder.bind(&mut tape);
                let noise = hier_sample_noise(cfg, rows.rows(), mc, rng);
                let loss = match cfg.kind {
                    HierKind::T3Hvae => hier_gamma_loss(
                        &mut tape,
                        x,
                        &t1,
                        &t2,
                        &tp,
                        &td,
                        cfg,
                        consts.as_ref().expect("constants exist for t3hvae"),
                        &noise,
                    )?,
                    HierKind::GaussianHvae => {
                        hier_elbo_loss(&mut tape, x, &t1, &t2, &tp, &td, cfg, &noise)?
                    }
                };
                (loss, vec![t1, t2, tp, td])
            }
        };
        let value = tape.scalar_value(loss);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss {value}")));
        }
        if !with_grads {
            return Ok((value, None));
        }
        tape.backward(loss);
        let grads = taped
            .iter()
            .flat_map(|t| t.grad_slices(&tape).into_iter().map(<[f64]>::to_vec))
            .collect();
        Ok((value, Some(grads)))
    }

    /// Row-weighted mean loss over a dataset, evaluated in chunks.
    fn dataset_loss(&self, data: &Batch, mc: usize, rng: &mut ChaCha12Rng) -> Result<f64> {
        let mut total = 0.0;
        let mut start = 0;
        while start < data.rows() {
            let end = (start + VAL_CHUNK).min(data.rows());
            let chunk = data.select(&(start..end).collect::<Vec<_>>());
            let (loss, _) = self.batch_loss(&chunk, mc, rng, false)?;
            total += loss * chunk.rows() as f64;
            start = end;
        }
        Ok(total / data.rows() as f64)
    }
}

/// Train `run`'s model on `train_data`, early-stopping on `val_data`.
pub fn train(run: &RunConfig, train_data: &Batch, val_data: &Batch) -> Result<TrainOutcome> {
    run.validate()?;
    for (name, batch) in [("training", train_data), ("validation", val_data)] {
        if batch.is_empty() {
            return Err(Error::Contract(format!("{name} data is empty")));
        }
        if batch.cols() != run.n {
            return Err(Error::Contract(format!(
                "{name} data has {} columns, config says n = {}",
                batch.cols(),
                run.n
            )));
        }
    }

    let mut driver = Driver::init(run, &mut stream_rng(run.seed, 0))?;
    let mut shuffle_rng = stream_rng(run.seed, 1);
    let mut noise_rng = stream_rng(run.seed, 2);
    let net_refs: Vec<&Mlp> = driver.nets().iter().map(|&(_, n)| n).collect();
    let mut adam = AdamState::for_mlps(run.lr, run.weight_decay, &net_refs);

    let mut indices: Vec<usize> = (0..train_data.rows()).collect();
    let mut log = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_state: Option<(Vec<Mlp>, AdamState)> = None;
    let mut epochs_since_best = 0;
    let mut stopped_early = false;
    let mut epochs_run = 0;

    for epoch in 0..run.max_epochs {
        let started = Instant::now();
        indices.shuffle(&mut shuffle_rng);
        let mut train_sum = 0.0;
        for (batch_idx, chunk) in indices.chunks(run.batch_size).enumerate() {
            let rows = train_data.select(chunk);
            let (loss, grads) = driver
                .batch_loss(&rows, run.mc_samples, &mut noise_rng, true)
                .map_err(|e| match e {
                    Error::Numeric(_) => Error::TrainingDivergence { epoch, batch: batch_idx },
                    other => other,
                })?;
            train_sum += loss * rows.rows() as f64;
            let grads = grads.expect("gradients requested");
            let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            let mut params: Vec<&mut [f64]> = Vec::new();
            for net in driver.nets_mut() {
                params.extend(net.param_slices_mut());
            }
            adam.step(&mut params, &grad_refs)?;
        }
        let train_loss = train_sum / train_data.rows() as f64;
        let mut val_rng = stream_rng(run.seed, 1000 + epoch as u64);
        let val_loss = driver.dataset_loss(val_data, run.mc_samples, &mut val_rng)?;
        epochs_run = epoch + 1;
        log.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            wall_secs: started.elapsed().as_secs_f64(),
        });

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            epochs_since_best = 0;
            let nets = driver.nets().iter().map(|&(_, n)| n.clone()).collect();
            best_state = Some((nets, adam.clone()));
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= run.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let (best_nets, best_adam) = best_state.expect("at least one epoch ran");
    let names: Vec<&'static str> = driver.nets().iter().map(|&(name, _)| name).collect();
    let named: Vec<(&str, &Mlp)> =
        names.iter().copied().zip(best_nets.iter()).collect();
    let checkpoint = Checkpoint::new(run, &named, Some(&best_adam), best_val, best_epoch)?;
    Ok(TrainOutcome {
        checkpoint,
        log,
        best_val_loss: best_val,
        best_epoch,
        epochs_run,
        stopped_early,
    })
}

/// Write the training log as CSV (epoch, train_loss, val_loss, wall_secs).
pub fn write_training_log(path: impl AsRef<Path>, log: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("epoch,train_loss,val_loss,wall_secs\n");
    for r in log {
        text.push_str(&format!(
            "{},{:.16e},{:.16e},{:.6}\n",
            r.epoch, r.train_loss, r.val_loss, r.wall_secs
        ));
    }
    std::fs::write(path, text).map_err(io_err(path))
}
