use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{clip_global_norm, Adam};
use super::loss::loss_on_tape;
use super::{unroll, Forced, ModelVars};
use crate::error::{Error, Result};
use crate::neural::{Tape, UnrolledModel};
use crate::rng::stream;
use crate::scenario::Scenario;
use crate::spectrum::PriorSpec;

const KEY_DATA: u64 = 0xda7a;
const KEY_INIT: u64 = 0x1417;
const KEY_SHUFFLE: u64 = 0x5eed;

/// Optimization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub t_max: usize,
    pub eta: f64,
    pub n_samples: usize,
    pub n_epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub lr_decay: f64,
    pub fix_beta: bool,
    /// Use one set of networks for every iteration.
    pub shared: bool,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            t_max: 2,
            eta: 0.75,
            n_samples: 1000,
            n_epochs: 2000,
            batch_size: 100,
            lr0: 1e-3,
            lr_decay: 0.9988,
            fix_beta: false,
            shared: false,
            grad_clip: 10.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.eta > 0.5 && self.eta <= 1.0) {
            return bad(format!("eta = {} outside (0.5, 1]", self.eta));
        }
        if self.t_max == 0 {
            return bad("T must be at least 1".into());
        }
        if self.batch_size == 0 || self.n_samples == 0 {
            return bad("batch size and sample count must be positive".into());
        }
        if !(self.lr0 > 0.0 && self.lr_decay > 0.0 && self.grad_clip > 0.0) {
            return bad("learning rate, decay and clip norm must be positive".into());
        }
        Ok(())
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        self.lr0 * self.lr_decay.powi(epoch as i32)
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub prior: PriorSpec,
    /// Observation (`y_q` when quantized).
    pub y: Vec<Complex64>,
    /// Desired component on band 0, zero elsewhere.
    pub x0: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub snr_db: f64,
    pub inr_db: f64,
    pub quantized: bool,
    pub known: bool,
    pub p_sat: f64,
}

/// Draws `n` independent trials of `scenario`.
pub fn generate_dataset(scenario: &Scenario, known: bool, n: usize, seed: u64) -> Result<Dataset> {
    let fe = scenario.frontend()?;
    let key = [KEY_DATA, known as u64];
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &key, i as u64);
            let t = scenario.draw_trial(&fe, &mut rng)?;
            Ok(Sample { prior: t.prior(known)?, y: t.observed().to_vec(), x0: t.x0() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        samples,
        snr_db: scenario.snr_db,
        inr_db: scenario.inr_db,
        quantized: scenario.quantizer.is_some(),
        known,
        p_sat: fe.p_sat,
    })
}

/// Loss, gradient in [`UnrolledModel::params_flat`] order, and clamp count
/// for one sample.
pub fn sample_loss_grad(model: &UnrolledModel, sample: &Sample, eta: f64) -> Result<(f64, Vec<f64>, usize)> {
    let mut tape = Tape::new();
    let vars = ModelVars::register(&mut tape, model);
    let u = unroll(&mut tape, model, &vars, &sample.prior, &sample.y, &Forced::default())?;
    let mask = sample.prior.layout().mask(0);
    let loss = loss_on_tape(&mut tape, &u.trajectory, &sample.x0, &mask, eta);
    let grads = tape.backward(loss)?;
    let mut g = Vec::with_capacity(model.num_params());
    for v in vars.ordered() {
        match grads.wrt(v) {
            Some(d) => g.extend_from_slice(d),
            None => g.extend(std::iter::repeat_n(0.0, tape.value(v).len())),
        }
    }
    Ok((tape.scalar_value(loss), g, u.clamp_count))
}

/// Loss only.
pub fn sample_loss(model: &UnrolledModel, sample: &Sample, eta: f64) -> Result<f64> {
    let out = super::infer(&sample.y, &sample.prior, model)?;
    let band = sample.prior.layout().band(0);
    Ok(super::loss_total(&out.trajectory, &sample.x0, band, eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f64,
    pub clamp_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,mean_loss,lr,clamp_count\n");
        for r in &self.rows {
            writeln!(s, "{},{:.8e},{:.8e},{}", r.epoch, r.mean_loss, r.lr, r.clamp_count).expect("string write");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Minimizes the mean loss over `dataset` with Adam.
///
/// Each epoch visits the samples in a seeded random order. Per-sample
/// gradients are computed in parallel and summed in sample order, so results
/// do not depend on the thread count. The logged loss of an epoch is the
/// mean over its batches, evaluated before each update.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(UnrolledModel, TrainLog)> {
    train_with_progress(dataset, cfg, |_| {})
}

pub fn train_with_progress(
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&TrainLogRow),
) -> Result<(UnrolledModel, TrainLog)> {
    cfg.validate()?;
    if dataset.samples.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    let mut model =
        UnrolledModel::init(cfg.t_max, dataset.p_sat, cfg.fix_beta, cfg.shared, &mut stream(cfg.seed, &[KEY_INIT], 0))?;
    let mut params = model.params_flat();
    let mut adam = Adam::new(params.len());
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..dataset.samples.len()).collect();

    for epoch in 0..cfg.n_epochs {
        order.shuffle(&mut stream(cfg.seed, &[KEY_SHUFFLE], epoch as u64));
        let lr = cfg.lr(epoch);
        let mut loss_sum = 0.0;
        let mut clamps = 0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<Result<(f64, Vec<f64>, usize)>> =
                idx.par_iter().map(|&i| sample_loss_grad(&model, &dataset.samples[i], cfg.eta)).collect();
            let mut grad = vec![0.0; params.len()];
            let mut batch_loss = 0.0;
            for r in results {
                let (l, g, c) = r.map_err(|e| {
                    log::error!("epoch {epoch}, batch {batch}: {e}");
                    Error::NonFiniteLoss { epoch, batch }
                })?;
                batch_loss += l;
                clamps += c;
                grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            let k = 1.0 / idx.len() as f64;
            batch_loss *= k;
            grad.iter_mut().for_each(|g| *g *= k);
            if !batch_loss.is_finite() || !grad.iter().all(|g| g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            clip_global_norm(&mut grad, cfg.grad_clip);
            adam.step(&mut params, &grad, lr);
            model.set_params_flat(&params)?;
            loss_sum += batch_loss * idx.len() as f64;
        }
        let row = TrainLogRow { epoch, mean_loss: loss_sum / dataset.samples.len() as f64, lr, clamp_count: clamps };
        log::debug!("epoch {epoch}: loss {:.6e}, lr {lr:.3e}, clamps {clamps}", row.mean_loss);
        progress(&row);
        log.rows.push(row);
    }
    Ok((model, log))
}
