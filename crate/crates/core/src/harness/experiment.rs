use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{Estimator, ExperimentConfig};
use super::results::{write_results, TrialResult};
use crate::baselines::{genie_noise_var, linear_wiener, oracle_genie, Genie};
use crate::error::{Error, Result};
use crate::learned::train::train_with_progress;
use crate::learned::{generate_dataset, infer, Dataset, Sample, TrainConfig, TrainLog};
use crate::metrics::{evaluate_with, pooled_correlation, rate_bound, to_db_floored, Metrics};
use crate::neural::UnrolledModel;
use crate::rng::{derive_seed, float_key, stream};
use crate::scenario::Scenario;

const KEY_DATASET: u64 = 0xd5;
const KEY_TRAIN: u64 = 0x7a;
const KEY_EVAL: u64 = 0xe7;
const DATA_MAGIC: &[u8; 8] = b"LMLVDATA";
const DATA_VERSION: u32 = 1;

fn tag(quantized: bool) -> &'static str {
    if quantized {
        "q"
    } else {
        "nq"
    }
}

fn ku(known: bool) -> &'static str {
    if known {
        "k"
    } else {
        "u"
    }
}

pub fn model_filename(snr_db: f64, inr_db: f64, t: usize, quantized: bool, known: bool) -> String {
    format!("model_snr{snr_db}_inr{inr_db}_T{t}_{}_{}.bin", tag(quantized), ku(known))
}

pub fn dataset_filename(snr_db: f64, inr_db: f64, quantized: bool, known: bool) -> String {
    format!("dataset_snr{snr_db}_inr{inr_db}_{}_{}.bin", tag(quantized), ku(known))
}

pub fn train_log_filename(snr_db: f64, inr_db: f64, t: usize, quantized: bool, known: bool) -> String {
    format!("trainlog_snr{snr_db}_inr{inr_db}_T{t}_{}_{}.csv", tag(quantized), ku(known))
}

fn scenario_keys(s: &Scenario) -> [u64; 3] {
    [float_key(s.snr_db), float_key(s.inr_db), s.quantizer.is_some() as u64]
}

pub fn dataset_seed(seed: u64, s: &Scenario) -> u64 {
    let k = scenario_keys(s);
    derive_seed(seed, &[KEY_DATASET, k[0], k[1], k[2]])
}

/// Training configuration for one scenario: the base config with `T` and a
/// scenario-specific seed.
pub fn train_config_for(cfg: &ExperimentConfig, s: &Scenario, t: usize, known: bool) -> TrainConfig {
    let k = scenario_keys(s);
    TrainConfig {
        t_max: t,
        seed: derive_seed(cfg.seed ^ cfg.train.seed, &[KEY_TRAIN, k[0], k[1], k[2], t as u64, known as u64]),
        ..cfg.train.clone()
    }
}

fn learned_kinds(cfg: &ExperimentConfig) -> Vec<bool> {
    let mut v = Vec::new();
    if cfg.estimators.contains(&Estimator::LmlvampK) {
        v.push(true);
    }
    if cfg.estimators.contains(&Estimator::LmlvampU) {
        v.push(false);
    }
    v
}

fn scenarios(cfg: &ExperimentConfig) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for &snr in &cfg.snr_db {
        for &inr in &cfg.inr_db {
            for &q in &cfg.quantizer.enabled {
                out.push(cfg.scenario(snr, inr, q)?);
            }
        }
    }
    Ok(out)
}

/// Encodes a dataset: magic, version, sample count and `N` as `u32`, then
/// per sample `y`, `x0` and `mu` as interleaved little-endian `f64`.
pub fn dataset_to_bytes(d: &Dataset) -> Vec<u8> {
    let n = d.samples.first().map_or(0, |s| s.y.len());
    let mut out = Vec::with_capacity(24 + d.samples.len() * n * 48);
    out.extend_from_slice(DATA_MAGIC);
    out.extend_from_slice(&DATA_VERSION.to_le_bytes());
    out.extend_from_slice(&(d.samples.len() as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for s in &d.samples {
        for v in [&s.y[..], &s.x0, s.prior.mu()] {
            for c in v {
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }
        }
    }
    out
}

pub fn dataset_from_bytes(bytes: &[u8], scenario: &Scenario, known: bool) -> Result<Dataset> {
    let bad = |m: &str| Error::ModelFormat(format!("dataset: {m}"));
    if bytes.len() < 20 || &bytes[..8] != DATA_MAGIC {
        return Err(bad("bad magic"));
    }
    let u = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    if u(8) != DATA_VERSION as usize {
        return Err(bad("unsupported version"));
    }
    let (count, n) = (u(12), u(16));
    if n != scenario.n() {
        return Err(bad("length does not match the configured layout"));
    }
    if bytes.len() != 20 + count * n * 48 {
        return Err(bad("size mismatch"));
    }
    let base = scenario.unknown_prior()?;
    let b1 = scenario.layout.band(1);
    let mut pos = 20;
    let vec = |pos: &mut usize| -> Vec<Complex64> {
        (0..n)
            .map(|_| {
                let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
                let c = Complex64::new(f(*pos), f(*pos + 8));
                *pos += 16;
                c
            })
            .collect()
    };
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let y = vec(&mut pos);
        let x0 = vec(&mut pos);
        let mu = vec(&mut pos);
        let prior = if known { base.clone().with_known_band(1, &mu[b1.clone()])? } else { base.clone() };
        if prior.mu() != &mu[..] {
            return Err(bad("prior mean inconsistent with scenario"));
        }
        samples.push(Sample { prior, y, x0 });
    }
    Ok(Dataset {
        samples,
        snr_db: scenario.snr_db,
        inr_db: scenario.inr_db,
        quantized: scenario.quantizer.is_some(),
        known,
        p_sat: scenario.p_sat(),
    })
}

fn make_dataset(cfg: &ExperimentConfig, s: &Scenario, known: bool) -> Result<Dataset> {
    generate_dataset(s, known, cfg.train.n_samples, dataset_seed(cfg.seed, s))
}

/// Writes the training datasets of every configured scenario.
pub fn generate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut paths = Vec::new();
    for s in scenarios(cfg)? {
        for known in learned_kinds(cfg) {
            let d = make_dataset(cfg, &s, known)?;
            let p = cfg.output_dir.join(dataset_filename(s.snr_db, s.inr_db, d.quantized, known));
            std::fs::write(&p, dataset_to_bytes(&d))?;
            log::info!("wrote {}", p.display());
            paths.push(p);
        }
    }
    Ok(paths)
}

/// Dataset read from `output_dir` when present, generated otherwise.
pub fn dataset_for(cfg: &ExperimentConfig, s: &Scenario, known: bool) -> Result<Dataset> {
    let p = cfg.output_dir.join(dataset_filename(s.snr_db, s.inr_db, s.quantizer.is_some(), known));
    match std::fs::read(&p) {
        Ok(bytes) => dataset_from_bytes(&bytes, s, known),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => make_dataset(cfg, s, known),
        Err(e) => Err(e.into()),
    }
}

/// Trains the model for one scenario from an in-memory dataset.
pub fn train_scenario(
    cfg: &ExperimentConfig,
    s: &Scenario,
    t: usize,
    known: bool,
    dataset: &Dataset,
) -> Result<(UnrolledModel, TrainLog)> {
    let tc = train_config_for(cfg, s, t, known);
    let every = (tc.n_epochs / 10).max(1);
    train_with_progress(dataset, &tc, |row| {
        if row.epoch % every == 0 || row.epoch + 1 == tc.n_epochs {
            log::info!(
                "{} SNR {} INR {} T {t} {}: epoch {} loss {:.4e}",
                ku(known),
                s.snr_db,
                s.inr_db,
                tag(s.quantizer.is_some()),
                row.epoch,
                row.mean_loss
            );
        }
    })
}

/// Trains and saves every configured learned model.
pub fn train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut paths = Vec::new();
    for s in scenarios(cfg)? {
        let q = s.quantizer.is_some();
        for known in learned_kinds(cfg) {
            let d = dataset_for(cfg, &s, known)?;
            for &t in &cfg.t_iters {
                let (model, log) = train_scenario(cfg, &s, t, known, &d)?;
                let p = cfg.output_dir.join(model_filename(s.snr_db, s.inr_db, t, q, known));
                model.save(&p)?;
                log.write_csv(&cfg.output_dir.join(train_log_filename(s.snr_db, s.inr_db, t, q, known)))?;
                log::info!("wrote {}", p.display());
                paths.push(p);
            }
        }
    }
    Ok(paths)
}

/// Metrics of every estimator at one grid point.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub rows: Vec<TrialResult>,
    /// Per-trial metrics in trial order.
    pub per_trial: BTreeMap<Estimator, Vec<Metrics>>,
}

impl PointEvaluation {
    pub fn row(&self, e: Estimator) -> Option<&TrialResult> {
        self.rows.iter().find(|r| r.estimator == e)
    }
}

/// Learned models available at a grid point.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointModels<'a> {
    pub known: Option<&'a UnrolledModel>,
    pub unknown: Option<&'a UnrolledModel>,
}

/// Runs `n_trials` shared realizations through every estimator in
/// `estimators`. Realizations depend on the seed and scenario only, so
/// different `T` and estimators see the same trials.
pub fn evaluate_point(
    cfg: &ExperimentConfig,
    s: &Scenario,
    t: usize,
    estimators: &[Estimator],
    models: PointModels<'_>,
) -> Result<PointEvaluation> {
    let fe = s.frontend()?;
    let keys = scenario_keys(s);
    let band = s.layout.band(0);
    for &e in estimators {
        let m = match e {
            Estimator::LmlvampK => Some(models.known),
            Estimator::LmlvampU => Some(models.unknown),
            _ => None,
        };
        if let Some(None) = m {
            return Err(Error::InvalidParameter(format!("no model supplied for {e}")));
        }
    }

    type TrialOut = Vec<(Vec<Complex64>, Metrics)>;
    let trials: Vec<(Vec<Complex64>, TrialOut)> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut rng = stream(cfg.seed, &[KEY_EVAL, keys[0], keys[1], keys[2]], i as u64);
            let trial = s.draw_trial(&fe, &mut rng)?;
            let x0 = trial.x0();
            let y = trial.observed();
            let mut out = Vec::with_capacity(estimators.len());
            for &e in estimators {
                let xhat = match e {
                    Estimator::LmlvampK => infer(y, &trial.prior(true)?, models.known.expect("checked"))?.xhat0,
                    Estimator::LmlvampU => infer(y, &trial.prior(false)?, models.unknown.expect("checked"))?.xhat0,
                    Estimator::LinearK => linear_wiener(y, &trial.prior(true)?, &fe)?,
                    Estimator::LinearU => linear_wiener(y, &trial.prior(false)?, &fe)?,
                    Estimator::Oracle => {
                        let nuisance: Vec<Complex64> = trial.x.iter().zip(&x0).map(|(a, b)| a - b).collect();
                        let noise_var = genie_noise_var(&trial.out.gain, &fe);
                        let genie = Genie {
                            gain: &trial.out.gain,
                            nuisance: &nuisance,
                            noise_var: &noise_var,
                            band_var: trial.prior_u.band_variance(0),
                        };
                        oracle_genie(y, &genie, &x0, band.clone(), cfg.oracle_gain.into())?
                    }
                };
                let m = evaluate_with(&xhat, &x0, band.clone(), cfg.rate_formula);
                if !(m.rho.is_finite() && m.nmse.is_finite()) {
                    return Err(Error::Results(format!("non-finite metrics for {e} in trial {i}")));
                }
                out.push((if cfg.pooled_rho { xhat } else { Vec::new() }, m));
            }
            Ok((if cfg.pooled_rho { x0 } else { Vec::new() }, out))
        })
        .collect::<Result<_>>()?;

    let n = trials.len() as f64;
    let mut rows = Vec::new();
    let mut per_trial = BTreeMap::new();
    for (k, &e) in estimators.iter().enumerate() {
        let metrics: Vec<Metrics> = trials.iter().map(|(_, o)| o[k].1).collect();
        let (rho_mean, rate_mean) = if cfg.pooled_rho {
            let rho = pooled_correlation(trials.iter().map(|(x0, o)| (&o[k].0[..], &x0[..])), band.clone());
            (rho, rate_bound(rho, cfg.rate_formula))
        } else {
            (metrics.iter().map(|m| m.rho).sum::<f64>() / n, metrics.iter().map(|m| m.rate_bound).sum::<f64>() / n)
        };
        let nmse_mean = metrics.iter().map(|m| m.nmse).sum::<f64>() / n;
        rows.push(TrialResult {
            estimator: e,
            snr_db: s.snr_db,
            inr_db: s.inr_db,
            t_iters: t,
            quantized: s.quantizer.is_some(),
            rho_mean,
            rate_bound_mean: rate_mean,
            nmse_db_mean: to_db_floored(nmse_mean),
            n_trials: cfg.n_trials,
            seed: cfg.seed,
        });
        per_trial.insert(e, metrics);
    }
    Ok(PointEvaluation { rows, per_trial })
}

fn load_model(dir: &Path, name: String) -> Result<UnrolledModel> {
    UnrolledModel::load(&dir.join(name))
}

/// Evaluates every grid point with models read from `output_dir`.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    let mut rows = Vec::new();
    for s in scenarios(cfg)? {
        let q = s.quantizer.is_some();
        for &t in &cfg.t_iters {
            let k = if cfg.estimators.contains(&Estimator::LmlvampK) {
                Some(load_model(&cfg.output_dir, model_filename(s.snr_db, s.inr_db, t, q, true))?)
            } else {
                None
            };
            let u = if cfg.estimators.contains(&Estimator::LmlvampU) {
                Some(load_model(&cfg.output_dir, model_filename(s.snr_db, s.inr_db, t, q, false))?)
            } else {
                None
            };
            let models = PointModels { known: k.as_ref(), unknown: u.as_ref() };
            let ev = evaluate_point(cfg, &s, t, &cfg.estimators, models)?;
            log::info!("evaluated SNR {} INR {} T {t} {}", s.snr_db, s.inr_db, tag(q));
            rows.extend(ev.rows);
        }
    }
    Ok(rows)
}

pub fn results_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("results.csv")
}

/// Evaluates and writes `results.csv`.
pub fn evaluate_and_write(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let rows = evaluate(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let p = results_path(cfg);
    write_results(&rows, &p)?;
    Ok(p)
}

/// generate, train, evaluate.
pub fn sweep(cfg: &ExperimentConfig) -> Result<PathBuf> {
    generate(cfg)?;
    train(cfg)?;
    evaluate_and_write(cfg)
}
