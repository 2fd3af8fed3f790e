//! Linear, oracle and learned estimators on shared trials at one operating
//! point.

use lmlvamp::harness::experiment::{self, PointModels};
use lmlvamp::harness::{Estimator, ExperimentConfig};

fn main() -> lmlvamp::Result<()> {
    let mut cfg = ExperimentConfig { n_trials: 100, ..ExperimentConfig::default() };
    cfg.train.n_samples = 40;
    cfg.train.n_epochs = 20;
    cfg.train.batch_size = 20;
    cfg.train.lr0 = 1e-2;
    cfg.train.lr_decay = 0.98;
    let s = cfg.scenario(20.0, 60.0, false)?;
    let t = 2;

    let dk = experiment::dataset_for(&cfg, &s, true)?;
    let (known, _) = experiment::train_scenario(&cfg, &s, t, true, &dk)?;
    let du = experiment::dataset_for(&cfg, &s, false)?;
    let (unknown, _) = experiment::train_scenario(&cfg, &s, t, false, &du)?;

    let ev = experiment::evaluate_point(
        &cfg,
        &s,
        t,
        &Estimator::ALL,
        PointModels { known: Some(&known), unknown: Some(&unknown) },
    )?;
    println!("SNR {} dB, INR {} dB, T = {t}, {} trials", s.snr_db, s.inr_db, cfg.n_trials);
    for r in &ev.rows {
        println!(
            "{:<10} rho {:.4}  rate {:.3} bit  NMSE {:>7.2} dB",
            r.estimator.name(),
            r.rho_mean,
            r.rate_bound_mean,
            r.nmse_db_mean
        );
    }
    Ok(())
}
