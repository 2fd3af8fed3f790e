mod common;

use common::{rel_vec, rng};
use lmlvamp::baselines::linear_wiener;
use lmlvamp::learned::{generate_dataset, infer, infer_forced, loss_total, loss_weights, train, Forced, TrainConfig};
use lmlvamp::neural::UnrolledModel;
use lmlvamp::scenario::Scenario;
use lmlvamp::spectrum::{dft, BandLayout};
use lmlvamp::Complex64;
use proptest::prelude::*;

fn identity_scenario() -> Scenario {
    let mut s = Scenario::table_default(20.0, 40.0);
    s.satnr_db = 200.0;
    s
}

#[test]
fn forced_coefficients_reduce_to_wiener() {
    let s = identity_scenario();
    let fe = s.frontend().unwrap();
    let se = fe.sigma_eff2();
    let f1 = move |_t: usize, gamma1: f64| [1.0, 1.0, (se * gamma1).ln()];
    let forced = Forced { f1: Some(&f1), beta: Some([1.0, 0.0]) };
    let mut g = rng(50);
    for t_max in [1, 2, 3] {
        let model = UnrolledModel::init(t_max, s.p_sat(), false, false, &mut g).unwrap();
        for known in [true, false] {
            let trial = s.draw_trial(&fe, &mut g).unwrap();
            let prior = trial.prior(known).unwrap();
            let out = infer_forced(trial.observed(), &prior, &model, &forced).unwrap().xhat0;
            let lin = linear_wiener(trial.observed(), &prior, &fe).unwrap();
            let err = rel_vec(&out, &lin);
            assert!(err < 1e-6, "T = {t_max}, known = {known}: {err:e}");
        }
    }
}

#[test]
fn output_is_supported_on_desired_band() {
    let s = Scenario::table_default(20.0, 60.0);
    let fe = s.frontend().unwrap();
    let mut g = rng(51);
    let model = UnrolledModel::init(3, s.p_sat(), false, false, &mut g).unwrap();
    let trial = s.draw_trial(&fe, &mut g).unwrap();
    let inf = infer(trial.observed(), &trial.prior(false).unwrap(), &model).unwrap();
    assert_eq!(inf.trajectory.len(), 3);
    assert!(inf.xhat0[100..].iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    for k in 0..100 {
        assert_eq!(inf.xhat0[k], inf.trajectory[2][k]);
    }
    let again = infer(trial.observed(), &trial.prior(false).unwrap(), &model).unwrap();
    assert_eq!(again.xhat0, inf.xhat0);
}

#[test]
fn single_iteration_trajectory() {
    let s = Scenario::table_default(10.0, 30.0);
    let fe = s.frontend().unwrap();
    let mut g = rng(52);
    let model = UnrolledModel::init(1, s.p_sat(), false, false, &mut g).unwrap();
    let trial = s.draw_trial(&fe, &mut g).unwrap();
    let inf = infer(trial.observed(), &trial.prior(true).unwrap(), &model).unwrap();
    assert_eq!(inf.trajectory.len(), 1);
    let masked: Vec<Complex64> = inf.trajectory[0]
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < 100 { v } else { Complex64::new(0.0, 0.0) })
        .collect();
    assert_eq!(masked, inf.xhat0);
}

#[test]
fn fixed_beta_message_is_inverse_transform() {
    // With beta = (1, 0) and no observation correction the second pass sees
    // z1 = V^H xhat, so z0 = xhat and the spectral step shrinks it again.
    let layout = BandLayout::new(32, vec![0..8, 16..24]).unwrap();
    let mut g = rng(53);
    let s0 = 4.0;
    let prior = lmlvamp::spectrum::PriorSpec::unknown(layout, &[s0, 9.0]).unwrap();
    let y = common::random_vec(&mut g, 32, 3.0);
    let model = UnrolledModel::init(2, 100.0, true, false, &mut g).unwrap();
    let f1 = |t: usize, _g: f64| if t == 0 { [1.0, 1.0, 0.0] } else { [0.0, 0.0, 0.0] };
    let forced = Forced { f1: Some(&f1), beta: None };
    let inf = infer_forced(&y, &prior, &model, &forced).unwrap();
    let gamma1_0 = 1.0 / prior.mean_variance();
    let z = dft(&y).unwrap();
    let shrink0 = gamma1_0 * s0 / (1.0 + gamma1_0 * s0);
    for k in 0..8 {
        assert!((inf.trajectory[0][k] - z[k] * shrink0).norm() < 1e-9 * z[k].norm().max(1.0));
    }
    let first: Vec<Complex64> = inf.trajectory[0].clone();
    let mean_g = (8.0 * shrink0 + 8.0 * (gamma1_0 * 9.0 / (1.0 + gamma1_0 * 9.0))) / 32.0;
    let gamma1_1 = gamma1_0 / mean_g;
    let shrink1 = gamma1_1 * s0 / (1.0 + gamma1_1 * s0);
    for k in 0..8 {
        assert!((inf.trajectory[1][k] - first[k] * shrink1).norm() < 1e-9 * first[k].norm().max(1.0));
    }
}

#[test]
fn loss_weight_examples() {
    assert_eq!(loss_weights(1), Vec::<f64>::new());
    assert_eq!(loss_weights(2), vec![1.0]);
    let w = loss_weights(3);
    assert!((w[0] - 1.0 / 3.0).abs() < 1e-15 && (w[1] - 2.0 / 3.0).abs() < 1e-15);
    let x0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(5.0, 5.0)];
    let xa = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(0.0, 0.0)];
    assert_eq!(loss_total(&[x0.clone(), x0.clone()], &x0, 0..2, 0.75), 0.0);
    let l = loss_total(&[xa.clone(), x0.clone()], &x0, 0..2, 0.75);
    assert!((l - 0.25).abs() < 1e-15);
    assert!((loss_total(&[xa.clone()], &x0, 0..2, 0.9) - 0.9).abs() < 1e-15);
}

#[test]
fn training_is_deterministic_and_makes_progress() {
    let s = Scenario::table_default(20.0, 50.0);
    let data = generate_dataset(&s, true, 20, 7).unwrap();
    let cfg = TrainConfig {
        n_samples: 20,
        n_epochs: 201,
        batch_size: 10,
        lr0: 3e-3,
        lr_decay: 0.995,
        seed: 3,
        ..Default::default()
    };
    let (m1, log1) = train(&data, &cfg).unwrap();
    assert!(log1.rows[200].mean_loss < log1.rows[0].mean_loss);
    let short = TrainConfig { n_epochs: 5, ..cfg.clone() };
    let (a, la) = train(&data, &short).unwrap();
    let (b, lb) = train(&data, &short).unwrap();
    assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    assert_eq!(la, lb);
    assert!(m1.is_finite());
    let other = train(&data, &TrainConfig { seed: 4, ..short }).unwrap().0;
    assert_ne!(other.to_bytes().unwrap(), a.to_bytes().unwrap());
}

#[test]
fn fixed_beta_training_survives_strong_interference() {
    let s = Scenario::table_default(20.0, 80.0);
    let data = generate_dataset(&s, false, 10, 8).unwrap();
    let cfg =
        TrainConfig { n_samples: 10, n_epochs: 20, batch_size: 5, lr0: 1e-2, fix_beta: true, ..Default::default() };
    let (model, log) = train(&data, &cfg).unwrap();
    assert!(model.is_finite());
    assert_eq!(log.rows.len(), 20);
    assert!(log.rows.iter().all(|r| r.mean_loss.is_finite()));
}

#[test]
fn empty_dataset_is_rejected() {
    let s = Scenario::table_default(20.0, 50.0);
    let mut data = generate_dataset(&s, true, 2, 7).unwrap();
    data.samples.clear();
    assert!(train(&data, &TrainConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn loss_weights_sum_to_one(t in 2usize..40) {
        let w = loss_weights(t);
        prop_assert_eq!(w.len(), t - 1);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.windows(2).all(|p| p[0] < p[1]));
    }
}
