mod common;

use common::{c, random_vec, rel, rng};
use lmlvamp::baselines::{genie_noise_var, linear_wiener, oracle_estimate, oracle_genie, Genie, OracleGain};
use lmlvamp::frontend::FrontEndParams;
use lmlvamp::metrics::{
    correlation, evaluate, evaluate_with, nmse, rate_bound, RateFormula, NMSE_DB_FLOOR, RATE_CAP_BITS,
};
use lmlvamp::scenario::Scenario;
use lmlvamp::spectrum::{idft, BandLayout, PriorSpec};
use lmlvamp::Complex64;
use proptest::prelude::*;

fn identity(snr_db: f64) -> Scenario {
    let mut s = Scenario::table_default(snr_db, 30.0);
    s.satnr_db = 200.0;
    s
}

#[test]
fn noiseless_wiener_is_exact_and_silent_band_is_zero() {
    let layout = BandLayout::new(32, vec![0..8, 16..24]).unwrap();
    let prior = PriorSpec::unknown(layout.clone(), &[3.0, 5.0]).unwrap();
    let mut g = rng(60);
    let x: Vec<Complex64> =
        (0..32).map(|k| if k < 8 || (16..24).contains(&k) { c(k as f64, 1.0) } else { c(0.0, 0.0) }).collect();
    let fe = FrontEndParams::new(1e20, 0.0, 0.0, None).unwrap();
    let est = linear_wiener(&idft(&x).unwrap(), &prior, &fe).unwrap();
    for k in 0..8 {
        assert!((est[k] - x[k]).norm() < 1e-12);
    }
    assert!(est[8..].iter().all(|v| v.norm() == 0.0));
    let silent = PriorSpec::unknown(layout, &[0.0, 5.0]).unwrap();
    let noisy = FrontEndParams::new(1e20, 1.0, 0.1, None).unwrap();
    let y = random_vec(&mut g, 32, 4.0);
    assert!(linear_wiener(&y, &silent, &noisy).unwrap().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn wiener_nmse_matches_closed_form() {
    let s = identity(10.0);
    let fe = s.frontend().unwrap();
    let s0 = s.unknown_prior().unwrap().band_variance(0);
    let se = fe.sigma_eff2();
    let expected = se / (s0 + se);
    let mut g = rng(61);
    let trials = 2000;
    let mut total = 0.0;
    for _ in 0..trials {
        let t = s.draw_trial(&fe, &mut g).unwrap();
        let est = linear_wiener(t.observed(), &t.prior(true).unwrap(), &fe).unwrap();
        total += nmse(&est, &t.x0(), 0..100);
    }
    let mc = total / trials as f64;
    assert!(rel(mc, expected) < 0.02, "{mc} vs {expected}");
}

#[test]
fn known_and_unknown_linear_agree_on_desired_band() {
    let s = Scenario::table_default(20.0, 60.0);
    let fe = s.frontend().unwrap();
    let t = s.draw_trial(&fe, &mut rng(62)).unwrap();
    let k = linear_wiener(t.observed(), &t.prior(true).unwrap(), &fe).unwrap();
    let u = linear_wiener(t.observed(), &t.prior(false).unwrap(), &fe).unwrap();
    assert_eq!(k, u);
}

#[test]
fn oracle_beats_wiener_on_every_trial_under_identity_frontend() {
    let s = identity(10.0);
    let fe = s.frontend().unwrap();
    let mut g = rng(63);
    for _ in 0..200 {
        let t = s.draw_trial(&fe, &mut g).unwrap();
        let x0 = t.x0();
        let lin = nmse(&linear_wiener(t.observed(), &t.prior(false).unwrap(), &fe).unwrap(), &x0, 0..100);
        let orc = nmse(&oracle_estimate(t.observed(), &x0, 0..100).unwrap(), &x0, 0..100);
        assert!(orc <= lin * (1.0 + 1e-12));
        let nuisance: Vec<Complex64> = t.x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let noise_var = genie_noise_var(&t.out.gain, &fe);
        let genie = Genie {
            gain: &t.out.gain,
            nuisance: &nuisance,
            noise_var: &noise_var,
            band_var: t.prior_u.band_variance(0),
        };
        let gen = nmse(&oracle_genie(t.observed(), &genie, &x0, 0..100, OracleGain::Scalar).unwrap(), &x0, 0..100);
        assert!(rel(gen, orc) < 1e-6);
    }
}

#[test]
fn oracle_exact_for_scaled_band_and_zero_when_orthogonal() {
    let mut g = rng(64);
    let x0: Vec<Complex64> =
        (0..16).map(|k| if k < 6 { common::c(k as f64 + 1.0, -1.0) } else { c(0.0, 0.0) }).collect();
    let mut z: Vec<Complex64> = x0.iter().map(|v| v * c(-0.2, 3.0)).collect();
    for v in z.iter_mut().skip(6) {
        *v = lmlvamp::rng::complex_normal(&mut g, 1.0);
    }
    let est = oracle_estimate(&idft(&z).unwrap(), &x0, 0..6).unwrap();
    assert!(nmse(&est, &x0, 0..6) < 1e-24);
    let mut orth = vec![c(0.0, 0.0); 16];
    orth[0] = c(1.0, 0.0);
    orth[1] = c(1.0, 0.0);
    let x = {
        let mut x = vec![c(0.0, 0.0); 16];
        x[0] = c(1.0, 0.0);
        x[1] = c(-1.0, 0.0);
        x
    };
    let est = oracle_estimate(&idft(&orth).unwrap(), &x, 0..2).unwrap();
    assert!(est.iter().all(|v| v.norm() < 1e-14));
}

#[test]
fn perfect_estimate_metrics() {
    let x0 = random_vec(&mut rng(65), 64, 2.0);
    let m = evaluate(&x0, &x0, 0..40);
    assert_eq!(m.nmse, 0.0);
    assert_eq!(m.nmse_db, NMSE_DB_FLOOR);
    assert!((m.rho - 1.0).abs() < 1e-12);
    assert!(m.rate_bound > 25.0 && m.rate_bound <= RATE_CAP_BITS);
    assert_eq!(rate_bound(1.0, RateFormula::Printed), RATE_CAP_BITS);
}

#[test]
fn rate_bound_values() {
    assert!((rate_bound(0.5, RateFormula::Printed) - 1.0).abs() < 1e-15);
    assert!((rate_bound(0.5, RateFormula::Squared) - (4.0f64 / 3.0).log2()).abs() < 1e-15);
    assert_eq!(rate_bound(0.0, RateFormula::Printed), 0.0);
}

#[test]
fn independent_estimate_has_small_correlation() {
    let mut g = rng(66);
    let mut total = 0.0;
    for _ in 0..200 {
        let a = random_vec(&mut g, 2000, 1.0);
        let b = random_vec(&mut g, 2000, 1.0);
        total += evaluate(&a, &b, 0..2000).rate_bound;
    }
    assert!(total / 200.0 < 0.05);
}

#[test]
fn zero_variance_estimate_has_zero_correlation() {
    let x0 = random_vec(&mut rng(67), 10, 1.0);
    assert_eq!(correlation(&[c(2.0, 1.0); 10], &x0, 0..10), 0.0);
    let m = evaluate_with(&[c(0.0, 0.0); 10], &x0, 0..10, RateFormula::Squared);
    assert_eq!((m.rho, m.rate_bound), (0.0, 0.0));
    assert!((m.nmse - 1.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn correlation_is_bounded_and_scale_invariant(seed in 0u64..100_000, re in -5f64..5.0, im in -5f64..5.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let mut g = rng(seed);
        let x0 = random_vec(&mut g, 50, 1.0);
        let noise = random_vec(&mut g, 50, 0.5);
        let xhat: Vec<Complex64> = x0.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let rho = correlation(&xhat, &x0, 0..50);
        prop_assert!((0.0..=1.0).contains(&rho));
        let k = Complex64::new(re, im);
        let scaled: Vec<Complex64> = xhat.iter().map(|v| v * k).collect();
        prop_assert!((correlation(&scaled, &x0, 0..50) - rho).abs() < 1e-12);
        for f in [RateFormula::Printed, RateFormula::Squared] {
            prop_assert!(rate_bound(rho, f) >= 0.0);
        }
        prop_assert!(rate_bound(rho, RateFormula::Printed) >= rate_bound(rho, RateFormula::Squared));
    }

    #[test]
    fn rate_bound_is_monotone(a in 0f64..1.0, b in 0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for f in [RateFormula::Printed, RateFormula::Squared] {
            prop_assert!(rate_bound(lo, f) <= rate_bound(hi, f));
        }
    }
}
