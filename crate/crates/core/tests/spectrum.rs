mod common;

use common::{naive_dft, random_vec, rel, rng};
use lmlvamp::spectrum::{
    dft, idft, norm_sqr, prior_from_linear, prior_from_scenario, sample_signal, BandLayout, PriorSpec, UnitaryDft,
};
use lmlvamp::Complex64;
use proptest::prelude::*;

#[test]
fn matches_naive_transform() {
    let mut g = rng(1);
    for n in [1, 7, 64, 100] {
        let r = random_vec(&mut g, n, 1.0);
        let fast = dft(&r).unwrap();
        let slow = naive_dft(&r, false);
        let back = idft(&r).unwrap();
        let slow_back = naive_dft(&r, true);
        for k in 0..n {
            assert!((fast[k] - slow[k]).norm() < 1e-12);
            assert!((back[k] - slow_back[k]).norm() < 1e-12);
        }
    }
}

#[test]
fn table_layout() {
    let l = BandLayout::table_default();
    assert_eq!(l.n(), 512);
    assert_eq!(l.band(0), 0..100);
    assert_eq!(l.band(1), 300..400);
    assert_eq!(l.band_of(350), Some(1));
    assert_eq!(l.band_of(200), None);
}

#[test]
fn band_powers_follow_snr_and_inr() {
    let l = BandLayout::table_default();
    let mut g = rng(2);
    let p = prior_from_scenario(&l, 20.0, 50.0, 1.0, false, &mut g).unwrap();
    assert!(rel(p.band_variance(0), 100.0 * 512.0 / 100.0) < 1e-12);
    assert!(rel(p.band_variance(1), 1e5 * 512.0 / 100.0) < 1e-12);
    assert_eq!(p.s()[200], 0.0);
}

#[test]
fn sampled_time_domain_power_matches_prior() {
    // Mean |r|^2 = (snr + inr) sigma_a2 since the transform is unitary.
    let l = BandLayout::table_default();
    let mut g = rng(3);
    let p = prior_from_linear(&l, 10.0, 30.0, 1.0, false, &mut g).unwrap();
    let trials = 400;
    let mut power = 0.0;
    let mut band0 = 0.0;
    for _ in 0..trials {
        let s = sample_signal(&p, &mut g).unwrap();
        power += norm_sqr(&s.r) / 512.0;
        band0 += s.x[0..100].iter().map(|v| v.norm_sqr()).sum::<f64>() / 100.0;
        assert!(s.x[100..300].iter().all(|v| v.norm() == 0.0));
    }
    assert!(rel(power / trials as f64, 40.0) < 0.02);
    assert!(rel(band0 / trials as f64, p.band_variance(0)) < 0.02);
}

#[test]
fn sample_real_and_imaginary_parts_are_balanced() {
    let l = BandLayout::new(64, vec![0..32, 40..50]).unwrap();
    let p = PriorSpec::unknown(l, &[2.0, 0.5]).unwrap();
    let mut g = rng(4);
    let (mut re, mut im, mut cross) = (0.0, 0.0, 0.0);
    let mut count = 0.0;
    for _ in 0..2000 {
        let s = sample_signal(&p, &mut g).unwrap();
        for v in &s.x[0..32] {
            re += v.re * v.re;
            im += v.im * v.im;
            cross += v.re * v.im;
            count += 1.0;
        }
    }
    assert!(rel(re / count, 1.0) < 0.03);
    assert!(rel(im / count, 1.0) < 0.03);
    assert!((cross / count).abs() < 0.03);
}

#[test]
fn known_interferer_is_deterministic_mean() {
    let l = BandLayout::table_default();
    let mut g = rng(5);
    let p = prior_from_scenario(&l, 20.0, 60.0, 1.0, true, &mut g).unwrap();
    assert!(p.s()[300..400].iter().all(|&s| s == 0.0));
    let a = sample_signal(&p, &mut g).unwrap();
    let b = sample_signal(&p, &mut g).unwrap();
    assert_eq!(a.x[300..400], b.x[300..400]);
    assert_eq!(&a.x[300..400], &p.mu()[300..400]);
}

#[test]
fn mismatched_plan_length_is_rejected() {
    let plan = UnitaryDft::new(16).unwrap();
    assert!(plan.forward(&[Complex64::new(1.0, 0.0); 8]).is_err());
    assert!(UnitaryDft::new(0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_and_round_trip(
        parts in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..300),
    ) {
        let r: Vec<Complex64> = parts.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let x = dft(&r).unwrap();
        prop_assert!(rel(norm_sqr(&x), norm_sqr(&r)) < 1e-12 || norm_sqr(&r) == 0.0);
        let back = idft(&x).unwrap();
        for (a, b) in r.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()) * 1e3);
        }
    }

    #[test]
    fn transform_is_linear(
        a in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 32),
        b in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 32),
        k in (-3f64..3.0, -3f64..3.0),
    ) {
        let va: Vec<Complex64> = a.iter().map(|&(p, q)| Complex64::new(p, q)).collect();
        let vb: Vec<Complex64> = b.iter().map(|&(p, q)| Complex64::new(p, q)).collect();
        let k = Complex64::new(k.0, k.1);
        let lhs = dft(&va.iter().zip(&vb).map(|(x, y)| x * k + y).collect::<Vec<_>>()).unwrap();
        let (fa, fb) = (dft(&va).unwrap(), dft(&vb).unwrap());
        for i in 0..32 {
            prop_assert!((lhs[i] - (fa[i] * k + fb[i])).norm() < 1e-10);
        }
    }

    #[test]
    fn layouts_reject_overlaps(s0 in 0usize..60, w0 in 1usize..20, s1 in 0usize..60, w1 in 1usize..20) {
        let overlap = s0 < s1 + w1 && s1 < s0 + w0;
        let res = BandLayout::new(100, vec![s0..s0 + w0, s1..s1 + w1]);
        prop_assert_eq!(res.is_err(), overlap);
    }
}
