mod common;

use common::{c, random_vec, rel, rng};
use lmlvamp::frontend::{
    apply_frontend, apply_frontend_with_noise, quantize, saturate, soft_gain, FrontEndParams, QuantizerParams,
};
use lmlvamp::Complex64;
use proptest::prelude::*;

#[test]
fn soft_gain_values() {
    assert_eq!(soft_gain(0.0).unwrap(), 1.0);
    assert!(rel(soft_gain(1.0).unwrap(), 1f64.tanh()) < 1e-15);
    assert!(rel(soft_gain(1.0).unwrap(), 0.761_594_155_955_764_9) < 1e-15);
    assert!(rel(soft_gain(1e8).unwrap() * 1e8, 1.0) < 1e-12);
    assert!(soft_gain(-1e-3).is_err());
}

#[test]
fn saturation_examples() {
    assert_eq!(saturate(c(0.0, 0.0), 4.0), c(0.0, 0.0));
    let p: f64 = 9.0;
    let u = Complex64::from_polar(p.sqrt(), 0.7);
    let y = saturate(u, p);
    assert!(rel(y.norm(), 3.0 * 1f64.tanh()) < 1e-14);
    assert!((y.arg() - 0.7).abs() < 1e-14);
    let small = Complex64::from_polar(1e-4 * p.sqrt(), -2.0);
    assert!((saturate(small, p) - small).norm() / small.norm() < 1e-8);
}

#[test]
fn noiseless_linear_limit() {
    let mut g = rng(11);
    let r = random_vec(&mut g, 256, 1.0);
    let fe = FrontEndParams::new(1e12, 0.0, 0.0, None).unwrap();
    let out = apply_frontend(&r, &fe, &mut g);
    for (a, b) in r.iter().zip(&out.y) {
        assert!((a - b).norm() <= 1e-6 * a.norm());
    }
}

#[test]
fn noiseless_output_respects_saturation_level() {
    let mut g = rng(12);
    let r = random_vec(&mut g, 1000, 50.0);
    let fe = FrontEndParams::new(2.0, 0.0, 0.0, None).unwrap();
    let out = apply_frontend(&r, &fe, &mut g);
    assert!(out.y.iter().all(|v| v.norm() <= 2f64.sqrt()));
}

#[test]
fn compression_never_amplifies_noise() {
    let mut g = rng(13);
    let r = vec![c(0.0, 0.0); 100_000];
    let fe = FrontEndParams::new(0.5, 1.0, 0.0, None).unwrap();
    let out = apply_frontend(&r, &fe, &mut g);
    let power = out.y.iter().map(|v| v.norm_sqr()).sum::<f64>() / r.len() as f64;
    let wa = out.w_a.iter().map(|v| v.norm_sqr()).sum::<f64>() / r.len() as f64;
    assert!(power <= wa);
    assert!(rel(wa, 1.0) < 0.02);
}

#[test]
fn returned_noise_has_configured_variances() {
    let mut g = rng(14);
    let r = vec![c(0.0, 0.0); 50_000];
    let fe = FrontEndParams::new(1e4, 2.0, 0.1, None).unwrap();
    let out = apply_frontend(&r, &fe, &mut g);
    let pa = out.w_a.iter().map(|v| v.norm_sqr()).sum::<f64>() / 50_000.0;
    let pb = out.w_b.iter().map(|v| v.norm_sqr()).sum::<f64>() / 50_000.0;
    assert!(rel(pa, 2.0) < 0.03);
    assert!(rel(pb, 0.1) < 0.03);
    for i in 0..100 {
        let expect = saturate(r[i] + out.w_a[i], 1e4) + out.w_b[i];
        assert!((out.y[i] - expect).norm() < 1e-12);
    }
}

#[test]
fn high_resolution_quantizer_is_nearly_transparent() {
    let mut g = rng(15);
    let y = random_vec(&mut g, 20_000, 3.0);
    let rms = 3.0f64.sqrt();
    let q = QuantizerParams::new(16, 0.0, 4.0 * rms).unwrap();
    let yq = quantize(&y, &q);
    let err: f64 = y.iter().zip(&yq).map(|(a, b)| (a - b).norm_sqr()).sum();
    let sig: f64 = y.iter().map(|a| a.norm_sqr()).sum();
    assert!(10.0 * (err / sig).log10() < -80.0);
}

#[test]
fn quantizer_levels_and_clipping() {
    let q = QuantizerParams::new(2, 0.0, 1.0).unwrap();
    assert_eq!(q.levels(), 4);
    assert_eq!(q.step(), 0.5);
    assert_eq!(q.quantize_component(0.1), 0.25);
    assert_eq!(q.quantize_component(-0.1), -0.25);
    assert_eq!(q.quantize_component(10.0), 0.75);
    assert_eq!(q.quantize_component(-10.0), -0.75);
    assert!(QuantizerParams::new(0, 0.0, 1.0).is_err());
    assert!(QuantizerParams::new(4, 0.0, 0.0).is_err());
}

#[test]
fn backoff_full_scale_reference() {
    let q = QuantizerParams::with_backoff(10, 12.0, 100.0, 1e4, 1.0, 0.1).unwrap();
    let expect = ((101.0f64 + 0.1) / 2.0).sqrt() * 10f64.powf(0.6);
    assert!(rel(q.full_scale, expect) < 1e-14);
    let capped = QuantizerParams::with_backoff(10, 12.0, 1e7, 1e4, 1.0, 0.1).unwrap();
    assert!(rel(capped.full_scale, ((1e4f64 + 0.1) / 2.0).sqrt() * 10f64.powf(0.6)) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn phase_is_preserved(mag in 1e-6f64..1e6, ph in -3.1f64..3.1, p in 1e-3f64..1e6) {
        let u = Complex64::from_polar(mag, ph);
        let y = saturate(u, p);
        prop_assert!((y.arg() - ph).abs() < 1e-12);
        prop_assert!(y.norm() <= p.sqrt() * (1.0 + 4.0 * f64::EPSILON));
        prop_assert!(y.norm() <= mag * (1.0 + 1e-15));
    }

    #[test]
    fn soft_gain_is_monotone(a in 0f64..50.0, d in 0f64..5.0) {
        let ga = soft_gain(a).unwrap();
        let gb = soft_gain(a + d).unwrap();
        prop_assert!(gb <= ga);
        prop_assert!(ga > 0.0 && ga <= 1.0);
    }

    #[test]
    fn soft_gain_is_continuous_at_zero(eps in 0f64..1e-2) {
        prop_assert!((soft_gain(eps).unwrap() - 1.0).abs() < eps * eps / 2.0 + 1e-16);
    }

    #[test]
    fn quantizer_is_monotone_and_bounded(
        bits in 1u32..12, a in 0.1f64..10.0, v1 in -20f64..20.0, d in 0f64..5.0,
    ) {
        let q = QuantizerParams::new(bits, 0.0, a).unwrap();
        prop_assert!(q.quantize_component(v1) <= q.quantize_component(v1 + d));
        if v1.abs() <= a {
            prop_assert!((q.quantize_component(v1) - v1).abs() <= q.step() / 2.0 + 1e-12);
        }
        let once = q.quantize_sample(Complex64::new(v1, -v1));
        prop_assert_eq!(q.quantize_sample(once), once);
    }

    #[test]
    fn frontend_is_memoryless(seed in 0u64..1000, shift in 1usize..31) {
        let mut g = rng(seed);
        let r = random_vec(&mut g, 32, 4.0);
        let wa = random_vec(&mut g, 32, 1.0);
        let wb = random_vec(&mut g, 32, 0.1);
        let fe = FrontEndParams::new(3.0, 1.0, 0.1, Some(QuantizerParams::new(6, 0.0, 2.0).unwrap())).unwrap();
        let base = apply_frontend_with_noise(&r, &fe, wa.clone(), wb.clone());
        let rot = |v: &[Complex64]| { let mut v = v.to_vec(); v.rotate_left(shift); v };
        let moved = apply_frontend_with_noise(&rot(&r), &fe, rot(&wa), rot(&wb));
        prop_assert_eq!(moved.y, rot(&base.y));
        prop_assert_eq!(moved.y_q.unwrap(), rot(base.y_q.as_ref().unwrap()));
    }
}
