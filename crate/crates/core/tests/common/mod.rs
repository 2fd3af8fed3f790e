//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use lmlvamp::rng::{complex_normal, stream, StreamRng};
use lmlvamp::spectrum::PriorSpec;
use lmlvamp::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> StreamRng {
    stream(seed, &[0x7e57], 0)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// `||a - b|| / ||b||` over complex vectors.
pub fn rel_vec(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

pub fn random_vec(rng: &mut StreamRng, n: usize, var: f64) -> Vec<Complex64> {
    (0..n).map(|_| complex_normal(rng, var)).collect()
}

/// Naive O(N^2) unitary DFT.
pub fn naive_dft(r: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = r.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            r.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let ph = sign * 2.0 * std::f64::consts::PI * ((i * k) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, ph)
                })
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// Self-normalized importance sampling of `E[x | z0]` for `z0 = x + n`,
/// `n ~ N_C(0, 1/gamma0)`, drawing `samples` prior proposals per bin.
pub fn mc_spectral_posterior_mean(
    z0: &[Complex64],
    gamma0: f64,
    prior: &PriorSpec,
    samples: usize,
    rng: &mut StreamRng,
) -> Vec<Complex64> {
    z0.iter()
        .enumerate()
        .map(|(i, &z)| {
            let (m, s) = (prior.mu()[i], prior.s()[i]);
            if s == 0.0 {
                return m;
            }
            let (mut num, mut den) = (c(0.0, 0.0), 0.0);
            for _ in 0..samples {
                let x = m + complex_normal(rng, s);
                let w = (-gamma0 * (z - x).norm_sqr()).exp();
                num += x * w;
                den += w;
            }
            num / den
        })
        .collect()
}

fn saturate_ref(u: Complex64, p_sat: f64) -> Complex64 {
    let a = u.norm();
    if a == 0.0 {
        return u;
    }
    let s = p_sat.sqrt();
    u * (s * (a / s).tanh() / a)
}

/// Importance-sampling posterior of `r` given `y = sat(r + w_a) + w_b`
/// with `r ~ N_C(z1, 1/gamma1)`: draws `(r, w_a)` from their priors and
/// weights by the `w_b` density. Returns the mean and `E|r - mean|^2`.
pub fn is_scalar_posterior(
    z1: Complex64,
    gamma1: f64,
    y: Complex64,
    p_sat: f64,
    sigma_a2: f64,
    sigma_b2: f64,
    samples: usize,
    rng: &mut StreamRng,
) -> (Complex64, f64) {
    let mut draws = Vec::with_capacity(samples);
    let mut max_log = f64::NEG_INFINITY;
    for _ in 0..samples {
        let r = z1 + complex_normal(rng, 1.0 / gamma1);
        let u = r + complex_normal(rng, sigma_a2);
        let lw = -(y - saturate_ref(u, p_sat)).norm_sqr() / sigma_b2;
        max_log = max_log.max(lw);
        draws.push((r, lw));
    }
    let (mut num, mut den, mut sq) = (c(0.0, 0.0), 0.0, 0.0);
    for &(r, lw) in &draws {
        let w = (lw - max_log).exp();
        num += r * w;
        sq += r.norm_sqr() * w;
        den += w;
    }
    let mean = num / den;
    (mean, sq / den - mean.norm_sqr())
}

/// Central finite difference of `f` at `x` along coordinate `k`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[k] = x[k] + h;
    let fp = f(&p);
    p[k] = x[k] - h;
    let fm = f(&p);
    (fp - fm) / (2.0 * h)
}

/// Relative gradient error with an absolute floor for near-zero entries.
pub fn grad_err(analytic: f64, fd: f64, floor: f64) -> f64 {
    (analytic - fd).abs() / (analytic.abs().max(fd.abs()) + floor)
}
