//! Bayesian ML-VAMP reference for the two-layer chain `x -> r = V^H x -> y`.
//!
//! The spectral denoiser is exact (per-bin Wiener shrinkage). The nonlinear
//! denoiser uses the quadrature reference in [`quadrature`], which is far
//! slower than the learned path and is meant for tests and small-N studies.

pub mod quadrature;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frontend::FrontEndParams;
use crate::spectrum::{PriorSpec, UnitaryDft};

pub use quadrature::{nonlinear_denoise_oracle, nonlinear_denoise_oracle_with, QuadratureConfig, ScalarPosterior};

/// Upper clamp applied to divergences before the Onsager division.
pub const ALPHA_MAX: f64 = 1.0 - 1e-6;
/// Precision clamp for the reference recursion.
pub const GAMMA_RANGE: (f64, f64) = (1e-12, 1e12);

/// Per-bin Wiener shrinkage toward the prior mean.
///
/// Returns `(xhat, alpha0)` with `alpha0` the average divergence
/// `sum_l |B_l|/N * gamma0 S_l / (1 + gamma0 S_l)`.
pub fn spectral_denoise(z0: &[Complex64], gamma0: f64, prior: &PriorSpec) -> Result<(Vec<Complex64>, f64)> {
    check_gamma(gamma0)?;
    let n = prior.n();
    if z0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: z0.len() });
    }
    let mut alpha = 0.0;
    let xhat = z0
        .iter()
        .zip(prior.mu())
        .zip(prior.s())
        .map(|((&z, &m), &s)| {
            let g = wiener_gain(gamma0, s);
            alpha += g;
            m + (z - m) * g
        })
        .collect();
    Ok((xhat, alpha / n as f64))
}

fn check_gamma(gamma0: f64) -> Result<()> {
    if !(gamma0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("precision {gamma0} < 0")));
    }
    Ok(())
}

#[inline]
fn wiener_gain(gamma: f64, s: f64) -> f64 {
    if gamma.is_infinite() {
        return if s > 0.0 { 1.0 } else { 0.0 };
    }
    gamma * s / (1.0 + gamma * s)
}

/// Mean posterior variance `<S / (1 + gamma0 S)>` of the spectral denoiser.
pub fn spectral_posterior_variance(gamma0: f64, prior: &PriorSpec) -> f64 {
    prior.s().iter().map(|&s| s / (1.0 + gamma0 * s)).sum::<f64>() / prior.n() as f64
}

/// Central finite-difference estimate of `(1/N) sum_i d Re xhat[i] / d Re z0[i]`.
pub fn spectral_denoise_divergence_check(z0: &[Complex64], gamma0: f64, prior: &PriorSpec) -> Result<f64> {
    check_gamma(gamma0)?;
    let n = prior.n();
    if z0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: z0.len() });
    }
    let mut total = 0.0;
    let mut probe = z0.to_vec();
    for i in 0..n {
        let h = 1e-6 * (1.0 + z0[i].re.abs());
        probe[i].re = z0[i].re + h;
        let up = spectral_denoise(&probe, gamma0, prior)?.0[i].re;
        probe[i].re = z0[i].re - h;
        let down = spectral_denoise(&probe, gamma0, prior)?.0[i].re;
        probe[i] = z0[i];
        total += (up - down) / (2.0 * h);
    }
    Ok(total / n as f64)
}

/// Messages and estimates of one ML-VAMP round.
#[derive(Debug, Clone, PartialEq)]
pub struct VampState {
    pub iteration: usize,
    /// Frequency-domain message into the spectral denoiser.
    pub z0: Vec<Complex64>,
    /// Time-domain message into the nonlinear denoiser.
    pub z1: Vec<Complex64>,
    pub gamma0: f64,
    pub gamma1: f64,
    /// Spectral estimate `G0(z0, gamma0)` for the current `z0`.
    pub xhat: Vec<Complex64>,
    pub rhat: Vec<Complex64>,
    pub alpha0: f64,
    pub alpha1: f64,
}

impl VampState {
    /// `z0 = 0`, `gamma0 = 0`, hence `xhat = mu`.
    pub fn initial(prior: &PriorSpec) -> Self {
        let n = prior.n();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Self {
            iteration: 0,
            z0: zero.clone(),
            z1: zero.clone(),
            gamma0: 0.0,
            gamma1: 0.0,
            xhat: prior.mu().to_vec(),
            rhat: zero,
            alpha0: 0.0,
            alpha1: 0.0,
        }
    }
}

fn clamp_alpha(alpha: f64, which: &str, iteration: usize) -> f64 {
    if !(0.0..=ALPHA_MAX).contains(&alpha) {
        log::warn!("iteration {iteration}: {which} = {alpha:.3e} clamped");
    }
    alpha.clamp(0.0, ALPHA_MAX)
}

fn clamp_gamma(gamma: f64, which: &str, iteration: usize) -> f64 {
    let (lo, hi) = GAMMA_RANGE;
    if !(lo..=hi).contains(&gamma) {
        log::warn!("iteration {iteration}: {which} = {gamma:.3e} clamped");
    }
    if gamma.is_nan() {
        return lo;
    }
    gamma.clamp(lo, hi)
}

/// One full round: spectral denoising, Onsager message to the time domain,
/// per-sample nonlinear MMSE denoising, and the reverse message.
///
/// Precision updates use `gamma_out = 1/eta - gamma_in`, where `eta` is the
/// mean posterior variance, which equals `gamma_in (1/alpha - 1)` and stays
/// finite at the `gamma0 = 0` start.
pub fn mlvamp_step(state: &VampState, prior: &PriorSpec, fe: &FrontEndParams, y: &[Complex64]) -> Result<VampState> {
    mlvamp_step_with(state, prior, fe, y, &QuadratureConfig::default())
}

pub fn mlvamp_step_with(
    state: &VampState,
    prior: &PriorSpec,
    fe: &FrontEndParams,
    y: &[Complex64],
    quad: &QuadratureConfig,
) -> Result<VampState> {
    let n = prior.n();
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    let it = state.iteration;
    let dft = UnitaryDft::new(n)?;

    let (xhat, alpha0) = spectral_denoise(&state.z0, state.gamma0, prior)?;
    let eta0 = spectral_posterior_variance(state.gamma0, prior);
    if !(eta0 > 0.0) {
        return Err(Error::InvalidParameter("prior has no unknown components".into()));
    }
    let a0 = clamp_alpha(alpha0, "alpha0", it);
    let mut z1: Vec<Complex64> = xhat.iter().zip(&state.z0).map(|(x, z)| (x - z * a0) / (1.0 - a0)).collect();
    dft.inverse_in_place(&mut z1)?;
    let gamma1 = clamp_gamma(1.0 / eta0 - state.gamma0, "gamma1", it);

    let posts: Vec<ScalarPosterior> = z1
        .par_iter()
        .zip(y.par_iter())
        .map(|(&z, &yi)| nonlinear_denoise_oracle_with(z, gamma1, yi, fe, quad))
        .collect::<Result<_>>()?;
    let rhat: Vec<Complex64> = posts.iter().map(|p| p.mean).collect();
    let eta1 = posts.iter().map(|p| p.variance).sum::<f64>() / n as f64;
    let alpha1 = gamma1 * eta1;
    let a1 = clamp_alpha(alpha1, "alpha1", it);
    let mut z0: Vec<Complex64> = rhat.iter().zip(&z1).map(|(r, z)| (r - z * a1) / (1.0 - a1)).collect();
    dft.forward_in_place(&mut z0)?;
    let gamma0 = clamp_gamma(1.0 / eta1 - gamma1, "gamma0", it);

    let (xnext, _) = spectral_denoise(&z0, gamma0, prior)?;
    Ok(VampState { iteration: it + 1, z0, z1, gamma0, gamma1, xhat: xnext, rhat, alpha0, alpha1 })
}

/// Runs `iterations` rounds from the standard initialization.
pub fn mlvamp(prior: &PriorSpec, fe: &FrontEndParams, y: &[Complex64], iterations: usize) -> Result<Vec<VampState>> {
    let mut states = vec![VampState::initial(prior)];
    for _ in 0..iterations {
        let next = mlvamp_step(states.last().expect("non-empty"), prior, fe, y)?;
        states.push(next);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, stream};
    use crate::spectrum::BandLayout;

    fn two_band_prior(n: usize, s0: f64, s1: f64) -> PriorSpec {
        let layout = BandLayout::new(n, vec![0..n / 5, n / 2..n / 2 + n / 5]).unwrap();
        PriorSpec::unknown(layout, &[s0, s1]).unwrap()
    }

    #[test]
    fn zero_precision_returns_prior_mean() {
        let p = two_band_prior(64, 3.0, 7.0);
        let z: Vec<Complex64> = (0..64).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let (x, a) = spectral_denoise(&z, 0.0, &p).unwrap();
        assert_eq!(x, p.mu());
        assert_eq!(a, 0.0);
        assert!(spectral_denoise(&z, -1.0, &p).is_err());
    }

    #[test]
    fn half_gain_divergence() {
        let layout = BandLayout::table_default();
        let p = PriorSpec::unknown(layout, &[2.0, 2.0]).unwrap();
        let z = vec![Complex64::new(1.0, 1.0); 512];
        let (x, a) = spectral_denoise(&z, 0.5, &p).unwrap();
        assert_eq!(a, 0.195_312_5);
        assert_eq!(x[10], Complex64::new(0.5, 0.5));
        assert_eq!(x[200], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn high_precision_passes_observation() {
        let p = two_band_prior(64, 3.0, 7.0);
        let mut rng = stream(1, &[], 0);
        let z: Vec<Complex64> = (0..64).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let (x, _) = spectral_denoise(&z, 1e12, &p).unwrap();
        for i in 0..64 {
            if p.s()[i] > 0.0 {
                assert!((x[i] - z[i]).norm() <= 1e-9 * z[i].norm());
            }
        }
    }

    #[test]
    fn divergence_check_degenerate_cases() {
        let p = two_band_prior(32, 3.0, 7.0);
        let z = vec![Complex64::new(0.3, 0.1); 32];
        assert_eq!(spectral_denoise_divergence_check(&z, 0.0, &p).unwrap(), 0.0);
        let flat = two_band_prior(32, 0.0, 0.0);
        assert_eq!(spectral_denoise_divergence_check(&z, 2.0, &flat).unwrap(), 0.0);
    }

    #[test]
    fn initial_state_estimate_is_prior_mean() {
        let layout = BandLayout::new(16, vec![0..4, 8..12]).unwrap();
        let mu: Vec<Complex64> = (0..4).map(|k| Complex64::new(1.0, k as f64)).collect();
        let p = PriorSpec::unknown(layout, &[1.0, 0.0]).unwrap().with_known_band(1, &mu).unwrap();
        let s = VampState::initial(&p);
        assert_eq!(s.xhat, p.mu());
        assert!(
            mlvamp(&p, &FrontEndParams::new(1.0, 0.1, 0.1, None).unwrap(), &[Complex64::new(0.0, 0.0); 16], 0).unwrap()
                [0]
            .xhat
                == p.mu()
        );
    }
}
