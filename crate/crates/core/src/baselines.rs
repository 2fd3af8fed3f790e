//! Reference estimators: the linear Wiener filter that ignores the
//! front-end nonlinearity, and a genie estimator that knows the true
//! per-sample front-end gain and the desired signal.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::FrontEndParams;
use crate::spectrum::{dft, idft, PriorSpec};

/// Frequency-domain Wiener filter for `y = r + noise` with noise variance
/// `sigma_a2 + sigma_b2`, restricted to the desired band.
pub fn linear_wiener(y: &[Complex64], prior: &PriorSpec, fe: &FrontEndParams) -> Result<Vec<Complex64>> {
    let n = prior.n();
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    let z = dft(y)?;
    let se = fe.sigma_eff2();
    let b0 = prior.layout().band(0);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in b0 {
        let (m, s) = (prior.mu()[i], prior.s()[i]);
        let w = if s + se > 0.0 { s / (s + se) } else { 1.0 };
        out[i] = m + (z[i] - m) * w;
    }
    Ok(out)
}

/// Gain applied by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleGain {
    /// One least-squares complex scalar per trial.
    #[default]
    Scalar,
    /// One least-squares complex gain per bin (exact wherever `z[k] != 0`).
    PerBin,
}

/// Least-squares fit of `x0` on `z` over `band`, zero elsewhere.
pub fn oracle_estimate(y: &[Complex64], x0: &[Complex64], band: Range<usize>) -> Result<Vec<Complex64>> {
    oracle_fit(&dft(y)?, x0, band, OracleGain::Scalar)
}

/// Oracle with the true per-sample front-end gain removed before the
/// transform: `z = V (y / g)`, then a least-squares gain against `x0` on
/// `band`. With unit gain this is [`oracle_estimate`].
pub fn oracle_gain_compensated(
    y: &[Complex64],
    gain: &[f64],
    x0: &[Complex64],
    band: Range<usize>,
    mode: OracleGain,
) -> Result<Vec<Complex64>> {
    if gain.len() != y.len() {
        return Err(Error::LengthMismatch { expected: y.len(), got: gain.len() });
    }
    if gain.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidParameter("front-end gain must be positive".into()));
    }
    let comp: Vec<Complex64> = y.iter().zip(gain).map(|(v, g)| v / g).collect();
    oracle_fit(&dft(&comp)?, x0, band, mode)
}

/// Side information available to the genie estimator.
#[derive(Debug, Clone, Copy)]
pub struct Genie<'a> {
    /// Per-sample front-end gain.
    pub gain: &'a [f64],
    /// Spectrum of everything except the desired band (the realized interferer).
    pub nuisance: &'a [Complex64],
    /// Per-sample noise variance after dividing by the gain.
    pub noise_var: &'a [f64],
    /// Prior variance of each desired-band coefficient.
    pub band_var: f64,
}

/// Per-sample noise variance `sigma_a2 + (sigma_b2 + q) / g^2`, with `q` the
/// complex quantization noise power `step^2 / 6` when a quantizer is present.
pub fn genie_noise_var(gain: &[f64], fe: &FrontEndParams) -> Vec<f64> {
    let q = fe.quantizer.as_ref().map_or(0.0, |q| q.step() * q.step() / 6.0);
    gain.iter().map(|g| fe.sigma_a2 + (fe.sigma_b2 + q) / (g * g)).collect()
}

/// Genie estimator that knows the per-sample gain and the interferer.
///
/// The observation is linearized as `y / g - V^H x_nuisance = V^H x0 + n`
/// with independent heteroscedastic noise, and the desired band is
/// estimated by LMMSE before the same least-squares gain as
/// [`oracle_estimate`]. Under a unit gain and white noise this is
/// [`oracle_estimate`] up to the gain, which the least-squares fit removes.
pub fn oracle_genie(
    y: &[Complex64],
    genie: &Genie<'_>,
    x0: &[Complex64],
    band: Range<usize>,
    mode: OracleGain,
) -> Result<Vec<Complex64>> {
    let n = y.len();
    for len in [genie.gain.len(), genie.nuisance.len(), genie.noise_var.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    if genie.gain.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidParameter("front-end gain must be positive".into()));
    }
    if genie.noise_var.iter().any(|&d| !(d > 0.0)) || !(genie.band_var > 0.0) {
        return Err(Error::InvalidParameter("genie variances must be positive".into()));
    }
    if band.end > n || band.is_empty() {
        return Err(Error::InvalidParameter(format!("band {band:?} invalid for length {n}")));
    }
    let nuisance_t = idft(genie.nuisance)?;
    let w: Vec<f64> = genie.noise_var.iter().map(|d| 1.0 / d).collect();
    let weighted: Vec<Complex64> = (0..n).map(|i| (y[i] / genie.gain[i] - nuisance_t[i]) * w[i]).collect();
    let rhs_full = dft(&weighted)?;
    // A^H D^-1 A is Toeplitz: entry (k, l) depends on l - k only.
    let c = idft(&w.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>())?;
    let scale = 1.0 / (n as f64).sqrt();
    let m = band.len();
    let mut gram = DMatrix::from_fn(m, m, |k, l| c[(l + n - k) % n] * scale);
    for k in 0..m {
        gram[(k, k)] += 1.0 / genie.band_var;
    }
    let rhs = DVector::from_iterator(m, band.clone().map(|k| rhs_full[k]));
    let sol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("genie system is not positive definite".into()))?
        .solve(&rhs);
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (a, k) in band.clone().enumerate() {
        z[k] = sol[a];
    }
    oracle_fit(&z, x0, band, mode)
}

fn oracle_fit(z: &[Complex64], x0: &[Complex64], band: Range<usize>, mode: OracleGain) -> Result<Vec<Complex64>> {
    if x0.len() != z.len() {
        return Err(Error::LengthMismatch { expected: z.len(), got: x0.len() });
    }
    if band.end > z.len() {
        return Err(Error::InvalidParameter(format!("band {band:?} exceeds length {}", z.len())));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
    match mode {
        OracleGain::Scalar => {
            let num: Complex64 = band.clone().map(|i| z[i].conj() * x0[i]).sum();
            let den: f64 = band.clone().map(|i| z[i].norm_sqr()).sum();
            if den > 0.0 {
                let a = num / den;
                for i in band {
                    out[i] = a * z[i];
                }
            }
        }
        OracleGain::PerBin => {
            for i in band {
                if z[i].norm_sqr() > 0.0 {
                    out[i] = x0[i];
                }
            }
        }
    }
    Ok(out)
}
