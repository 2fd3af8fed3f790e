//! Memoryless receiver chain: pre-saturation noise, tanh soft saturation,
//! post-saturation noise and an optional uniform quantizer.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_normal;

/// Below this argument `tanh(x)/x` is evaluated by its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// Uniform mid-rise quantizer applied to real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerParams {
    pub bits: u32,
    pub backoff_db: f64,
    /// Clip level `A` per real component; levels span `[-A, A]`.
    pub full_scale: f64,
}

impl QuantizerParams {
    pub fn new(bits: u32, backoff_db: f64, full_scale: f64) -> Result<Self> {
        if bits == 0 || bits > 52 {
            return Err(Error::InvalidParameter(format!("quantizer bits = {bits}")));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("quantizer full scale = {full_scale}")));
        }
        Ok(Self { bits, backoff_db, full_scale })
    }

    /// Full scale placed `backoff_db` above the per-component RMS of the
    /// unquantized output. `E|y|^2` is estimated as
    /// `min(input_power + sigma_a2, p_sat) + sigma_b2`.
    pub fn with_backoff(
        bits: u32,
        backoff_db: f64,
        input_power: f64,
        p_sat: f64,
        sigma_a2: f64,
        sigma_b2: f64,
    ) -> Result<Self> {
        let out_power = (input_power + sigma_a2).min(p_sat) + sigma_b2;
        let rms = (out_power / 2.0).sqrt();
        let full_scale = rms * 10f64.powf(backoff_db / 20.0);
        log::debug!("quantizer: {bits} bits, BO {backoff_db} dB, full scale {full_scale:.6e}");
        Self::new(bits, backoff_db, full_scale)
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    /// Step `2A / 2^b`.
    pub fn step(&self) -> f64 {
        2.0 * self.full_scale / self.levels() as f64
    }

    fn index(&self, v: f64) -> u64 {
        let k = ((v + self.full_scale) / self.step()).floor();
        if k.is_nan() {
            return 0;
        }
        k.clamp(0.0, (self.levels() - 1) as f64) as u64
    }

    fn level(&self, k: u64) -> f64 {
        (k as f64 + 0.5) * self.step() - self.full_scale
    }

    /// Reconstruction level for one real component.
    pub fn quantize_component(&self, v: f64) -> f64 {
        self.level(self.index(v))
    }

    /// Decision interval `[lo, hi)` of the cell containing `v`; the two
    /// outermost cells extend to infinity.
    pub fn cell(&self, v: f64) -> (f64, f64) {
        let k = self.index(v);
        let lo = if k == 0 { f64::NEG_INFINITY } else { k as f64 * self.step() - self.full_scale };
        let hi = if k + 1 == self.levels() { f64::INFINITY } else { (k + 1) as f64 * self.step() - self.full_scale };
        (lo, hi)
    }

    pub fn quantize_sample(&self, y: Complex64) -> Complex64 {
        Complex64::new(self.quantize_component(y.re), self.quantize_component(y.im))
    }
}

/// Applies the quantizer to every sample.
pub fn quantize(y: &[Complex64], q: &QuantizerParams) -> Vec<Complex64> {
    y.iter().map(|&v| q.quantize_sample(v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEndParams {
    pub p_sat: f64,
    pub sigma_a2: f64,
    pub sigma_b2: f64,
    pub quantizer: Option<QuantizerParams>,
}

impl FrontEndParams {
    pub fn new(p_sat: f64, sigma_a2: f64, sigma_b2: f64, quantizer: Option<QuantizerParams>) -> Result<Self> {
        if !(p_sat > 0.0) {
            return Err(Error::InvalidParameter(format!("p_sat = {p_sat}")));
        }
        if !(sigma_a2 >= 0.0 && sigma_b2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variances must be non-negative (got {sigma_a2}, {sigma_b2})"
            )));
        }
        Ok(Self { p_sat, sigma_a2, sigma_b2, quantizer })
    }

    /// Effective noise variance of the linearized chain.
    pub fn sigma_eff2(&self) -> f64 {
        self.sigma_a2 + self.sigma_b2
    }
}

/// `tanh(x)/x` for `x >= 0`, equal to 1 at the origin.
pub fn soft_gain(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::InvalidParameter(format!("soft_gain argument {x} < 0")));
    }
    Ok(soft_gain_unchecked(x))
}

#[inline]
pub(crate) fn soft_gain_unchecked(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}

/// `sqrt(p_sat) tanh(|u|/sqrt(p_sat)) e^{j arg u}`.
#[inline]
pub fn saturate(u: Complex64, p_sat: f64) -> Complex64 {
    u * soft_gain_unchecked(u.norm() / p_sat.sqrt())
}

/// Everything produced by one pass through the front-end.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEndOutput {
    /// Unquantized output `y`.
    pub y: Vec<Complex64>,
    /// Quantized output, when a quantizer is configured.
    pub y_q: Option<Vec<Complex64>>,
    pub w_a: Vec<Complex64>,
    pub w_b: Vec<Complex64>,
    /// Per-sample compression gain `f(|r + w_a| / sqrt(p_sat))`.
    pub gain: Vec<f64>,
}

impl FrontEndOutput {
    /// The observation an estimator sees: `y_q` if quantized, else `y`.
    pub fn observed(&self) -> &[Complex64] {
        self.y_q.as_deref().unwrap_or(&self.y)
    }
}

/// Runs `r` through the chain with fresh noise draws.
pub fn apply_frontend<R: Rng + ?Sized>(r: &[Complex64], params: &FrontEndParams, rng: &mut R) -> FrontEndOutput {
    let w_a: Vec<Complex64> = r.iter().map(|_| complex_normal(rng, params.sigma_a2)).collect();
    let w_b: Vec<Complex64> = r.iter().map(|_| complex_normal(rng, params.sigma_b2)).collect();
    apply_frontend_with_noise(r, params, w_a, w_b)
}

/// Deterministic front-end for given noise realizations.
pub fn apply_frontend_with_noise(
    r: &[Complex64],
    params: &FrontEndParams,
    w_a: Vec<Complex64>,
    w_b: Vec<Complex64>,
) -> FrontEndOutput {
    let scale = params.p_sat.sqrt();
    let mut y = Vec::with_capacity(r.len());
    let mut gain = Vec::with_capacity(r.len());
    for ((&ri, &wa), &wb) in r.iter().zip(&w_a).zip(&w_b) {
        let u = ri + wa;
        let g = soft_gain_unchecked(u.norm() / scale);
        gain.push(g);
        y.push(u * g + wb);
    }
    let y_q = params.quantizer.as_ref().map(|q| quantize(&y, q));
    FrontEndOutput { y, y_q, w_a, w_b, gain }
}
