//! Frequency/time-domain signal model.
//!
//! Frequency bins are indexed `0..N` without any shift. The transform pair is
//! unitary: `dft` applies `V` and `idft` applies `V^H`, both scaled by
//! `1/sqrt(N)`, so `idft(dft(r)) == r` and norms are preserved.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::complex_normal;

/// Cached forward/inverse plans for one transform length.
#[derive(Clone)]
pub struct UnitaryDft {
    n: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("n", &self.n).finish()
    }
}

fn plan_cache() -> &'static Mutex<HashMap<usize, UnitaryDft>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, UnitaryDft>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl UnitaryDft {
    /// Plans (or fetches cached plans for) a length-`n` transform.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("transform length must be >= 1".into()));
        }
        let mut cache = plan_cache().lock().expect("plan cache poisoned");
        let dft = cache.entry(n).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            UnitaryDft {
                n,
                scale: 1.0 / (n as f64).sqrt(),
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            }
        });
        Ok(dft.clone())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: len });
        }
        Ok(())
    }

    /// `x <- V x` in place.
    pub fn forward_in_place(&self, x: &mut [Complex64]) -> Result<()> {
        self.check(x.len())?;
        self.fwd.process(x);
        x.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }

    /// `x <- V^H x` in place.
    pub fn inverse_in_place(&self, x: &mut [Complex64]) -> Result<()> {
        self.check(x.len())?;
        self.inv.process(x);
        x.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }

    pub fn forward(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = r.to_vec();
        self.forward_in_place(&mut out)?;
        Ok(out)
    }

    pub fn inverse(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = x.to_vec();
        self.inverse_in_place(&mut out)?;
        Ok(out)
    }
}

/// Unitary DFT `V r` of a time-domain vector of any length >= 1.
pub fn dft(r: &[Complex64]) -> Result<Vec<Complex64>> {
    UnitaryDft::new(r.len())?.forward(r)
}

/// Unitary inverse DFT `V^H x`.
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    UnitaryDft::new(x.len())?.inverse(x)
}

/// `N` bins and `L` pairwise disjoint half-open bin intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandLayout {
    n: usize,
    bands: Vec<Range<usize>>,
}

impl BandLayout {
    pub fn new(n: usize, bands: Vec<Range<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLayout("N must be positive".into()));
        }
        for (l, b) in bands.iter().enumerate() {
            if b.start > b.end || b.end > n {
                return Err(Error::InvalidLayout(format!("band {l} = [{}, {}) outside [0, {n})", b.start, b.end)));
            }
        }
        for (l, a) in bands.iter().enumerate() {
            for (k, b) in bands.iter().enumerate().skip(l + 1) {
                if a.start < b.end && b.start < a.end {
                    return Err(Error::InvalidLayout(format!("bands {l} and {k} overlap")));
                }
            }
        }
        Ok(Self { n, bands })
    }

    /// The two-band layout used throughout the experiments.
    pub fn table_default() -> Self {
        Self::new(512, vec![0..100, 300..400]).expect("valid default layout")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bands(&self) -> &[Range<usize>] {
        &self.bands
    }

    pub fn band(&self, l: usize) -> Range<usize> {
        self.bands[l].clone()
    }

    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    /// Index of the band containing bin `i`, if any.
    pub fn band_of(&self, i: usize) -> Option<usize> {
        self.bands.iter().position(|b| b.contains(&i))
    }

    /// Binary mask selecting band `l`.
    pub fn mask(&self, l: usize) -> Vec<f64> {
        let b = &self.bands[l];
        (0..self.n).map(|i| if b.contains(&i) { 1.0 } else { 0.0 }).collect()
    }
}

/// Per-bin Gaussian prior `x[i] ~ N_C(mu[i], s[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    layout: BandLayout,
    mu: Vec<Complex64>,
    s: Vec<f64>,
}

impl PriorSpec {
    /// Validates that the prior vanishes outside the bands and that the
    /// variance is constant on each band.
    pub fn new(layout: BandLayout, mu: Vec<Complex64>, s: Vec<f64>) -> Result<Self> {
        let n = layout.n();
        if mu.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: mu.len() });
        }
        if s.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: s.len() });
        }
        for i in 0..n {
            if !(s[i] >= 0.0 && s[i].is_finite()) {
                return Err(Error::InvalidParameter(format!("S[{i}] = {} is not a variance", s[i])));
            }
            if layout.band_of(i).is_none() && (s[i] != 0.0 || mu[i] != Complex64::new(0.0, 0.0)) {
                return Err(Error::InvalidParameter(format!("prior nonzero at out-of-band bin {i}")));
            }
        }
        for (l, b) in layout.bands().iter().enumerate() {
            if let Some(first) = b.clone().next() {
                if s[b.clone()].iter().any(|&v| v != s[first]) {
                    return Err(Error::InvalidParameter(format!("S not constant on band {l}")));
                }
            }
        }
        Ok(Self { layout, mu, s })
    }

    /// Zero-mean prior with variance `band_var[l]` on band `l`.
    pub fn unknown(layout: BandLayout, band_var: &[f64]) -> Result<Self> {
        if band_var.len() != layout.num_bands() {
            return Err(Error::InvalidParameter(format!(
                "{} band variances for {} bands",
                band_var.len(),
                layout.num_bands()
            )));
        }
        let mut s = vec![0.0; layout.n()];
        for (b, &v) in layout.bands().iter().zip(band_var) {
            s[b.clone()].iter_mut().for_each(|x| *x = v);
        }
        let mu = vec![Complex64::new(0.0, 0.0); layout.n()];
        Self::new(layout, mu, s)
    }

    /// Replaces band `l` by a known realization (`S = 0`, `mu = values`).
    pub fn with_known_band(mut self, l: usize, values: &[Complex64]) -> Result<Self> {
        let b = self.layout.band(l);
        if values.len() != b.len() {
            return Err(Error::LengthMismatch { expected: b.len(), got: values.len() });
        }
        for (i, v) in b.zip(values) {
            self.mu[i] = *v;
            self.s[i] = 0.0;
        }
        Ok(self)
    }

    /// Replaces band `l` by an unknown zero-mean component of variance `var`.
    pub fn with_unknown_band(mut self, l: usize, var: f64) -> Result<Self> {
        if !(var >= 0.0) {
            return Err(Error::InvalidParameter(format!("band variance {var}")));
        }
        for i in self.layout.band(l) {
            self.mu[i] = Complex64::new(0.0, 0.0);
            self.s[i] = var;
        }
        Ok(self)
    }

    pub fn layout(&self) -> &BandLayout {
        &self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn mu(&self) -> &[Complex64] {
        &self.mu
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Constant variance `S_l` of band `l` (0 for an empty band).
    pub fn band_variance(&self, l: usize) -> f64 {
        self.layout.band(l).next().map_or(0.0, |i| self.s[i])
    }

    /// Empirical mean `<S>` over all `N` bins.
    pub fn mean_variance(&self) -> f64 {
        self.s.iter().sum::<f64>() / self.n() as f64
    }
}

/// Frequency-domain draw `x` and its time-domain samples `r = V^H x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRealization {
    pub x: Vec<Complex64>,
    pub r: Vec<Complex64>,
}

/// Converts a dB ratio to linear.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Builds the two-band prior for given SNR/INR (dB, relative to `sigma_a2`).
///
/// Band 0 is the desired user and is always unknown. Band 1 is the
/// interferer; when `interferer_known` a realization is drawn into `mu` and
/// its variance set to zero.
pub fn prior_from_scenario<R: Rng + ?Sized>(
    layout: &BandLayout,
    snr_db: f64,
    inr_db: f64,
    sigma_a2: f64,
    interferer_known: bool,
    rng: &mut R,
) -> Result<PriorSpec> {
    prior_from_linear(layout, db_to_linear(snr_db), db_to_linear(inr_db), sigma_a2, interferer_known, rng)
}

/// Same as [`prior_from_scenario`] with linear power ratios.
pub fn prior_from_linear<R: Rng + ?Sized>(
    layout: &BandLayout,
    snr: f64,
    inr: f64,
    sigma_a2: f64,
    interferer_known: bool,
    rng: &mut R,
) -> Result<PriorSpec> {
    if layout.num_bands() != 2 {
        return Err(Error::InvalidLayout(format!("scenario priors need exactly 2 bands, got {}", layout.num_bands())));
    }
    let (b0, b1) = (layout.band(0).len(), layout.band(1).len());
    if b0 == 0 || b1 == 0 {
        return Err(Error::InvalidLayout("desired and interferer bands must be non-empty".into()));
    }
    if !(snr >= 0.0 && inr >= 0.0 && sigma_a2 >= 0.0) {
        return Err(Error::InvalidParameter("power ratios must be non-negative".into()));
    }
    let n = layout.n() as f64;
    let s0 = snr * n * sigma_a2 / b0 as f64;
    let s1 = inr * n * sigma_a2 / b1 as f64;
    let prior = PriorSpec::unknown(layout.clone(), &[s0, s1])?;
    if interferer_known {
        let values: Vec<Complex64> = (0..b1).map(|_| complex_normal(rng, s1)).collect();
        prior.with_known_band(1, &values)
    } else {
        Ok(prior)
    }
}

/// Draws `x[i] ~ N_C(mu[i], S[i])` independently and `r = V^H x`.
pub fn sample_signal<R: Rng + ?Sized>(prior: &PriorSpec, rng: &mut R) -> Result<SignalRealization> {
    let x: Vec<Complex64> =
        prior.mu.iter().zip(&prior.s).map(|(&m, &s)| if s > 0.0 { m + complex_normal(rng, s) } else { m }).collect();
    let r = idft(&x)?;
    Ok(SignalRealization { x, r })
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}
