//! Correlation, achievable-rate bound and NMSE of a desired-band estimate.

use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Rates are reported no higher than this.
pub const RATE_CAP_BITS: f64 = 30.0;
/// NMSE in dB is floored here.
pub const NMSE_DB_FLOOR: f64 = -150.0;

/// Rate bound as a function of the correlation magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFormula {
    /// `-log2(1 - rho)`.
    #[default]
    Printed,
    /// `-log2(1 - rho^2)`.
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rho: f64,
    pub rate_bound: f64,
    /// Linear NMSE `||xhat - x0||^2 / ||x0||^2`.
    pub nmse: f64,
    pub nmse_db: f64,
}

/// Magnitude of the empirical correlation coefficient over `band`.
///
/// Returns 0 when either side has zero variance.
pub fn correlation(xhat: &[Complex64], x0: &[Complex64], band: Range<usize>) -> f64 {
    pooled_correlation([(xhat, x0)], band)
}

fn finish(cross: Complex64, va: f64, vb: f64) -> f64 {
    if !(va > 0.0 && vb > 0.0) {
        return 0.0;
    }
    (cross.norm() / (va * vb).sqrt()).clamp(0.0, 1.0)
}

#[derive(Default)]
struct Moments {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl Moments {
    fn add(&mut self, a: &[Complex64], b: &[Complex64]) {
        self.a.extend_from_slice(a);
        self.b.extend_from_slice(b);
    }

    fn means(&self) -> (Complex64, Complex64) {
        let n = self.a.len().max(1) as f64;
        (self.a.iter().sum::<Complex64>() / n, self.b.iter().sum::<Complex64>() / n)
    }

    fn pairs(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.a.iter().copied().zip(self.b.iter().copied())
    }
}

/// Correlation with moments pooled across several trials.
pub fn pooled_correlation<'a>(
    trials: impl IntoIterator<Item = (&'a [Complex64], &'a [Complex64])>,
    band: Range<usize>,
) -> f64 {
    let mut acc = Moments::default();
    for (xhat, x0) in trials {
        acc.add(&xhat[band.clone()], &x0[band.clone()]);
    }
    let (ma, mb) = acc.means();
    let (mut cross, mut va, mut vb) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for (a, b) in acc.pairs() {
        let (da, db) = (a - ma, b - mb);
        cross += da * db.conj();
        va += da.norm_sqr();
        vb += db.norm_sqr();
    }
    finish(cross, va, vb)
}

pub fn rate_bound(rho: f64, formula: RateFormula) -> f64 {
    let r = rho.clamp(0.0, 1.0);
    let q = match formula {
        RateFormula::Printed => 1.0 - r,
        RateFormula::Squared => 1.0 - r * r,
    };
    if q <= 0.0 {
        return RATE_CAP_BITS;
    }
    (-q.log2()).clamp(0.0, RATE_CAP_BITS)
}

/// `||xhat - x0||^2 / ||x0||^2` over `band`.
pub fn nmse(xhat: &[Complex64], x0: &[Complex64], band: Range<usize>) -> f64 {
    let err: f64 = band.clone().map(|i| (xhat[i] - x0[i]).norm_sqr()).sum();
    let pow: f64 = band.map(|i| x0[i].norm_sqr()).sum();
    err / pow
}

pub fn to_db_floored(v: f64) -> f64 {
    if v > 0.0 {
        (10.0 * v.log10()).max(NMSE_DB_FLOOR)
    } else {
        NMSE_DB_FLOOR
    }
}

pub fn evaluate(xhat: &[Complex64], x0: &[Complex64], band: Range<usize>) -> Metrics {
    evaluate_with(xhat, x0, band, RateFormula::Printed)
}

pub fn evaluate_with(xhat: &[Complex64], x0: &[Complex64], band: Range<usize>, formula: RateFormula) -> Metrics {
    let rho = correlation(xhat, x0, band.clone());
    let e = nmse(xhat, x0, band);
    Metrics { rho, rate_bound: rate_bound(rho, formula), nmse: e, nmse_db: to_db_floored(e) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Vec<Complex64> {
        (0..12).map(|k| Complex64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos())).collect()
    }

    #[test]
    fn perfect_estimate() {
        let x = sig();
        let m = evaluate(&x, &x, 0..10);
        assert!((m.rho - 1.0).abs() < 1e-12);
        assert_eq!(m.nmse, 0.0);
        assert_eq!(m.nmse_db, NMSE_DB_FLOOR);
        assert_eq!(m.rate_bound, RATE_CAP_BITS);
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate_bound(0.5, RateFormula::Printed), 1.0);
        assert_eq!(rate_bound(0.0, RateFormula::Printed), 0.0);
        assert_eq!(rate_bound(1.0, RateFormula::Squared), RATE_CAP_BITS);
        assert!((rate_bound(0.5, RateFormula::Squared) - (4.0f64 / 3.0).log2()).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_estimate() {
        let x = sig();
        let c = vec![Complex64::new(2.0, 1.0); 12];
        assert_eq!(correlation(&c, &x, 0..10), 0.0);
    }

    #[test]
    fn scale_invariance() {
        let x = sig();
        let y: Vec<Complex64> = x.iter().enumerate().map(|(k, v)| v + Complex64::new(0.1 * k as f64, 0.0)).collect();
        let z: Vec<Complex64> = y.iter().map(|v| v * Complex64::new(-3.0, 0.5)).collect();
        assert!((correlation(&y, &x, 0..12) - correlation(&z, &x, 0..12)).abs() < 1e-12);
        let single = pooled_correlation([(&y[..], &x[..])], 0..12);
        assert!((single - correlation(&y, &x, 0..12)).abs() < 1e-12);
    }
}
