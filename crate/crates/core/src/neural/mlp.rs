use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Hidden width of every network.
pub const HIDDEN: usize = 64;
/// Upper clamp on the `(gamma P_sat)^-1` feature.
pub const PRECISION_FEATURE_CAP: f64 = 1e3;

pub const F1_INPUTS: usize = 3;
pub const F1_OUTPUTS: usize = 3;
pub const F0_INPUTS: usize = 4;
pub const F0_OUTPUTS: usize = 2;

/// Initial output bias of f1: `kappa0 = 0.5`, `kappa1 = 1`, `log x_var = 0`.
pub const F1_BIAS_INIT: [f64; 3] = [0.5, 1.0, 0.0];
/// Initial output bias of f0: `(beta0, beta1) = (1, 0)`.
pub const F0_BIAS_INIT: [f64; 2] = [1.0, 0.0];

/// Two-layer perceptron `w2 sigmoid(w1 x + b1) + b2`.
///
/// `w1` is `hidden x d_in` and `w2` is `d_out x hidden`, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub d_in: usize,
    pub hidden: usize,
    pub d_out: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpWeights {
    pub fn zeros(d_in: usize, hidden: usize, d_out: usize) -> Self {
        Self {
            d_in,
            hidden,
            d_out,
            w1: vec![0.0; hidden * d_in],
            b1: vec![0.0; hidden],
            w2: vec![0.0; d_out * hidden],
            b2: vec![0.0; d_out],
        }
    }

    /// Uniform `+-sqrt(6 / (d_in + hidden))` hidden layer, zero output weights
    /// and the given output bias.
    pub fn init<R: Rng + ?Sized>(d_in: usize, b2: &[f64], rng: &mut R) -> Self {
        let mut w = Self::zeros(d_in, HIDDEN, b2.len());
        let lim = (6.0 / (d_in + HIDDEN) as f64).sqrt();
        for v in w.w1.iter_mut().chain(w.b1.iter_mut()) {
            *v = rng.random_range(-lim..lim);
        }
        w.b2.copy_from_slice(b2);
        w
    }

    pub fn init_f1<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::init(F1_INPUTS, &F1_BIAS_INIT, rng)
    }

    pub fn init_f0<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::init(F0_INPUTS, &F0_BIAS_INIT, rng)
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in the order `w1, b1, w2, b2`.
    pub fn flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::LengthMismatch { expected: self.num_params(), got: p.len() });
        }
        let mut rest = p;
        for dst in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }

    fn check_shape(&self) -> Result<()> {
        let ok = self.w1.len() == self.hidden * self.d_in
            && self.b1.len() == self.hidden
            && self.w2.len() == self.d_out * self.hidden
            && self.b2.len() == self.d_out;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("MLP weight arrays do not match declared dimensions".into()))
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `w2 sigmoid(w1 features + b1) + b2`.
pub fn mlp_forward(w: &MlpWeights, features: &[f64]) -> Result<Vec<f64>> {
    w.check_shape()?;
    if features.len() != w.d_in {
        return Err(Error::LengthMismatch { expected: w.d_in, got: features.len() });
    }
    let act: Vec<f64> = (0..w.hidden)
        .map(|k| {
            let row = &w.w1[k * w.d_in..(k + 1) * w.d_in];
            sigmoid(w.b1[k] + row.iter().zip(features).map(|(a, b)| a * b).sum::<f64>())
        })
        .collect();
    Ok((0..w.d_out)
        .map(|o| {
            let row = &w.w2[o * w.hidden..(o + 1) * w.hidden];
            w.b2[o] + row.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect())
}

/// `(gamma P_sat)^-1` clamped to `[0, PRECISION_FEATURE_CAP]`.
pub fn precision_feature(gamma: f64, p_sat: f64) -> f64 {
    let v = 1.0 / (gamma * p_sat);
    if v > PRECISION_FEATURE_CAP {
        log::trace!("precision feature {v:.3e} clamped");
    }
    v.clamp(0.0, PRECISION_FEATURE_CAP)
}

pub fn f1_features(z1: Complex64, gamma1: f64, y: Complex64, p_sat: f64) -> [f64; 3] {
    let s = p_sat.sqrt();
    [z1.norm() / s, precision_feature(gamma1, p_sat), y.norm() / s]
}

pub fn f0_features(z0: Complex64, gamma0: f64, s: f64, mu: Complex64, p_sat: f64) -> [f64; 4] {
    let r = p_sat.sqrt();
    [z0.norm() / r, precision_feature(gamma0, p_sat), s / p_sat, mu.norm() / r]
}

fn check_positive(gamma: f64, p_sat: f64) -> Result<()> {
    if !(gamma > 0.0) || !(p_sat > 0.0) {
        return Err(Error::InvalidParameter(format!("precision {gamma} and P_sat {p_sat} must be positive")));
    }
    Ok(())
}

/// Output correction of the time-domain layer for one sample.
///
/// Returns `(v, rho1)` with `v = z1 + kappa0 (y - kappa1 z1)` and
/// `rho1 = gamma1 exp(-log x_var)`.
pub fn f1_apply(z1: Complex64, gamma1: f64, y: Complex64, p_sat: f64, w: &MlpWeights) -> Result<(Complex64, f64)> {
    check_positive(gamma1, p_sat)?;
    let out = mlp_forward(w, &f1_features(z1, gamma1, y, p_sat))?;
    if out.len() != F1_OUTPUTS {
        return Err(Error::LengthMismatch { expected: F1_OUTPUTS, got: out.len() });
    }
    f1_combine(z1, gamma1, y, [out[0], out[1], out[2]])
}

/// Combines raw coefficients `[kappa0, kappa1, log x_var]` into `(v, rho1)`.
pub fn f1_combine(z1: Complex64, gamma1: f64, y: Complex64, raw: [f64; 3]) -> Result<(Complex64, f64)> {
    let [k0, k1, lxv] = raw;
    if !raw.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite f1 output {raw:?}")));
    }
    let v = z1 + (y - z1 * k1) * k0;
    let rho1 = gamma1 * (-lxv).exp();
    Ok((v, rho1))
}

/// Per-sample `rho0` pair; its mean over samples is `(beta0, beta1)`.
pub fn f0_apply(z0: Complex64, gamma0: f64, s: f64, mu: Complex64, p_sat: f64, w: &MlpWeights) -> Result<[f64; 2]> {
    check_positive(gamma0, p_sat)?;
    let out = mlp_forward(w, &f0_features(z0, gamma0, s, mu, p_sat))?;
    if out.len() != F0_OUTPUTS {
        return Err(Error::LengthMismatch { expected: F0_OUTPUTS, got: out.len() });
    }
    if !out.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite f0 output {out:?}")));
    }
    Ok([out[0], out[1]])
}
