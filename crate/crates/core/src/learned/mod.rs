//! Unrolled learned ML-VAMP: inference recursion, loss and training.
//!
//! The recursion is recorded on a [`Tape`] so the same code serves inference
//! and end-to-end training. Line numbers in error messages refer to the
//! steps documented on [`unroll`].

pub mod adam;
pub mod loss;
pub mod train;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::neural::{MlpVars, Tape, UnrolledModel, Var, PRECISION_FEATURE_CAP};
use crate::spectrum::PriorSpec;

pub use adam::Adam;
pub use loss::{loss_total, loss_weights};
pub use train::{generate_dataset, train, Dataset, Sample, TrainConfig, TrainLog, TrainLogRow};

/// Clamp range for `gamma0` and `gamma1` during inference.
pub const GAMMA_CLAMP: (f64, f64) = (1e-8, 1e8);

/// Replaces network outputs with fixed coefficients.
///
/// `f1` receives the iteration and the current `gamma1` and returns
/// `[kappa0, kappa1, log x_var]`; `beta` fixes `(beta0, beta1)`.
#[derive(Default)]
pub struct Forced<'a> {
    pub f1: Option<&'a (dyn Fn(usize, f64) -> [f64; 3] + Sync)>,
    pub beta: Option<[f64; 2]>,
}

/// Network parameters registered on a tape, one entry per distinct
/// iteration (f0 is `None` under `fix_beta`).
#[derive(Debug, Clone)]
pub struct ModelVars {
    pub f1: Vec<MlpVars>,
    pub f0: Vec<Option<MlpVars>>,
}

impl ModelVars {
    pub fn register(tape: &mut Tape, model: &UnrolledModel) -> Self {
        let mut f1 = Vec::new();
        let mut f0 = Vec::new();
        for t in 0..model.distinct_nets() {
            f1.push(tape.mlp_params(&model.f1_weights[t]));
            f0.push((!model.fix_beta).then(|| tape.mlp_params(&model.f0_weights[t])));
        }
        Self { f1, f0 }
    }

    /// All parameter nodes in [`UnrolledModel::params_flat`] order.
    pub fn ordered(&self) -> Vec<Var> {
        let mut v = Vec::new();
        for (f1, f0) in self.f1.iter().zip(&self.f0) {
            v.extend([f1.w1, f1.b1, f1.w2, f1.b2]);
            if let Some(f0) = f0 {
                v.extend([f0.w1, f0.b1, f0.w2, f0.b2]);
            }
        }
        v
    }
}

/// Recorded unrolled pass.
#[derive(Debug)]
pub struct Unrolled {
    /// `xhat^(t)` for `t = 0..T`.
    pub trajectory: Vec<Var>,
    /// `m_B0 . xhat^(T-1)`.
    pub output: Var,
    /// Number of precision clamps that were active.
    pub clamp_count: usize,
}

fn check(tape: &Tape, v: Var, iteration: usize, line: u32, what: &'static str) -> Result<()> {
    if tape.value(v).iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { iteration, line, what })
    }
}

fn clamp_gamma(tape: &mut Tape, g: Var, count: &mut usize) -> Var {
    let (lo, hi) = GAMMA_CLAMP;
    let c = tape.count_outside(g, lo, hi);
    if c > 0 {
        log::debug!("precision {:.3e} clamped", tape.scalar_value(g));
        *count += c;
    }
    tape.clamp(g, lo, hi)
}

fn precision_feature(tape: &mut Tape, gamma: Var, p_sat: f64, n: usize) -> Var {
    let inv = tape.recip(gamma);
    let scaled = tape.affine(inv, 1.0 / p_sat, 0.0);
    let c = tape.clamp(scaled, 0.0, PRECISION_FEATURE_CAP);
    tape.broadcast(c, n)
}

/// Records the learned recursion on `tape`.
///
/// 1. `z1 = V^H mu`, `gamma1 = 1 / <S>`.
/// 2. For `t = 0..T`:
///    * `[kappa0, kappa1, log x_var] = f1(|z1|/sqrt(P), (gamma1 P)^-1, |y|/sqrt(P))`
///    * `v = z1 + kappa0 (y - kappa1 z1)`, `rho1 = gamma1 exp(-log x_var)`
///    * `z0 = V v`; `gamma0 = <rho1>`
///    * `xhat = mu + g (z0 - mu)`, `g = gamma0 S / (1 + gamma0 S)`
///    * when another iteration follows: `gamma1 = gamma0 / <g>`,
///      `(beta0, beta1) = <f0(|z0|/sqrt(P), (gamma0 P)^-1, S/P, |mu|/sqrt(P))>`,
///      `z1 = beta0 V^H xhat - beta1 V^H z0`.
/// 3. Output `m_B0 . xhat^(T-1)`.
pub fn unroll(
    tape: &mut Tape,
    model: &UnrolledModel,
    vars: &ModelVars,
    prior: &PriorSpec,
    y: &[Complex64],
    forced: &Forced<'_>,
) -> Result<Unrolled> {
    let n = prior.n();
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    if model.t_max == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    let p = model.p_sat;
    let sp = p.sqrt();
    let mean_s = prior.mean_variance();
    if !(mean_s > 0.0) {
        return Err(Error::InvalidParameter("prior has zero mean variance".into()));
    }

    let yv = tape.complex_constant(y);
    let mu = tape.complex_constant(prior.mu());
    let s = tape.constant(prior.s().to_vec());
    let y_abs: Vec<f64> = y.iter().map(|v| v.norm() / sp).collect();
    let y_feat = tape.constant(y_abs);
    let s_feat = tape.constant(prior.s().iter().map(|v| v / p).collect());
    let mu_feat = tape.constant(prior.mu().iter().map(|v| v.norm() / sp).collect());

    let mut z1 = tape.idft(mu)?;
    let mut gamma1 = tape.scalar(1.0 / mean_s);
    let mut clamp_count = 0;
    let mut trajectory = Vec::with_capacity(model.t_max);

    for t in 0..model.t_max {
        let k = model.net_index(t);
        let (kappa0, kappa1, lxv) = match forced.f1 {
            Some(f) => {
                let c = f(t, tape.scalar_value(gamma1));
                (tape.constant(vec![c[0]; n]), tape.constant(vec![c[1]; n]), tape.constant(vec![c[2]; n]))
            }
            None => {
                let za = tape.cabs(z1);
                let za = tape.affine(za, 1.0 / sp, 0.0);
                let gf = precision_feature(tape, gamma1, p, n);
                let out = tape.mlp(vars.f1[k], &[za, gf, y_feat])?;
                check(tape, out, t, 5, "f1 output")?;
                (tape.column(out, 0, 3), tape.column(out, 1, 3), tape.column(out, 2, 3))
            }
        };
        let kz = tape.cmul_real(z1, kappa1);
        let d = tape.sub(yv, kz);
        let corr = tape.cmul_real(d, kappa0);
        let v = tape.add(z1, corr);
        let neg = tape.affine(lxv, -1.0, 0.0);
        let ratio = tape.exp(neg);
        let rho1 = tape.scale(ratio, gamma1);
        check(tape, v, t, 6, "v")?;
        check(tape, rho1, t, 6, "rho1")?;

        let z0 = tape.dft(v)?;
        let gamma0 = tape.mean(rho1);
        check(tape, gamma0, t, 8, "gamma0")?;
        let gamma0 = clamp_gamma(tape, gamma0, &mut clamp_count);

        let gs = tape.scale(s, gamma0);
        let den = tape.affine(gs, 1.0, 1.0);
        let g = tape.div(gs, den);
        let dz = tape.sub(z0, mu);
        let shrunk = tape.cmul_real(dz, g);
        let xhat = tape.add(mu, shrunk);
        check(tape, xhat, t, 10, "xhat")?;
        trajectory.push(xhat);

        if t + 1 == model.t_max {
            break;
        }

        let gbar = tape.mean(g);
        let g1 = tape.div(gamma0, gbar);
        check(tape, g1, t, 11, "gamma1")?;
        gamma1 = clamp_gamma(tape, g1, &mut clamp_count);

        let (beta0, beta1) = match (forced.beta, &vars.f0[k]) {
            (Some(b), _) => (tape.scalar(b[0]), tape.scalar(b[1])),
            (None, None) => (tape.scalar(1.0), tape.scalar(0.0)),
            (None, Some(f0)) => {
                let za = tape.cabs(z0);
                let za = tape.affine(za, 1.0 / sp, 0.0);
                let gf = precision_feature(tape, gamma0, p, n);
                let out = tape.mlp(*f0, &[za, gf, s_feat, mu_feat])?;
                check(tape, out, t, 14, "f0 output")?;
                let c0 = tape.column(out, 0, 2);
                let c1 = tape.column(out, 1, 2);
                (tape.mean(c0), tape.mean(c1))
            }
        };
        let xt = tape.idft(xhat)?;
        let zt = tape.idft(z0)?;
        let a = tape.cscale(xt, beta0);
        let b = tape.cscale(zt, beta1);
        z1 = tape.sub(a, b);
        check(tape, z1, t, 16, "z1")?;
    }

    let mask = tape.constant(prior.layout().mask(0));
    let last = *trajectory.last().expect("T >= 1");
    let output = tape.cmul_real(last, mask);
    Ok(Unrolled { trajectory, output, clamp_count })
}

/// Result of [`infer`].
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// `m_B0 . xhat^(T-1)`.
    pub xhat0: Vec<Complex64>,
    /// Unmasked `xhat^(t)`, `t = 0..T`.
    pub trajectory: Vec<Vec<Complex64>>,
    pub clamp_count: usize,
}

/// Runs the learned recursion on one observation.
pub fn infer(y: &[Complex64], prior: &PriorSpec, model: &UnrolledModel) -> Result<Inference> {
    infer_forced(y, prior, model, &Forced::default())
}

pub fn infer_forced(
    y: &[Complex64],
    prior: &PriorSpec,
    model: &UnrolledModel,
    forced: &Forced<'_>,
) -> Result<Inference> {
    let mut tape = Tape::new();
    let vars = ModelVars::register(&mut tape, model);
    let u = unroll(&mut tape, model, &vars, prior, y, forced)?;
    Ok(Inference {
        xhat0: tape.complex_value(u.output),
        trajectory: u.trajectory.iter().map(|&v| tape.complex_value(v)).collect(),
        clamp_count: u.clamp_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, stream};
    use crate::spectrum::BandLayout;

    fn setup(t_max: usize) -> (PriorSpec, UnrolledModel, Vec<Complex64>) {
        let layout = BandLayout::new(32, vec![0..8, 16..24]).unwrap();
        let prior = PriorSpec::unknown(layout, &[4.0, 40.0]).unwrap();
        let mut rng = stream(11, &[], 0);
        let model = UnrolledModel::init(t_max, 50.0, false, false, &mut rng).unwrap();
        let y = (0..32).map(|_| complex_normal(&mut rng, 5.0)).collect();
        (prior, model, y)
    }

    #[test]
    fn output_is_masked_and_trajectory_has_length_t() {
        for t in 1..=3 {
            let (prior, model, y) = setup(t);
            let out = infer(&y, &prior, &model).unwrap();
            assert_eq!(out.trajectory.len(), t);
            for (i, v) in out.xhat0.iter().enumerate() {
                if i < 8 {
                    assert_eq!(*v, out.trajectory[t - 1][i]);
                } else {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn inference_is_deterministic() {
        let (prior, model, y) = setup(2);
        assert_eq!(infer(&y, &prior, &model).unwrap(), infer(&y, &prior, &model).unwrap());
    }

    #[test]
    fn non_finite_weights_report_iteration_and_line() {
        let (prior, mut model, y) = setup(2);
        model.f1_weights[1].b2[0] = f64::NAN;
        match infer(&y, &prior, &model) {
            Err(Error::NonFiniteState { iteration: 1, line: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fix_beta_message_is_inverse_transform_of_estimate() {
        let (prior, mut model, y) = setup(2);
        model.fix_beta = true;
        let mut tape = Tape::new();
        let vars = ModelVars::register(&mut tape, &model);
        let u = unroll(&mut tape, &model, &vars, &prior, &y, &Forced::default()).unwrap();
        let forced = Forced { beta: Some([1.0, 0.0]), ..Default::default() };
        model.fix_beta = false;
        let reference = infer_forced(&y, &prior, &model, &forced).unwrap();
        assert_eq!(tape.complex_value(u.output), reference.xhat0);
    }
}
