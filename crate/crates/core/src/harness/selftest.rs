use num_complex::Complex64;

use crate::error::Result;
use crate::frontend::{soft_gain, FrontEndParams, QuantizerParams};
use crate::learned::train::sample_loss_grad;
use crate::learned::{Sample, TrainConfig};
use crate::neural::UnrolledModel;
use crate::rng::{complex_normal, stream};
use crate::spectrum::{dft, idft, BandLayout, PriorSpec};
use crate::vamp::{nonlinear_denoise_oracle, spectral_denoise, spectral_denoise_divergence_check};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, err: f64, tol: f64) -> Check {
    Check { name, passed: err <= tol, detail: format!("error {err:.3e} (tolerance {tol:.0e})") }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Quick numerical checks of the building blocks.
pub fn run() -> Result<Vec<Check>> {
    let mut rng = stream(0x5e1f, &[], 0);
    let mut out = Vec::new();

    let x: Vec<Complex64> = (0..512).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let back = idft(&dft(&x)?)?;
    let err = x.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    out.push(check("dft round trip", err, 1e-12));

    let err = [1e-9, 1e-6, 5e-5, 9.9e-5]
        .iter()
        .map(|&v: &f64| {
            let s = soft_gain(v).expect("non-negative");
            rel(s, v.tanh() / v)
        })
        .fold(0.0, f64::max);
    out.push(check("soft_gain series", err, 1e-15));

    let q = QuantizerParams::new(10, 12.0, 3.0)?;
    let err = x
        .iter()
        .map(|&v| {
            let once = q.quantize_sample(v * 2.0);
            (q.quantize_sample(once) - once).norm()
        })
        .fold(0.0, f64::max);
    out.push(check("quantizer idempotence", err, 0.0));

    let layout = BandLayout::new(64, vec![0..12, 30..42])?;
    let prior = PriorSpec::unknown(layout.clone(), &[3.0, 30.0])?;
    let z: Vec<Complex64> = (0..64).map(|_| complex_normal(&mut rng, 5.0)).collect();
    let (_, alpha) = spectral_denoise(&z, 0.7, &prior)?;
    let fd = spectral_denoise_divergence_check(&z, 0.7, &prior)?;
    out.push(check("spectral divergence", rel(alpha, fd), 1e-6));

    let fe = FrontEndParams::new(1e14, 0.5, 0.25, None)?;
    let (z1, g1, y) = (Complex64::new(0.4, -1.1), 0.8, Complex64::new(1.3, 0.2));
    let post = nonlinear_denoise_oracle(z1, g1, y, &fe)?;
    let lin_var = 1.0 / (g1 + 1.0 / 0.75);
    let lin_mean = (z1 * g1 + y / 0.75) * lin_var;
    let err = rel(post.variance, lin_var).max((post.mean - lin_mean).norm() / lin_mean.norm());
    out.push(check("quadrature linear limit", err, 1e-3));

    let mut model = UnrolledModel::init(2, 20.0, false, false, &mut rng)?;
    let sample = Sample {
        prior: prior.clone(),
        y: (0..64).map(|_| complex_normal(&mut rng, 8.0)).collect(),
        x0: (0..64).map(|i| if i < 12 { complex_normal(&mut rng, 3.0) } else { Complex64::new(0.0, 0.0) }).collect(),
    };
    let eta = TrainConfig::default().eta;
    let (_, grad, _) = sample_loss_grad(&model, &sample, eta)?;
    let base = model.params_flat();
    let mut worst: f64 = 0.0;
    for k in (0..base.len()).step_by(base.len() / 12) {
        let h = 1e-5 * (1.0 + base[k].abs());
        let mut eval = |d: f64| -> Result<f64> {
            let mut p = base.clone();
            p[k] += d;
            model.set_params_flat(&p)?;
            Ok(sample_loss_grad(&model, &sample, eta)?.0)
        };
        let fdk = (eval(h)? - eval(-h)?) / (2.0 * h);
        worst = worst.max((fdk - grad[k]).abs() / (fdk.abs().max(grad[k].abs()) + 1e-6));
    }
    out.push(check("autodiff finite differences", worst, 1e-3));
    Ok(out)
}
