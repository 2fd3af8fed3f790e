//! Saturation curve of the receiver and the effect of the 10-bit quantizer.

use lmlvamp::frontend::{apply_frontend, saturate, soft_gain, FrontEndParams, QuantizerParams};
use lmlvamp::rng::stream;
use lmlvamp::scenario::Scenario;
use lmlvamp::spectrum::sample_signal;
use lmlvamp::Complex64;

fn main() -> lmlvamp::Result<()> {
    let p_sat: f64 = 1e4;
    println!("{:>10} {:>10} {:>12}", "|u|/sqrtP", "gain", "|sat(u)|");
    for x in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        let u = Complex64::new(x * p_sat.sqrt(), 0.0);
        println!("{x:>10} {:>10.4} {:>12.3}", soft_gain(x)?, saturate(u, p_sat).norm());
    }

    let s = Scenario::table_default(20.0, 60.0);
    let mut rng = stream(3, &[2], 0);
    let sig = sample_signal(&s.unknown_prior()?, &mut rng)?;
    let analog = FrontEndParams::new(s.p_sat(), s.sigma_a2(), s.sigma_b2(), None)?;
    let out = apply_frontend(&sig.r, &analog, &mut rng);
    let compressed = out.gain.iter().filter(|&&g| g < 0.9).count();
    println!("INR 60 dB: {compressed} of {} samples compressed by more than 10%", s.n());

    let q = QuantizerParams::with_backoff(10, 12.0, s.input_power(), s.p_sat(), s.sigma_a2(), s.sigma_b2())?;
    let yq: Vec<Complex64> = out.y.iter().map(|&v| q.quantize_sample(v)).collect();
    let power: f64 = out.y.iter().map(|v| v.norm_sqr()).sum();
    let err = yq.iter().zip(&out.y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / power;
    println!(
        "10-bit quantizer, 12 dB backoff: step {:.3e}, relative error power {:.1} dB",
        q.step(),
        10.0 * err.log10()
    );
    Ok(())
}
