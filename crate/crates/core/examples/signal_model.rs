//! Draws one realization of the two-band signal model and checks band
//! powers and energy preservation of the unitary transform.

use lmlvamp::rng::stream;
use lmlvamp::scenario::Scenario;
use lmlvamp::spectrum::{dft, norm_sqr, sample_signal};

fn main() -> lmlvamp::Result<()> {
    let s = Scenario::table_default(20.0, 50.0);
    let prior = s.unknown_prior()?;
    let mut rng = stream(7, &[1], 0);
    let sig = sample_signal(&prior, &mut rng)?;

    println!("N = {}, bands = {:?}", s.n(), s.layout.bands());
    for (l, band) in s.layout.bands().iter().enumerate() {
        let per_bin = sig.x[band.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>() / band.len() as f64;
        println!("band {l}: prior variance {:.3e}, realized mean power {per_bin:.3e}", prior.band_variance(l));
    }
    let back = dft(&sig.r)?;
    let err = back.iter().zip(&sig.x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("time-domain energy {:.6e}, spectral energy {:.6e}", norm_sqr(&sig.r), norm_sqr(&sig.x));
    println!("max |V r - x| = {err:.2e}");
    Ok(())
}
