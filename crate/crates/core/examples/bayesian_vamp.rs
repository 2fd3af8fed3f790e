//! Bayesian ML-VAMP with the exact quadrature denoiser against the linear
//! Wiener estimate, per round.

use lmlvamp::baselines::linear_wiener;
use lmlvamp::metrics::nmse;
use lmlvamp::rng::stream;
use lmlvamp::scenario::Scenario;
use lmlvamp::vamp::mlvamp;

fn main() -> lmlvamp::Result<()> {
    let rounds = 6;
    for inr_db in [30.0, 50.0, 70.0] {
        let s = Scenario::table_default(20.0, inr_db);
        let fe = s.frontend()?;
        let mut rng = stream(11, &[inr_db as u64], 0);
        let trial = s.draw_trial(&fe, &mut rng)?;
        let prior = trial.prior(false)?;
        let x0 = trial.x0();
        let band = s.layout.band(0);
        let wiener = nmse(&linear_wiener(trial.observed(), &prior, &fe)?, &x0, band.clone());

        let states = mlvamp(&prior, &fe, trial.observed(), rounds)?;
        let per_round: Vec<String> = states
            .iter()
            .skip(1)
            .map(|st| format!("{:.1}", 10.0 * nmse(&st.xhat, &x0, band.clone()).log10()))
            .collect();
        println!(
            "INR {inr_db} dB: Wiener {:.1} dB, ML-VAMP by round [{}] dB",
            10.0 * wiener.log10(),
            per_round.join(", ")
        );
    }
    Ok(())
}
