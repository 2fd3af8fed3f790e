//! Trains a small learned recursion, saves it, reloads it and runs it on
//! fresh data.

use lmlvamp::baselines::linear_wiener;
use lmlvamp::learned::{generate_dataset, infer, train, TrainConfig};
use lmlvamp::metrics::evaluate;
use lmlvamp::neural::UnrolledModel;
use lmlvamp::rng::stream;
use lmlvamp::scenario::Scenario;

fn main() -> lmlvamp::Result<()> {
    env_logger::init();
    let s = Scenario::table_default(20.0, 50.0);
    let data = generate_dataset(&s, true, 60, 5)?;
    let cfg = TrainConfig {
        n_samples: 60,
        n_epochs: 30,
        batch_size: 20,
        lr0: 1e-2,
        lr_decay: 0.98,
        ..TrainConfig::default()
    };
    let (model, log) = train(&data, &cfg)?;
    for row in log.rows.iter().step_by(5) {
        println!("epoch {:>3}: loss {:.4e}, lr {:.2e}", row.epoch, row.mean_loss, row.lr);
    }

    let path = std::env::temp_dir().join("lmlvamp_example_model.bin");
    model.save(&path)?;
    let model = UnrolledModel::load(&path)?;
    println!("saved and reloaded {} parameters from {}", model.num_params(), path.display());

    let fe = s.frontend()?;
    let mut rng = stream(99, &[3], 0);
    let (mut learned, mut linear) = (0.0, 0.0);
    let trials = 50;
    for _ in 0..trials {
        let t = s.draw_trial(&fe, &mut rng)?;
        let prior = t.prior(true)?;
        let x0 = t.x0();
        learned += evaluate(&infer(t.observed(), &prior, &model)?.xhat0, &x0, s.layout.band(0)).rate_bound;
        linear += evaluate(&linear_wiener(t.observed(), &prior, &fe)?, &x0, s.layout.band(0)).rate_bound;
    }
    println!(
        "mean rate over {trials} trials: learned {:.3} bit, linear {:.3} bit",
        learned / trials as f64,
        linear / trials as f64
    );
    Ok(())
}
