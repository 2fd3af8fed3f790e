//! A reduced end-to-end sweep: datasets, training, evaluation, results.csv
//! and the rate-vs-INR plot, written to a temporary directory.

use lmlvamp::harness::{experiment, plot, read_results, ExperimentConfig};

fn main() -> lmlvamp::Result<()> {
    env_logger::init();
    let cfg = ExperimentConfig::from_toml(
        r#"
snr_db = [20.0]
inr_db = [30.0, 50.0, 70.0]
t_iters = [1, 2]
n_trials = 50

[quantizer]
enabled = [false]

[train]
n_samples = 20
n_epochs = 10
batch_size = 10
lr0 = 1e-2
lr_decay = 0.98
"#,
    )?;
    let dir = std::env::temp_dir().join("lmlvamp_example_sweep");
    let cfg = ExperimentConfig { output_dir: dir.clone(), ..cfg };
    let path = experiment::sweep(&cfg)?;
    let rows = read_results(&path)?;
    print!("{}", std::fs::read_to_string(&path)?);
    let svg = plot::plot_rates(&cfg, &rows, &dir)?;
    println!("{} rows in {}, plot at {}", rows.len(), path.display(), svg.display());
    Ok(())
}
