use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::config::{Estimator, ExperimentConfig};
use super::results::TrialResult;
use crate::error::{Error, Result};

fn color(e: Estimator) -> RGBColor {
    match e {
        Estimator::LmlvampK => RGBColor(31, 119, 180),
        Estimator::LmlvampU => RGBColor(255, 127, 14),
        Estimator::LinearK => RGBColor(44, 160, 44),
        Estimator::LinearU => RGBColor(214, 39, 40),
        Estimator::Oracle => RGBColor(80, 80, 80),
    }
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Results(format!("plot: {e}"))
}

/// Checks that every configured estimator has rows.
pub fn check_estimators(cfg: &ExperimentConfig, rows: &[TrialResult]) -> Result<()> {
    for &e in &cfg.estimators {
        if !rows.iter().any(|r| r.estimator == e) {
            return Err(Error::Results(format!("results contain no rows for estimator {e}")));
        }
    }
    Ok(())
}

/// Rate-vs-INR curves, one panel per (SNR, quantized) row and T column,
/// written to `rate_vs_inr.svg` in `dir`.
pub fn plot_rates(cfg: &ExperimentConfig, rows: &[TrialResult], dir: &Path) -> Result<PathBuf> {
    check_estimators(cfg, rows)?;
    std::fs::create_dir_all(dir)?;
    let path = dir.join("rate_vs_inr.svg");

    let mut panel_rows = Vec::new();
    for &snr in &cfg.snr_db {
        for &q in &cfg.quantizer.enabled {
            panel_rows.push((snr, q));
        }
    }
    let cols = cfg.t_iters.len();
    let size = (380 * cols as u32, 300 * panel_rows.len() as u32);
    let root = SVGBackend::new(path.as_path(), size).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let panels = root.split_evenly((panel_rows.len(), cols));

    let (inr_lo, inr_hi) = cfg.inr_db.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let (inr_lo, inr_hi) = if inr_hi > inr_lo { (inr_lo, inr_hi) } else { (inr_lo - 1.0, inr_hi + 1.0) };
    let rate_hi = rows.iter().map(|r| r.rate_bound_mean).fold(0.0, f64::max).max(0.1) * 1.05;

    for (idx, area) in panels.iter().enumerate() {
        let (snr, q) = panel_rows[idx / cols];
        let t = cfg.t_iters[idx % cols];
        let caption = format!("SNR {snr} dB, T = {t}, {}", if q { "quantized" } else { "unquantized" });
        let mut chart = ChartBuilder::on(area)
            .caption(caption, ("sans-serif", 14))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(40)
            .build_cartesian_2d(inr_lo..inr_hi, 0.0..rate_hi)
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("INR [dB]").y_desc("rate [bit]").draw().map_err(plot_err)?;
        for &e in &cfg.estimators {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.estimator == e && r.snr_db == snr && r.quantized == q && r.t_iters == t)
                .map(|r| (r.inr_db, r.rate_bound_mean))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let c = color(e);
            chart
                .draw_series(LineSeries::new(pts, c.stroke_width(2)))
                .map_err(plot_err)?
                .label(e.name())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    drop(panels);
    drop(root);
    Ok(path)
}
