use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use super::config::Estimator;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "estimator,snr_db,inr_db,t_iters,quantized,rho_mean,rate_bound_mean,nmse_db_mean,n_trials,seed";

/// Trial-averaged metrics of one estimator at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub estimator: Estimator,
    pub snr_db: f64,
    pub inr_db: f64,
    pub t_iters: usize,
    pub quantized: bool,
    pub rho_mean: f64,
    pub rate_bound_mean: f64,
    /// `10 log10` of the trial-mean linear NMSE.
    pub nmse_db_mean: f64,
    pub n_trials: usize,
    pub seed: u64,
}

impl TrialResult {
    fn cmp_key(&self, o: &Self) -> Ordering {
        self.estimator
            .name()
            .cmp(o.estimator.name())
            .then(self.snr_db.total_cmp(&o.snr_db))
            .then(self.inr_db.total_cmp(&o.inr_db))
            .then(self.t_iters.cmp(&o.t_iters))
            .then(self.quantized.cmp(&o.quantized))
    }
}

/// Sorts by (estimator, SNR, INR, T, quantized).
pub fn sort_rows(rows: &mut [TrialResult]) {
    rows.sort_by(TrialResult::cmp_key);
}

fn float(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn to_csv(rows: &[TrialResult]) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut s = String::with_capacity(128 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &sorted {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.estimator,
            float(r.snr_db),
            float(r.inr_db),
            r.t_iters,
            r.quantized,
            float(r.rho_mean),
            float(r.rate_bound_mean),
            float(r.nmse_db_mean),
            r.n_trials,
            r.seed
        )
        .expect("string write");
    }
    s
}

pub fn write_results(rows: &[TrialResult], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Results("no rows to write".into()));
    }
    std::fs::write(path, to_csv(rows))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<TrialResult>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Results(format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| parse_row(line).map_err(|e| Error::Results(format!("line {}: {e}", i + 2))))
        .collect()
}

fn parse_row(line: &str) -> std::result::Result<TrialResult, String> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 10 {
        return Err(format!("expected 10 fields, got {}", f.len()));
    }
    let num = |i: usize| f[i].parse::<f64>().map_err(|e| format!("field {i}: {e}"));
    let int = |i: usize| f[i].parse::<u64>().map_err(|e| format!("field {i}: {e}"));
    Ok(TrialResult {
        estimator: f[0].parse().map_err(|e: Error| e.to_string())?,
        snr_db: num(1)?,
        inr_db: num(2)?,
        t_iters: int(3)? as usize,
        quantized: f[4].parse().map_err(|e| format!("field 4: {e}"))?,
        rho_mean: num(5)?,
        rate_bound_mean: num(6)?,
        nmse_db_mean: num(7)?,
        n_trials: int(8)? as usize,
        seed: int(9)?,
    })
}

pub fn read_results(path: &Path) -> Result<Vec<TrialResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    parse_csv(&text)
}
