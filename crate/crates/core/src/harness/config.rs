use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::OracleGain;
use crate::error::{Error, Result};
use crate::learned::TrainConfig;
use crate::metrics::RateFormula;
use crate::scenario::{QuantizerSettings, Scenario};
use crate::spectrum::BandLayout;

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "LMLVAMP_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "LMLVAMP-K")]
    LmlvampK,
    #[serde(rename = "LMLVAMP-U")]
    LmlvampU,
    #[serde(rename = "LINEAR-K")]
    LinearK,
    #[serde(rename = "LINEAR-U")]
    LinearU,
    #[serde(rename = "ORACLE")]
    Oracle,
}

impl Estimator {
    pub const ALL: [Estimator; 5] =
        [Estimator::LmlvampK, Estimator::LmlvampU, Estimator::LinearK, Estimator::LinearU, Estimator::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::LmlvampK => "LMLVAMP-K",
            Estimator::LmlvampU => "LMLVAMP-U",
            Estimator::LinearK => "LINEAR-K",
            Estimator::LinearU => "LINEAR-U",
            Estimator::Oracle => "ORACLE",
        }
    }

    /// Whether the estimator is given the realized interferer.
    pub fn known(self) -> bool {
        matches!(self, Estimator::LmlvampK | Estimator::LinearK)
    }

    pub fn learned(self) -> bool {
        matches!(self, Estimator::LmlvampK | Estimator::LmlvampU)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Results(format!("unknown estimator {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub n: usize,
    pub band0: [usize; 2],
    pub band1: [usize; 2],
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self { n: 512, band0: [0, 100], band1: [300, 400] }
    }
}

impl LayoutConfig {
    pub fn build(&self) -> Result<BandLayout> {
        BandLayout::new(self.n, vec![self.band0[0]..self.band0[1], self.band1[0]..self.band1[1]])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerConfig {
    pub bits: u32,
    pub backoff_db: f64,
    /// Quantizer modes swept (`false` = unquantized).
    pub enabled: Vec<bool>,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self { bits: 10, backoff_db: 12.0, enabled: vec![false, true] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub layout: LayoutConfig,
    pub snr_db: Vec<f64>,
    pub inr_db: Vec<f64>,
    pub satnr_db: f64,
    pub sigma_a2_db: f64,
    pub sigma_b2_db: f64,
    pub quantizer: QuantizerConfig,
    pub t_iters: Vec<usize>,
    pub estimators: Vec<Estimator>,
    pub n_trials: usize,
    pub train: TrainConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub rate_formula: RateFormula,
    pub oracle_gain: OracleGainConfig,
    /// Correlation pooled across trials instead of averaged per trial.
    pub pooled_rho: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleGainConfig {
    #[default]
    Scalar,
    PerBin,
}

impl From<OracleGainConfig> for OracleGain {
    fn from(v: OracleGainConfig) -> Self {
        match v {
            OracleGainConfig::Scalar => OracleGain::Scalar,
            OracleGainConfig::PerBin => OracleGain::PerBin,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            layout: LayoutConfig::default(),
            snr_db: vec![10.0, 20.0],
            inr_db: vec![30.0, 40.0, 50.0, 60.0, 70.0, 80.0],
            satnr_db: 40.0,
            sigma_a2_db: 0.0,
            sigma_b2_db: -10.0,
            quantizer: QuantizerConfig::default(),
            t_iters: vec![1, 2, 3],
            estimators: Estimator::ALL.to_vec(),
            n_trials: 500,
            train: TrainConfig::default(),
            seed: 1,
            output_dir: PathBuf::from("out"),
            rate_formula: RateFormula::Printed,
            oracle_gain: OracleGainConfig::Scalar,
            pooled_rho: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file (`None` gives the defaults) and applies the
    /// output-directory environment override.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => Error::MissingFile(p.to_path_buf()),
                    _ => Error::Io(e),
                })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.build()?;
        self.train.validate()?;
        if self.snr_db.is_empty() || self.inr_db.is_empty() || self.t_iters.is_empty() {
            return Err(Error::Config("SNR, INR and T lists must be non-empty".into()));
        }
        if self.quantizer.enabled.is_empty() {
            return Err(Error::Config("quantizer.enabled must list at least one mode".into()));
        }
        if self.t_iters.contains(&0) {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators configured".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be positive".into()));
        }
        Ok(())
    }

    pub fn scenario(&self, snr_db: f64, inr_db: f64, quantized: bool) -> Result<Scenario> {
        Ok(Scenario {
            layout: self.layout.build()?,
            snr_db,
            inr_db,
            satnr_db: self.satnr_db,
            sigma_a2_db: self.sigma_a2_db,
            sigma_b2_db: self.sigma_b2_db,
            quantizer: quantized
                .then_some(QuantizerSettings { bits: self.quantizer.bits, backoff_db: self.quantizer.backoff_db }),
        })
    }
}
