//! Physical scenario (band layout, power ratios, front-end) and Monte Carlo
//! trial draws shared by training, baselines and the sweep harness.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frontend::{apply_frontend, FrontEndOutput, FrontEndParams, QuantizerParams};
use crate::spectrum::{db_to_linear, prior_from_scenario, sample_signal, BandLayout, PriorSpec};

/// Quantizer resolution and backoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSettings {
    pub bits: u32,
    pub backoff_db: f64,
}

impl Default for QuantizerSettings {
    fn default() -> Self {
        Self { bits: 10, backoff_db: 12.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layout: BandLayout,
    pub snr_db: f64,
    pub inr_db: f64,
    pub satnr_db: f64,
    pub sigma_a2_db: f64,
    pub sigma_b2_db: f64,
    pub quantizer: Option<QuantizerSettings>,
}

impl Scenario {
    /// N = 512 two-band layout, SatNR 40 dB, noise 0 / -10 dB, unquantized.
    pub fn table_default(snr_db: f64, inr_db: f64) -> Self {
        Self {
            layout: BandLayout::table_default(),
            snr_db,
            inr_db,
            satnr_db: 40.0,
            sigma_a2_db: 0.0,
            sigma_b2_db: -10.0,
            quantizer: None,
        }
    }

    pub fn with_quantizer(mut self, q: Option<QuantizerSettings>) -> Self {
        self.quantizer = q;
        self
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn sigma_a2(&self) -> f64 {
        db_to_linear(self.sigma_a2_db)
    }

    pub fn sigma_b2(&self) -> f64 {
        db_to_linear(self.sigma_b2_db)
    }

    pub fn p_sat(&self) -> f64 {
        self.sigma_a2() * db_to_linear(self.satnr_db)
    }

    /// Time-domain power `E|r|^2` of desired signal plus interferer.
    pub fn input_power(&self) -> f64 {
        (db_to_linear(self.snr_db) + db_to_linear(self.inr_db)) * self.sigma_a2()
    }

    pub fn frontend(&self) -> Result<FrontEndParams> {
        let (sa, sb, p) = (self.sigma_a2(), self.sigma_b2(), self.p_sat());
        let q = match self.quantizer {
            Some(q) => Some(QuantizerParams::with_backoff(q.bits, q.backoff_db, self.input_power(), p, sa, sb)?),
            None => None,
        };
        FrontEndParams::new(p, sa, sb, q)
    }

    /// Prior with both bands unknown.
    pub fn unknown_prior(&self) -> Result<PriorSpec> {
        // The RNG is only consumed for known interferers.
        let mut unused = crate::rng::stream(0, &[], 0);
        prior_from_scenario(&self.layout, self.snr_db, self.inr_db, self.sigma_a2(), false, &mut unused)
    }

    /// Draws the signal, the interferer and the front-end noise.
    pub fn draw_trial<R: Rng + ?Sized>(&self, fe: &FrontEndParams, rng: &mut R) -> Result<Trial> {
        let prior_u = self.unknown_prior()?;
        let sig = sample_signal(&prior_u, rng)?;
        let out = apply_frontend(&sig.r, fe, rng);
        let interferer = sig.x[self.layout.band(1)].to_vec();
        Ok(Trial { x: sig.x, r: sig.r, interferer, prior_u, out })
    }
}

/// One Monte Carlo realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    /// Full spectrum (desired band, interferer band, zeros elsewhere).
    pub x: Vec<Complex64>,
    pub r: Vec<Complex64>,
    /// Interferer spectrum on band 1.
    pub interferer: Vec<Complex64>,
    pub prior_u: PriorSpec,
    pub out: FrontEndOutput,
}

impl Trial {
    /// Known-interferer prior (`mu` = realized interferer) or the unknown one.
    pub fn prior(&self, known: bool) -> Result<PriorSpec> {
        if known {
            self.prior_u.clone().with_known_band(1, &self.interferer)
        } else {
            Ok(self.prior_u.clone())
        }
    }

    pub fn observed(&self) -> &[Complex64] {
        self.out.observed()
    }

    /// Desired component `x0 = m_B0 . x`.
    pub fn x0(&self) -> Vec<Complex64> {
        let b0 = self.prior_u.layout().band(0);
        self.x.iter().enumerate().map(|(i, &v)| if b0.contains(&i) { v } else { Complex64::new(0.0, 0.0) }).collect()
    }
}
