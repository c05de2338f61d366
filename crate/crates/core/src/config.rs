//! Simulation parameters shared by the library sweep and the CLI.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ArrayGeometry;
use crate::discovery::DEFAULT_TABLE_BUDGET;
use crate::measure::{AdcConfig, NoiseConfig, Pilot};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid configuration: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ConfigError(pub Vec<FieldError>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Antenna spacing in wavelengths.
    pub delta_t: f64,
    pub delta_r: f64,
    /// Number of paths per channel, also the code's error capability.
    pub paths: usize,
    pub snr_grid_db: Vec<f64>,
    /// Path SNRs are drawn from `[snr_min, snr_min + spread]`.
    pub snr_spread_db: f64,
    pub n0_dbm: f64,
    pub pilot_dbm: f64,
    /// ADCs have `2^adc_bits + 1` levels per rail.
    pub adc_bits: u32,
    pub trials: usize,
    pub master_seed: u64,
    /// Measure without receiver noise.
    pub noiseless: bool,
    /// Skip quantization.
    pub no_adc: bool,
    pub table_budget: u64,
    pub table_cache: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_t: 15,
            n_r: 15,
            delta_t: 0.5,
            delta_r: 0.5,
            paths: 1,
            snr_grid_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            snr_spread_db: 20.0,
            n0_dbm: -95.0,
            pilot_dbm: 0.0,
            adc_bits: 3,
            trials: 10_000,
            master_seed: 0,
            noiseless: false,
            no_adc: false,
            table_budget: DEFAULT_TABLE_BUDGET,
            table_cache: None,
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &'static str, message: &str| {
            if !ok {
                errs.push(FieldError {
                    field,
                    message: message.to_string(),
                });
            }
        };
        check(self.n_t >= 1, "n_t", "must be at least 1");
        check(self.n_r >= 1, "n_r", "must be at least 1");
        check(
            self.delta_t > 0.0 && self.delta_t.is_finite(),
            "delta_t",
            "must be positive",
        );
        check(
            self.delta_r > 0.0 && self.delta_r.is_finite(),
            "delta_r",
            "must be positive",
        );
        check(self.paths >= 1, "paths", "must be at least 1");
        check(
            self.paths <= self.n_t.min(self.n_r),
            "paths",
            "cannot exceed the smaller antenna count",
        );
        check(
            !self.snr_grid_db.is_empty(),
            "snr_grid_db",
            "must not be empty",
        );
        check(
            self.snr_grid_db.iter().all(|s| s.is_finite()),
            "snr_grid_db",
            "values must be finite",
        );
        check(
            self.snr_spread_db >= 0.0 && self.snr_spread_db.is_finite(),
            "snr_spread_db",
            "must be non-negative",
        );
        check(self.n0_dbm.is_finite(), "n0_dbm", "must be finite");
        check(self.pilot_dbm.is_finite(), "pilot_dbm", "must be finite");
        check(
            (1..=16).contains(&self.adc_bits),
            "adc_bits",
            "must be between 1 and 16",
        );
        check(self.trials >= 1, "trials", "must be at least 1");
        check(self.table_budget >= 1, "table_budget", "must be at least 1");
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }

    pub fn geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            n_t: self.n_t,
            n_r: self.n_r,
            delta_t: self.delta_t,
            delta_r: self.delta_r,
        }
    }

    /// Noise used to calibrate path gains and the ADC.
    pub fn reference_noise(&self) -> NoiseConfig {
        NoiseConfig {
            n0: crate::measure::dbm_to_watts(self.n0_dbm),
        }
    }

    /// Noise actually added to measurements.
    pub fn measurement_noise(&self) -> NoiseConfig {
        if self.noiseless {
            NoiseConfig::noiseless()
        } else {
            self.reference_noise()
        }
    }

    pub fn pilot(&self) -> Pilot {
        Pilot {
            power: crate::measure::dbm_to_watts(self.pilot_dbm),
        }
    }

    /// ADC calibrated for a sweep point with minimum path SNR `snr_min_db`.
    ///
    /// Also used for the detectability rule when quantization is bypassed.
    pub fn adc_for(&self, snr_min_db: f64) -> AdcConfig {
        AdcConfig::calibrated(
            self.adc_bits,
            self.paths,
            snr_min_db + self.snr_spread_db,
            &self.reference_noise(),
            &self.pilot(),
        )
        .expect("validated config yields a valid ADC")
    }
}
