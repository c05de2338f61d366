use std::path::{Path, PathBuf};

use clap::Args;
use lbcbeam::SimConfig;

use crate::error::CliError;

/// Simulation flags; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    /// TOML (or JSON) config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_t: Option<usize>,
    #[arg(long)]
    pub n_r: Option<usize>,
    /// TX antenna spacing in wavelengths.
    #[arg(long)]
    pub delta_t: Option<f64>,
    /// RX antenna spacing in wavelengths.
    #[arg(long)]
    pub delta_r: Option<f64>,
    /// Paths per channel (cluster budget L).
    #[arg(long = "L", visible_alias = "paths")]
    pub paths: Option<usize>,
    /// Comma-separated minimum path SNRs in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr_grid: Option<Vec<f64>>,
    /// Width of the per-path SNR range in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub spread: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub n0_dbm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub pilot_dbm: Option<f64>,
    /// ADC resolution b (2^b + 1 levels).
    #[arg(long)]
    pub adc_bits: Option<u32>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable receiver noise.
    #[arg(long)]
    pub noiseless: bool,
    /// Bypass quantization.
    #[arg(long)]
    pub no_adc: bool,
    /// Maximum number of syndrome table entries.
    #[arg(long)]
    pub table_budget: Option<u64>,
    /// Load tables from, or save them to, this JSON file.
    #[arg(long)]
    pub table_cache: Option<PathBuf>,
    /// Parent directory for timestamped run directories.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SimArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<SimConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => SimConfig::default(),
        };
        macro_rules! apply {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() {
                    cfg.$field = v;
                })*
            };
        }
        apply!(
            n_t => n_t,
            n_r => n_r,
            delta_t => delta_t,
            delta_r => delta_r,
            paths => paths,
            snr_grid => snr_grid_db,
            spread => snr_spread_db,
            n0_dbm => n0_dbm,
            pilot_dbm => pilot_dbm,
            adc_bits => adc_bits,
            trials => trials,
            seed => master_seed,
            table_budget => table_budget,
            output_dir => output_dir,
        );
        if self.table_cache.is_some() {
            cfg.table_cache = self.table_cache.clone();
        }
        cfg.noiseless |= self.noiseless;
        cfg.no_adc |= self.no_adc;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
