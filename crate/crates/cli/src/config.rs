//! Optional TOML defaults, named by `--config` or `STOREBENCH_CONFIG`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use storebench::analytics::PriceSheet;
use storebench::bench::DEFAULT_SIZES;
use storebench::geohash::DEFAULT_PRECISION;

use crate::error::Failure;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub sizes: Vec<u64>,
    /// Price sheet JSON; the built-in sheet when absent.
    pub prices: Option<PathBuf>,
    /// Relative `--out` paths are resolved against this directory.
    pub output_dir: Option<PathBuf>,
    pub days_per_month: Option<u32>,
    pub geohash_precision: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: DEFAULT_SEED,
            sizes: DEFAULT_SIZES.to_vec(),
            prices: None,
            output_dir: None,
            days_per_month: None,
            geohash_precision: DEFAULT_PRECISION,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, Failure> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let mut config: Config =
            toml::from_str(&text).map_err(|e| Failure::new("Config", format!("{}: {e}", path.display())))?;
        // Paths inside the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        config.prices = config.prices.map(|p| base.join(p));
        config.output_dir = config.output_dir.map(|p| base.join(p));
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Failure::new("Config", "sizes must be non-empty and positive"));
        }
        if !(1..=storebench::geohash::MAX_PRECISION).contains(&self.geohash_precision) {
            return Err(Failure::new("Config", "geohash_precision must be within 1..=12"));
        }
        Ok(())
    }

    pub fn output_path(&self, out: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if out.is_relative() => dir.join(out),
            _ => out.to_path_buf(),
        }
    }

    /// Price sheet from `explicit`, else the configured file, else the
    /// built-in sheet; then the month-length override, flag before config.
    pub fn prices(&self, explicit: Option<&Path>, days: Option<u32>) -> Result<PriceSheet, Failure> {
        let mut sheet = match explicit.or(self.prices.as_deref()) {
            Some(path) => crate::read_json(path)?,
            None => PriceSheet::default(),
        };
        if let Some(d) = days.or(self.days_per_month) {
            sheet.days_per_month = d;
        }
        sheet.validate()?;
        Ok(sheet)
    }
}
