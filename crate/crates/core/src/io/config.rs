//! Pipeline configuration.
//!
//! The on-disk form is flat TOML; every key is optional and unknown keys are
//! rejected:
//!
//! ```toml
//! a = 0.0
//! mu = 1.0
//! nu = 8.0
//! window_ms = 100.0
//! frame_size = 512
//! hop_size = 256
//! sample_rate = 32000
//! lambda_chol = 10.0
//! noise_source = "oracle"   # or "interchange"
//! epsilon = 1e-5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cholesky::DEFAULT_DIAG_FLOOR;
use crate::error::{Error, Result};
use crate::filter::FilterParams;
use crate::metrics::LAMBDA_CHOL;
use crate::stft::StftConfig;

/// Where the noise covariance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSourceKind {
    /// Sliding covariance of a noise-only recording.
    #[default]
    Oracle,
    /// A Cholesky field file in the scale-normalized domain.
    Interchange,
}

impl std::str::FromStr for NoiseSourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "interchange" => Ok(Self::Interchange),
            other => Err(Error::Config(format!("unknown noise source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterParams,
    pub stft: StftConfig,
    pub lambda_chol: f64,
    pub noise_source: NoiseSourceKind,
    /// Cholesky diagonal floor used when factorizing covariances.
    pub epsilon: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            stft: StftConfig::default(),
            lambda_chol: LAMBDA_CHOL,
            noise_source: NoiseSourceKind::Oracle,
            epsilon: DEFAULT_DIAG_FLOOR,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.stft.validate()?;
        if !(self.lambda_chol >= 0.0) || !self.lambda_chol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda_chol must be >= 0, got {}",
                self.lambda_chol
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Flat snapshot with every key set.
    pub fn to_overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            a: Some(self.filter.a),
            mu: Some(self.filter.mu),
            nu: Some(self.filter.nu),
            window_ms: Some(self.filter.window_ms),
            frame_size: Some(self.stft.frame_size),
            hop_size: Some(self.stft.hop_size),
            sample_rate: Some(self.stft.sample_rate),
            lambda_chol: Some(self.lambda_chol),
            noise_source: Some(self.noise_source),
            epsilon: Some(self.epsilon),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_overrides()).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Partial configuration; `None` leaves the underlying value alone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub a: Option<f64>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub window_ms: Option<f64>,
    pub frame_size: Option<usize>,
    pub hop_size: Option<usize>,
    pub sample_rate: Option<u32>,
    pub lambda_chol: Option<f64>,
    pub noise_source: Option<NoiseSourceKind>,
    pub epsilon: Option<f64>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&self, base: PipelineConfig) -> PipelineConfig {
        let mut c = base;
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$($target).+ = v; })*
            };
        }
        set!(
            a => filter.a,
            mu => filter.mu,
            nu => filter.nu,
            window_ms => filter.window_ms,
            frame_size => stft.frame_size,
            hop_size => stft.hop_size,
            sample_rate => stft.sample_rate,
            lambda_chol => lambda_chol,
            noise_source => noise_source,
            epsilon => epsilon,
        );
        c
    }
}

/// Defaults, then command-line flags, then the config file on top.
pub fn resolve(flags: &ConfigOverrides, file: Option<&ConfigOverrides>) -> Result<PipelineConfig> {
    let mut config = flags.apply(PipelineConfig::default());
    if let Some(file) = file {
        config = file.apply(config);
    }
    config.validate()?;
    Ok(config)
}
