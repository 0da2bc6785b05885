//! Service configuration: one TOML file plus `GLOBALIZE_` environment
//! overrides, where `__` separates nested keys
//! (`GLOBALIZE_PIPELINE__TRANSLATION__BATCH_SIZE=8`).

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use figment::providers::{Env, Format, Toml};
use figment::Figment;
use globalize_core::engines::ffmpeg::FfmpegToolkit;
use globalize_core::engines::http::{http_engines, HttpEngineConfig};
use globalize_core::engines::mock::{mock_engines, MockEngineConfig, MockMediaToolkit};
use globalize_core::engines::{EngineError, EngineSet, MediaToolkit};
use globalize_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_PREFIX: &str = "GLOBALIZE_";

pub const DEFAULT_UPLOAD_LIMIT: u64 = 2 * 1024 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration file {0} does not exist")]
    MissingFile(PathBuf),
    #[error("invalid configuration: {0}")]
    Parse(Box<figment::Error>),
    #[error("invalid configuration: {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot build adapters: {0}")]
    Engines(#[from] EngineError),
}

impl ConfigError {
    /// Dotted path of the offending key, when known.
    pub fn field(&self) -> Option<String> {
        match self {
            ConfigError::Parse(e) => {
                let path = e.path.join(".");
                (!path.is_empty()).then_some(path)
            }
            ConfigError::Invalid { field, .. } => Some(field.clone()),
            _ => None,
        }
    }
}

impl From<figment::Error> for ConfigError {
    fn from(e: figment::Error) -> Self {
        ConfigError::Parse(Box::new(e))
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterMode {
    Mock,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaBackend {
    /// The uncompressed stub container the mocks understand.
    Stub,
    Ffmpeg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    #[serde(default = "default_media")]
    pub media: MediaBackend,
    #[serde(default = "default_ffmpeg")]
    pub ffmpeg: PathBuf,
    #[serde(default = "default_ffprobe")]
    pub ffprobe: PathBuf,
    #[serde(flatten)]
    pub http: HttpEngineConfig,
}

fn default_media() -> MediaBackend {
    MediaBackend::Ffmpeg
}

fn default_ffmpeg() -> PathBuf {
    "ffmpeg".into()
}

fn default_ffprobe() -> PathBuf {
    "ffprobe".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub artifact_root: PathBuf,
    pub adapters: AdapterMode,
    pub upload_limit_bytes: u64,
    pub mock: MockEngineConfig,
    /// Required when `adapters = "external"`.
    pub external: Option<ExternalConfig>,
    pub pipeline: PipelineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            artifact_root: PathBuf::from("globalize-data"),
            adapters: AdapterMode::Mock,
            upload_limit_bytes: DEFAULT_UPLOAD_LIMIT,
            mock: MockEngineConfig::default(),
            external: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl ServiceConfig {
    /// File (when given, it must exist) then environment.
    pub fn figment(path: Option<&Path>) -> Result<Figment, ConfigError> {
        let mut figment = Figment::new();
        if let Some(path) = path {
            if !path.is_file() {
                return Err(ConfigError::MissingFile(path.to_path_buf()));
            }
            figment = figment.merge(Toml::file(path));
        }
        Ok(figment.merge(Env::prefixed(ENV_PREFIX).split("__")))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        Self::from_figment(Self::figment(path)?)
    }

    pub fn from_figment(figment: Figment) -> Result<Self, ConfigError> {
        let config: Self = figment.extract()?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.pipeline;
        if !(8000..=192_000).contains(&p.sample_rate) {
            return Err(invalid(
                "pipeline.sample_rate",
                "must be between 8000 and 192000",
            ));
        }
        if p.translation.batch_size == 0 {
            return Err(invalid("pipeline.translation.batch_size", "must be at least 1"));
        }
        if p.translation.max_attempts == 0 {
            return Err(invalid(
                "pipeline.translation.max_attempts",
                "must be at least 1",
            ));
        }
        if p.translation.separator.trim().is_empty() {
            return Err(invalid("pipeline.translation.separator", "must not be blank"));
        }
        if !(p.background_gain.is_finite() && p.background_gain >= 0.0) {
            return Err(invalid(
                "pipeline.background_gain",
                "must be a finite non-negative number",
            ));
        }
        if let Err(reason) = p.stretch.validate() {
            return Err(invalid("pipeline.stretch", reason.to_string()));
        }
        if self.upload_limit_bytes == 0 {
            return Err(invalid("upload_limit_bytes", "must be positive"));
        }
        if self.adapters == AdapterMode::External && self.external.is_none() {
            return Err(invalid(
                "external",
                "required when adapters = \"external\"",
            ));
        }
        Ok(())
    }

    /// Builds the adapter set. External adapters use blocking HTTP clients,
    /// so call this outside any async runtime.
    pub fn engines(&self) -> Result<EngineSet, ConfigError> {
        match self.adapters {
            AdapterMode::Mock => Ok(mock_engines(self.mock.clone())),
            AdapterMode::External => {
                let ext = self
                    .external
                    .as_ref()
                    .ok_or_else(|| invalid("external", "missing"))?;
                let media: std::sync::Arc<dyn MediaToolkit> = match ext.media {
                    MediaBackend::Stub => std::sync::Arc::new(MockMediaToolkit),
                    MediaBackend::Ffmpeg => std::sync::Arc::new(FfmpegToolkit {
                        ffmpeg: ext.ffmpeg.clone(),
                        ffprobe: ext.ffprobe.clone(),
                    }),
                };
                Ok(http_engines(&ext.http, media)?)
            }
        }
    }
}
