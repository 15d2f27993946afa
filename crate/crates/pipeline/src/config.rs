//! TOML configuration. Relative paths resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    Jsonl {
        path: PathBuf,
        #[serde(default = "default_batch")]
        batch_size: usize,
    },
    Http {
        url: String,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SinkConfig {
    Jsonl { path: PathBuf },
    Webhook {
        url: String,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryConfig {
    pub base_delay_secs: f64,
    pub max_delay_secs: f64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        Self { base_delay_secs: 1.0, max_delay_secs: 300.0 }
    }
}

impl RetryConfig {
    /// Wait before retry number `attempt` (1-based): doubling, capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = attempt.saturating_sub(1).min(30) as i32;
        let secs = (self.base_delay_secs * 2f64.powi(exp)).min(self.max_delay_secs);
        Duration::from_secs_f64(secs.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { bind: "127.0.0.1".into(), port: 8080, ui_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_interval")]
    pub scan_interval_secs: f64,
    #[serde(default = "default_threshold")]
    pub classification_threshold: f64,
    #[serde(default)]
    pub model_checkpoint_path: Option<PathBuf>,
    /// Falls back to the built-in tobacco keyword list.
    #[serde(default)]
    pub keywords_path: Option<PathBuf>,
    #[serde(default)]
    pub message_pool_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// In-memory only when absent.
    #[serde(default)]
    pub state_log_path: Option<PathBuf>,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: u64,
    #[serde(default = "default_true")]
    pub scanner_enabled: bool,
    pub source: SourceConfig,
    pub sink: SinkConfig,
    #[serde(default)]
    pub retry: RetryConfig,
    #[serde(default)]
    pub server: ServerConfig,
}

fn default_batch() -> usize {
    20
}
fn default_timeout() -> f64 {
    10.0
}
fn default_interval() -> f64 {
    60.0
}
fn default_threshold() -> f64 {
    0.5
}
fn default_snapshot_every() -> u64 {
    200
}
fn default_true() -> bool {
    true
}

/// Shortest scan interval accepted.
pub const MIN_SCAN_INTERVAL_SECS: f64 = 0.01;

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.scan_interval_secs >= MIN_SCAN_INTERVAL_SECS) {
            return Err(ConfigError::Invalid(format!(
                "scan_interval_secs must be at least {MIN_SCAN_INTERVAL_SECS}"
            )));
        }
        if !(0.0..=1.0).contains(&self.classification_threshold) {
            return Err(ConfigError::Invalid("classification_threshold must lie in [0, 1]".into()));
        }
        if self.retry.base_delay_secs < 0.0 || self.retry.max_delay_secs < self.retry.base_delay_secs {
            return Err(ConfigError::Invalid("retry delays must satisfy 0 <= base <= max".into()));
        }
        Ok(())
    }

    pub fn scan_interval(&self) -> Duration {
        Duration::from_secs_f64(self.scan_interval_secs)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.model_checkpoint_path,
            &mut self.keywords_path,
            &mut self.message_pool_path,
            &mut self.state_log_path,
            &mut self.server.ui_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let SourceConfig::Jsonl { path, .. } = &mut self.source {
            fix(path);
        }
        if let SinkConfig::Jsonl { path } = &mut self.sink {
            fix(path);
        }
    }
}
