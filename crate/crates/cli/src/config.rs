//! Run configuration: an optional TOML file, then command-line flags.
//!
//! ```toml
//! store = "audit-store"
//! listen = "127.0.0.1:8080"
//! assets = "workbench/dist"
//!
//! [politeness]
//! per_host = 2
//! delay_ms = 500
//! timeout_secs = 30
//!
//! [thresholds]
//! high = 100
//! low = 50
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use clap::Args;
use serde::Deserialize;

use oda_core::report::Thresholds;
use oda_probe::ProbeConfig;

pub const DEFAULT_STORE: &str = "oda-store";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid setting: {0}")]
    Invalid(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    store: Option<PathBuf>,
    listen: Option<String>,
    assets: Option<PathBuf>,
    #[serde(default)]
    politeness: FilePoliteness,
    #[serde(default)]
    thresholds: FileThresholds,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePoliteness {
    per_host: Option<usize>,
    delay_ms: Option<u64>,
    timeout_secs: Option<u64>,
    user_agent: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileThresholds {
    high: Option<u32>,
    low: Option<u32>,
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Config file (TOML)
    #[arg(long, global = true, env = "ODA_BENCH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Store directory
    #[arg(long, global = true, env = "ODA_BENCH_STORE")]
    pub store: Option<PathBuf>,
    /// Concurrent requests per host
    #[arg(long, global = true)]
    pub per_host: Option<usize>,
    /// Minimum delay between request starts on one host
    #[arg(long, global = true)]
    pub delay_ms: Option<u64>,
    /// Per-request timeout
    #[arg(long, global = true)]
    pub timeout_secs: Option<u64>,
    /// Fixed clock (RFC 3339), for reproducible runs
    #[arg(long, global = true, env = "ODA_BENCH_NOW")]
    pub now: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub store: PathBuf,
    pub per_host: usize,
    pub delay: Duration,
    pub timeout: Duration,
    pub user_agent: Option<String>,
    pub thresholds: Thresholds,
    pub listen: String,
    pub assets: Option<PathBuf>,
    pub now: Option<DateTime<Utc>>,
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<RunConfig, ConfigError> {
        let file = match &o.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let defaults = ProbeConfig::default();
        let cfg = RunConfig {
            store: o.store.clone().or(file.store).unwrap_or_else(|| PathBuf::from(DEFAULT_STORE)),
            per_host: o.per_host.or(file.politeness.per_host).unwrap_or(defaults.per_host),
            delay: o.delay_ms.or(file.politeness.delay_ms).map(Duration::from_millis).unwrap_or(defaults.delay),
            timeout: o
                .timeout_secs
                .or(file.politeness.timeout_secs)
                .map(Duration::from_secs)
                .unwrap_or(defaults.timeout),
            user_agent: file.politeness.user_agent,
            thresholds: Thresholds {
                high: file.thresholds.high.unwrap_or(Thresholds::default().high),
                low: file.thresholds.low.unwrap_or(Thresholds::default().low),
            },
            listen: file.listen.unwrap_or_else(|| DEFAULT_LISTEN.to_string()),
            assets: file.assets,
            now: o.now,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.per_host == 0 {
            return Err(ConfigError::Invalid("per_host must be positive".into()));
        }
        if self.timeout.is_zero() {
            return Err(ConfigError::Invalid("timeout_secs must be positive".into()));
        }
        if self.thresholds.high == 0 || self.thresholds.low == 0 {
            return Err(ConfigError::Invalid("thresholds must be positive".into()));
        }
        if self.store.exists() && !self.store.is_dir() {
            return Err(ConfigError::Invalid(format!("store {} is not a directory", self.store.display())));
        }
        Ok(())
    }

    pub fn probe_config(&self) -> ProbeConfig {
        let mut cfg = ProbeConfig { per_host: self.per_host, delay: self.delay, timeout: self.timeout, ..Default::default() };
        if let Some(ua) = &self.user_agent {
            cfg.user_agent = ua.clone();
        }
        cfg
    }

    /// The injected clock, or the wall clock.
    pub fn now(&self) -> DateTime<Utc> {
        self.now.unwrap_or_else(Utc::now)
    }
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("oda-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "store = \"from-file\"\n[politeness]\nper_host = 4\ndelay_ms = 10\n[thresholds]\nhigh = 90\n")
            .unwrap();
        let o = Overrides { config: Some(path.clone()), per_host: Some(1), ..Default::default() };
        let cfg = RunConfig::resolve(&o).unwrap();
        assert_eq!(cfg.store, PathBuf::from("from-file"));
        assert_eq!(cfg.per_host, 1);
        assert_eq!(cfg.delay, Duration::from_millis(10));
        assert_eq!(cfg.thresholds, Thresholds { high: 90, low: 50 });

        std::fs::write(&path, "[politeness]\nper_host = 0\n").unwrap();
        assert!(RunConfig::resolve(&Overrides { config: Some(path.clone()), ..Default::default() }).is_err());
        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(matches!(
            RunConfig::resolve(&Overrides { config: Some(path), ..Default::default() }),
            Err(ConfigError::Parse { .. })
        ));
        std::fs::remove_dir_all(dir).ok();
    }
}
