//! HTTP probes for open data portals.
//!
//! Every request goes through one [`Prober`], which carries the fixed
//! user-agent, the timeout and the per-host limiter shared by all probes.

mod catalog;
mod limiter;
mod portal;
mod web;

use std::time::{Duration, Instant};

use oda_core::catalog::CatalogError;

pub use catalog::{base_url, PlatformDetection};
pub use limiter::{host_key, HostLimiter, HostPermit};
pub use portal::{probe_portal, ProbeInputs, ProbeReport, ProbeStatus};

pub const USER_AGENT: &str = concat!("oda-bench/", env!("CARGO_PKG_VERSION"), " (open data portal usability audit)");

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub user_agent: String,
    pub timeout: Duration,
    pub per_host: usize,
    /// Minimum spacing between request starts on one host.
    pub delay: Duration,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            user_agent: USER_AGENT.to_string(),
            timeout: Duration::from_secs(30),
            per_host: 2,
            delay: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("invalid url {0}")]
    InvalidUrl(String),
    #[error("request to {url} failed: {message}")]
    Network { url: String, message: String },
    #[error("{url} answered {status}")]
    Status { url: String, status: u16 },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("no harvestable catalog: {0}")]
    NoCatalog(String),
    #[error("http client: {0}")]
    Client(String),
}

impl ProbeError {
    /// Worth retrying later (as opposed to a malformed response).
    pub fn is_retriable(&self) -> bool {
        matches!(self, ProbeError::Network { .. }) || matches!(self, ProbeError::Status { status, .. } if *status >= 500)
    }
}

#[derive(Debug, Clone)]
pub struct Fetched {
    pub url: String,
    pub status: u16,
    pub content_type: String,
    pub body: String,
    pub elapsed: Duration,
}

impl Fetched {
    pub fn ok(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

pub struct Prober {
    cfg: ProbeConfig,
    client: reqwest::Client,
    limiter: HostLimiter,
}

impl Prober {
    pub fn new(cfg: ProbeConfig) -> Result<Prober, ProbeError> {
        let client = Self::build_client(&cfg, true)?;
        let limiter = HostLimiter::new(cfg.per_host, cfg.delay);
        Ok(Prober { cfg, client, limiter })
    }

    fn build_client(cfg: &ProbeConfig, pooled: bool) -> Result<reqwest::Client, ProbeError> {
        let mut b = reqwest::Client::builder().user_agent(cfg.user_agent.clone()).timeout(cfg.timeout);
        if !pooled {
            b = b.pool_max_idle_per_host(0);
        }
        b.build().map_err(|e| ProbeError::Client(e.to_string()))
    }

    pub fn config(&self) -> &ProbeConfig {
        &self.cfg
    }

    pub fn limiter(&self) -> &HostLimiter {
        &self.limiter
    }

    fn parse(url: &str) -> Result<url::Url, ProbeError> {
        let u = url::Url::parse(url).map_err(|_| ProbeError::InvalidUrl(url.to_string()))?;
        if !matches!(u.scheme(), "http" | "https") {
            return Err(ProbeError::InvalidUrl(url.to_string()));
        }
        Ok(u)
    }

    async fn send(
        &self,
        client: &reqwest::Client,
        method: reqwest::Method,
        url: &str,
        accept: Option<&str>,
    ) -> Result<Fetched, ProbeError> {
        let parsed = Self::parse(url)?;
        let _permit = self.limiter.acquire(&host_key(&parsed)).await;
        let net = |e: reqwest::Error| ProbeError::Network { url: url.to_string(), message: describe(&e) };
        let start = Instant::now();
        let mut req = client.request(method, parsed);
        if let Some(a) = accept {
            req = req.header(reqwest::header::ACCEPT, a);
        }
        let resp = req.send().await.map_err(net)?;
        let status = resp.status().as_u16();
        let content_type = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_string();
        let body = resp.text().await.map_err(net)?;
        let elapsed = start.elapsed();
        tracing::debug!(url, status, ms = elapsed.as_millis() as u64, "fetched");
        Ok(Fetched { url: url.to_string(), status, content_type, body, elapsed })
    }

    /// GET with the shared connection pool.
    pub async fn get(&self, url: &str, accept: Option<&str>) -> Result<Fetched, ProbeError> {
        self.send(&self.client, reqwest::Method::GET, url, accept).await
    }

    /// GET on a fresh connection with nothing cached.
    pub async fn get_cold(&self, url: &str) -> Result<Fetched, ProbeError> {
        let client = Self::build_client(&self.cfg, false)?;
        self.send(&client, reqwest::Method::GET, url, None).await
    }

    /// Status of a HEAD request, falling back to GET when HEAD is refused.
    pub async fn head_or_get(&self, url: &str) -> Result<u16, ProbeError> {
        match self.send(&self.client, reqwest::Method::HEAD, url, None).await {
            Ok(f) if f.status < 400 => Ok(f.status),
            Ok(f) if !matches!(f.status, 405 | 501 | 403) => Ok(f.status),
            _ => self.get(url, None).await.map(|f| f.status),
        }
    }
}

fn describe(e: &reqwest::Error) -> String {
    if e.is_timeout() {
        "timeout".into()
    } else if e.is_connect() {
        "network failure: connection refused or unreachable".into()
    } else {
        format!("network failure: {e}")
    }
}
