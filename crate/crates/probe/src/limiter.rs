//! Per-host politeness: a cap on requests in flight and a minimum spacing
//! between request starts.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use tokio::sync::{OwnedSemaphorePermit, Semaphore};
use tokio::time::Instant;

struct HostSlot {
    permits: Arc<Semaphore>,
    next_start: tokio::sync::Mutex<Instant>,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

pub struct HostLimiter {
    per_host: usize,
    delay: Duration,
    hosts: Mutex<HashMap<String, Arc<HostSlot>>>,
}

/// Held while a request is in flight.
pub struct HostPermit {
    slot: Arc<HostSlot>,
    _permit: OwnedSemaphorePermit,
}

impl Drop for HostPermit {
    fn drop(&mut self) {
        self.slot.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

impl HostLimiter {
    pub fn new(per_host: usize, delay: Duration) -> Self {
        HostLimiter { per_host: per_host.max(1), delay, hosts: Mutex::new(HashMap::new()) }
    }

    fn slot(&self, host: &str) -> Arc<HostSlot> {
        let mut hosts = self.hosts.lock().unwrap_or_else(|e| e.into_inner());
        hosts
            .entry(host.to_string())
            .or_insert_with(|| {
                Arc::new(HostSlot {
                    permits: Arc::new(Semaphore::new(self.per_host)),
                    next_start: tokio::sync::Mutex::new(Instant::now()),
                    in_flight: AtomicUsize::new(0),
                    peak: AtomicUsize::new(0),
                })
            })
            .clone()
    }

    /// Waits for a free slot on `host` and for the spacing delay to pass.
    pub async fn acquire(&self, host: &str) -> HostPermit {
        let slot = self.slot(host);
        let permit = slot.permits.clone().acquire_owned().await.expect("limiter semaphore is never closed");
        {
            let mut next = slot.next_start.lock().await;
            let now = Instant::now();
            if *next > now {
                tokio::time::sleep_until(*next).await;
            }
            *next = Instant::now() + self.delay;
        }
        let now_in_flight = slot.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        slot.peak.fetch_max(now_in_flight, Ordering::SeqCst);
        HostPermit { slot, _permit: permit }
    }

    /// Most requests ever in flight at once for `host`.
    pub fn peak_in_flight(&self, host: &str) -> usize {
        let hosts = self.hosts.lock().unwrap_or_else(|e| e.into_inner());
        hosts.get(host).map(|s| s.peak.load(Ordering::SeqCst)).unwrap_or(0)
    }
}

/// `host:port` key of a URL.
pub fn host_key(url: &url::Url) -> String {
    match url.port_or_known_default() {
        Some(p) => format!("{}:{p}", url.host_str().unwrap_or("")),
        None => url.host_str().unwrap_or("").to_string(),
    }
}
