//! Platform detection and catalog harvest.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use oda_core::catalog::ckan::parse_package_search;
use oda_core::catalog::dcat::{looks_like_dcat, parse_dcat_catalog};
use oda_core::catalog::{
    CatalogSnapshot, DatasetRecord, Listing, Platform, Sample, SortCapability, SortKey, SAMPLE_SIZE,
};

use crate::{ProbeError, Prober};

const RELEVANCE_SORT: &str = "views_recent desc";
const MODIFIED_SORT: &str = "metadata_modified desc";
const HEAD_ROWS: usize = 8;
const TAIL_ROWS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformDetection {
    pub platform: Platform,
    pub sort_capability: SortCapability,
    /// CKAN site root or DCAT document URL.
    pub endpoint: Option<String>,
    pub dataset_count: Option<usize>,
    pub warnings: Vec<String>,
}

/// Site root of an endpoint: everything before `/api/3`, without a
/// trailing slash.
pub fn base_url(endpoint: &str) -> String {
    let e = endpoint.trim();
    let cut = e.find("/api/3").map(|i| &e[..i]).unwrap_or(e);
    cut.trim_end_matches('/').to_string()
}

fn search_url(base: &str, rows: usize, start: usize, sort: Option<&str>) -> Result<String, ProbeError> {
    let mut params = vec![("rows", rows.to_string()), ("start", start.to_string())];
    if let Some(s) = sort {
        params.push(("sort", s.to_string()));
    }
    let raw = format!("{base}/api/3/action/package_search");
    url::Url::parse_with_params(&raw, &params)
        .map(String::from)
        .map_err(|_| ProbeError::InvalidUrl(raw))
}

fn sort_param(key: SortKey) -> Option<&'static str> {
    match key {
        SortKey::Relevance => Some(RELEVANCE_SORT),
        SortKey::Modified => Some(MODIFIED_SORT),
        SortKey::Default => None,
    }
}

impl Prober {
    async fn ckan_count(&self, base: &str, sort: Option<&str>) -> Result<usize, ProbeError> {
        let url = search_url(base, if sort.is_some() { 1 } else { 0 }, 0, sort)?;
        let f = self.get(&url, Some("application/json")).await?;
        Ok(parse_package_search(&f.body, Some(base))?.count)
    }

    /// Probes each endpoint for the CKAN action API, then for a DCAT JSON-LD
    /// document. Falls back to manual import with a warning.
    pub async fn detect_platform(&self, endpoints: &[String]) -> PlatformDetection {
        let mut warnings = Vec::new();
        for endpoint in endpoints {
            let base = base_url(endpoint);
            match self.ckan_count(&base, None).await {
                Ok(count) => {
                    let relevance = self.ckan_count(&base, Some(RELEVANCE_SORT)).await.is_ok();
                    let modified = self.ckan_count(&base, Some(MODIFIED_SORT)).await.is_ok();
                    let sort_capability = match (relevance, modified) {
                        (true, true) => SortCapability::RelevanceAndModified,
                        (_, true) => SortCapability::ModifiedOnly,
                        (true, false) => {
                            warnings.push("relevance sort without modification-date sort; using default order".into());
                            SortCapability::None
                        }
                        (false, false) => SortCapability::None,
                    };
                    return PlatformDetection {
                        platform: Platform::Ckan,
                        sort_capability,
                        endpoint: Some(base),
                        dataset_count: Some(count),
                        warnings,
                    };
                }
                Err(e) => tracing::debug!(endpoint, error = %e, "no CKAN action API"),
            }
            match self.get(endpoint, Some("application/ld+json, application/json;q=0.9")).await {
                Ok(f) if f.ok() => {
                    let doc: Option<Value> = serde_json::from_str(&f.body).ok();
                    if doc.as_ref().is_some_and(looks_like_dcat) {
                        return PlatformDetection {
                            platform: Platform::DcatJsonld,
                            sort_capability: SortCapability::None,
                            endpoint: Some(endpoint.clone()),
                            dataset_count: None,
                            warnings,
                        };
                    }
                    warnings.push(format!("{endpoint}: neither a CKAN API nor a DCAT JSON-LD catalog"));
                }
                Ok(f) => warnings.push(format!("{endpoint}: HTTP {}", f.status)),
                Err(e) => warnings.push(format!("{endpoint}: {e}")),
            }
        }
        if endpoints.is_empty() {
            warnings.push("no catalog endpoint configured".into());
        }
        warnings.push("no recognised platform; supply a manual-import catalog file".into());
        PlatformDetection {
            platform: Platform::ManualImport,
            sort_capability: SortCapability::None,
            endpoint: None,
            dataset_count: None,
            warnings,
        }
    }

    async fn ckan_page(&self, base: &str, rows: usize, start: usize, key: SortKey) -> Result<(usize, Vec<DatasetRecord>), ProbeError> {
        let url = search_url(base, rows, start, sort_param(key))?;
        let f = self.get(&url, Some("application/json")).await?;
        if !f.ok() && f.body.trim_start().starts_with('<') {
            return Err(ProbeError::Status { url, status: f.status });
        }
        let page = parse_package_search(&f.body, Some(base))?;
        Ok((page.count, page.records))
    }

    async fn ckan_listing(&self, base: &str, key: SortKey) -> Result<Listing, ProbeError> {
        let (count, head) = self.ckan_page(base, HEAD_ROWS, 0, key).await?;
        if count <= HEAD_ROWS {
            return Ok(Listing { total_count: count, head, tail: Vec::new() });
        }
        if count <= SAMPLE_SIZE {
            let (_, all) = self.ckan_page(base, count, 0, key).await?;
            return Ok(Listing { total_count: count, head: all, tail: Vec::new() });
        }
        let (_, tail) = self.ckan_page(base, TAIL_ROWS, count - TAIL_ROWS, key).await?;
        Ok(Listing { total_count: count, head, tail })
    }

    /// Harvests the listings the sample needs: the first 8 and last 6
    /// records under each available ordering.
    pub async fn fetch_catalog_snapshot(
        &self,
        portal_id: &str,
        detection: &PlatformDetection,
        harvested_at: DateTime<Utc>,
    ) -> Result<CatalogSnapshot, ProbeError> {
        let endpoint = detection
            .endpoint
            .as_deref()
            .ok_or_else(|| ProbeError::NoCatalog("platform requires a manual-import file".into()))?;
        let mut listings = std::collections::BTreeMap::new();
        let total = match detection.platform {
            Platform::Ckan => {
                let keys: &[SortKey] = match detection.sort_capability {
                    SortCapability::RelevanceAndModified => &[SortKey::Relevance, SortKey::Modified],
                    SortCapability::ModifiedOnly => &[SortKey::Modified],
                    SortCapability::None => &[SortKey::Default],
                };
                let mut total = 0;
                for key in keys {
                    let listing = self.ckan_listing(endpoint, *key).await?;
                    total = listing.total_count;
                    listings.insert(*key, listing);
                }
                total
            }
            Platform::DcatJsonld => {
                let f = self.get(endpoint, Some("application/ld+json, application/json;q=0.9")).await?;
                if !f.ok() {
                    return Err(ProbeError::Status { url: f.url, status: f.status });
                }
                let records = parse_dcat_catalog(&f.body)?;
                let total = records.len();
                listings.insert(SortKey::Default, Listing::full(records));
                total
            }
            Platform::ManualImport => return Err(ProbeError::NoCatalog("manual import".into())),
        };
        Ok(CatalogSnapshot {
            portal_id: portal_id.to_string(),
            harvested_at,
            platform: detection.platform,
            sort_capability: detection.sort_capability,
            listings,
            total_dataset_count: total,
            insufficient: total < SAMPLE_SIZE,
        })
    }

    /// Marks each sampled resource link reachable or not, stopping at the
    /// first reachable link of a dataset.
    pub async fn check_downloads(&self, sample: &mut Sample) {
        for slot in &mut sample.slots {
            for r in &mut slot.dataset.resources {
                let Some(url) = r.download_url.clone() else { continue };
                r.reachable = Some(matches!(self.head_or_get(&url).await, Ok(status) if status < 400));
                if r.reachable == Some(true) {
                    break;
                }
            }
        }
    }
}
