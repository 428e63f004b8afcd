//! CKAN action API responses (`package_search`, `package_show`).

use chrono::NaiveDate;
use serde_json::Value;

use super::{CatalogError, DatasetRecord, DateInterval, PageFeature, Resource};

/// One page of `package_search` results.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchPage {
    pub count: usize,
    pub records: Vec<DatasetRecord>,
}

/// Unwraps the `{"success": .., "result": ..}` envelope.
pub fn action_result(body: &str) -> Result<Value, CatalogError> {
    let mut v: Value = serde_json::from_str(body)?;
    if v.get("success").and_then(Value::as_bool) != Some(true) {
        let msg = v.get("error").map(|e| e.to_string()).unwrap_or_else(|| "success is not true".into());
        return Err(CatalogError::Document(msg));
    }
    v.get_mut("result")
        .map(Value::take)
        .ok_or_else(|| CatalogError::Document("missing result".into()))
}

/// Parses a `package_search` response. `site` is the portal base URL used to
/// build dataset page links.
pub fn parse_package_search(body: &str, site: Option<&str>) -> Result<SearchPage, CatalogError> {
    let result = action_result(body)?;
    let count = result
        .get("count")
        .and_then(Value::as_u64)
        .ok_or_else(|| CatalogError::Document("missing count".into()))? as usize;
    let records = result
        .get("results")
        .and_then(Value::as_array)
        .map(|rs| rs.iter().enumerate().map(|(i, p)| record_from_package(p, i, site)).collect())
        .unwrap_or_else(|| Ok(Vec::new()))?;
    Ok(SearchPage { count, records })
}

pub fn record_from_package(pkg: &Value, index: usize, site: Option<&str>) -> Result<DatasetRecord, CatalogError> {
    let name = str_field(pkg, "name");
    let dataset_id = str_field(pkg, "id")
        .or_else(|| name.clone())
        .ok_or_else(|| CatalogError::Record { record: format!("#{index}"), message: "no id or name".into() })?;
    let bad = |message: String| CatalogError::Record { record: dataset_id.clone(), message };

    let modified = match str_field(pkg, "metadata_modified").or_else(|| extra(pkg, "modified")) {
        Some(s) => Some(parse_date(&s).ok_or_else(|| bad(format!("invalid modification date \"{s}\"")))?),
        None => None,
    };

    let update_frequency = ["frequency", "update_frequency", "accrual_periodicity"]
        .iter()
        .find_map(|k| str_field(pkg, k).or_else(|| extra(pkg, k)));

    let mut preview: Option<bool> = None;
    let resources = pkg
        .get("resources")
        .and_then(Value::as_array)
        .map(|rs| {
            rs.iter()
                .map(|r| {
                    if let Some(active) = r.get("datastore_active").and_then(Value::as_bool) {
                        preview = Some(preview.unwrap_or(false) | active);
                    }
                    Resource {
                        format: str_field(r, "format").or_else(|| str_field(r, "mimetype")).unwrap_or_default(),
                        download_url: str_field(r, "url"),
                        reachable: None,
                    }
                })
                .collect()
        })
        .unwrap_or_default();

    let tags = pkg
        .get("tags")
        .and_then(Value::as_array)
        .map(|ts| {
            ts.iter()
                .filter_map(|t| str_field(t, "display_name").or_else(|| str_field(t, "name")).or_else(|| t.as_str().map(str::to_string)))
                .collect()
        })
        .unwrap_or_default();

    let publisher = pkg
        .get("organization")
        .and_then(|o| str_field(o, "title").or_else(|| str_field(o, "name")))
        .or_else(|| str_field(pkg, "author"))
        .or_else(|| str_field(pkg, "maintainer"));

    let temporal = {
        let start = extra(pkg, "temporal_start").or_else(|| str_field(pkg, "temporal_start"));
        let end = extra(pkg, "temporal_end").or_else(|| str_field(pkg, "temporal_end"));
        (start.is_some() || end.is_some()).then(|| DateInterval {
            start: start.as_deref().and_then(parse_date),
            end: end.as_deref().and_then(parse_date),
        })
    };

    let mut page_features = std::collections::BTreeMap::new();
    if let Some(p) = preview {
        page_features.insert(PageFeature::Preview, p);
    }

    let page_url = site.zip(name.as_deref()).map(|(base, n)| format!("{}/dataset/{n}", base.trim_end_matches('/')));

    Ok(DatasetRecord {
        title: str_field(pkg, "title").unwrap_or_default(),
        description: str_field(pkg, "notes").unwrap_or_default(),
        modified,
        update_frequency,
        formats: Vec::new(),
        tags,
        publisher,
        license: str_field(pkg, "license_title").or_else(|| str_field(pkg, "license_id")),
        temporal_coverage: temporal,
        spatial_coverage: extra(pkg, "spatial_text").or_else(|| str_field(pkg, "spatial")),
        resources,
        views: pkg.get("tracking_summary").and_then(|t| t.get("total")).and_then(Value::as_u64),
        downloads: ["downloads", "download_count"].iter().find_map(|k| pkg.get(*k).and_then(Value::as_u64)),
        reuse_count: ["num_showcases", "reuse_count"].iter().find_map(|k| pkg.get(*k).and_then(Value::as_u64)),
        page_features,
        page_url,
        dataset_id,
    }
    .normalize())
}

fn str_field(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}

fn extra(pkg: &Value, key: &str) -> Option<String> {
    pkg.get("extras")?
        .as_array()?
        .iter()
        .find(|e| e.get("key").and_then(Value::as_str) == Some(key))
        .and_then(|e| str_field(e, "value"))
}

/// Accepts `YYYY-MM-DD` optionally followed by a time part.
pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s.get(..10)?, "%Y-%m-%d").ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEARCH: &str = r#"{
      "success": true,
      "result": {
        "count": 2,
        "results": [
          {
            "id": "0b1c", "name": "air-quality", "title": "Air quality", "notes": "Hourly readings",
            "metadata_modified": "2024-02-20T08:15:00.123456",
            "license_title": "CC-BY-4.0",
            "organization": {"name": "env", "title": "Environment Agency"},
            "tags": [{"name": "air"}, {"name": "health"}],
            "extras": [{"key": "frequency", "value": "monthly"}],
            "tracking_summary": {"total": 12, "recent": 3},
            "resources": [
              {"format": "csv", "url": "http://x/air.csv", "datastore_active": true},
              {"format": "PDF", "url": "http://x/air.pdf"}
            ]
          },
          {"name": "bare"}
        ]
      }
    }"#;

    #[test]
    fn parses_search_page() {
        let page = parse_package_search(SEARCH, Some("http://portal.test/")).unwrap();
        assert_eq!(page.count, 2);
        let r = &page.records[0];
        assert_eq!(r.dataset_id, "0b1c");
        assert_eq!(r.formats, ["CSV", "PDF"]);
        assert_eq!(r.modified, NaiveDate::from_ymd_opt(2024, 2, 20));
        assert_eq!(r.update_frequency.as_deref(), Some("monthly"));
        assert_eq!(r.publisher.as_deref(), Some("Environment Agency"));
        assert_eq!(r.views, Some(12));
        assert_eq!(r.page_features.get(&PageFeature::Preview), Some(&true));
        assert_eq!(r.page_url.as_deref(), Some("http://portal.test/dataset/air-quality"));
        assert_eq!(page.records[1].dataset_id, "bare");
        assert!(page.records[1].resources.is_empty());
    }

    #[test]
    fn failed_action() {
        let err = parse_package_search(r#"{"success": false, "error": {"message": "bad sort"}}"#, None).unwrap_err();
        assert!(err.to_string().contains("bad sort"));
    }

    #[test]
    fn bad_record_names_it() {
        let body = r#"{"success": true, "result": {"count": 1, "results": [{"id": "x1", "metadata_modified": "yesterday"}]}}"#;
        let err = parse_package_search(body, None).unwrap_err();
        assert!(matches!(err, CatalogError::Record { ref record, .. } if record == "x1"), "{err}");
    }
}
