use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::CatalogError;

/// Dataset-page signals that catalog APIs rarely expose. Absent means the
/// harvest could not observe the signal, not that the page lacks it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageFeature {
    ReuseDisplay,
    Preview,
    Visualization,
    VisualizationDownload,
    VulgarizedContent,
    QualityRating,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateInterval {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub download_url: Option<String>,
    /// Filled in by the reachability probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reachable: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub dataset_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modified: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update_frequency: Option<String>,
    #[serde(default)]
    pub formats: Vec<String>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publisher: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_coverage: Option<DateInterval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_coverage: Option<String>,
    #[serde(default)]
    pub resources: Vec<Resource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub views: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downloads: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reuse_count: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub page_features: BTreeMap<PageFeature, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_url: Option<String>,
}

impl DatasetRecord {
    /// A record carrying only its id.
    pub fn new(dataset_id: impl Into<String>) -> Self {
        DatasetRecord { dataset_id: dataset_id.into(), ..Default::default() }
    }

    /// Uppercases format tokens and folds resource formats into `formats`.
    pub fn normalize(mut self) -> Self {
        for r in &mut self.resources {
            r.format = normalize_format(&r.format);
        }
        let mut formats: Vec<String> = Vec::new();
        let all = self.formats.iter().map(|f| normalize_format(f)).chain(self.resources.iter().map(|r| r.format.clone()));
        for f in all {
            if !f.is_empty() && !formats.contains(&f) {
                formats.push(f);
            }
        }
        self.formats = formats;
        self.tags.retain(|t| !t.trim().is_empty());
        self
    }
}

/// Maps a format label, file extension, MIME type or vocabulary URI onto an
/// uppercase token such as `CSV` or `JSON-LD`.
pub fn normalize_format(raw: &str) -> String {
    let s = raw.trim();
    let s = s.rsplit(['/', '#']).next().filter(|_| s.contains("://")).unwrap_or(s);
    let lower = s.to_ascii_lowercase();
    let mapped = match lower.as_str() {
        "text/csv" | "csv" => "CSV",
        "application/json" | "json" => "JSON",
        "application/xml" | "text/xml" | "xml" => "XML",
        "application/rdf+xml" | "rdf" | "rdf_xml" | "rdf+xml" => "RDF",
        "text/turtle" | "turtle" | "ttl" | "rdf_turtle" => "TTL",
        "application/n-triples" | "nt" | "n-triples" | "rdf_n_triples" => "NT",
        "application/ld+json" | "json-ld" | "jsonld" | "json_ld" => "JSON-LD",
        "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet" | "xlsx" => "XLSX",
        "application/vnd.ms-excel" | "xls" => "XLS",
        "application/vnd.oasis.opendocument.spreadsheet" | "ods" => "ODS",
        "text/tab-separated-values" | "tsv" => "TSV",
        "application/geo+json" | "application/vnd.geo+json" | "geojson" | "geo+json" => "GEOJSON",
        "application/vnd.apache.parquet" | "parquet" => "PARQUET",
        "application/pdf" | "pdf" => "PDF",
        "text/html" | "html" | "htm" => "HTML",
        "application/msword" | "doc" => "DOC",
        "application/vnd.openxmlformats-officedocument.wordprocessingml.document" | "docx" => "DOCX",
        "application/zip" | "zip" => "ZIP",
        _ => "",
    };
    if mapped.is_empty() {
        lower.trim_start_matches('.').to_ascii_uppercase()
    } else {
        mapped.to_string()
    }
}

/// Parses a manual-import file: a JSON array of dataset records.
///
/// Records modified after `harvest_date` are rejected.
pub fn parse_manual_import(document: &str, harvest_date: NaiveDate) -> Result<Vec<DatasetRecord>, CatalogError> {
    let raw: Vec<serde_json::Value> = serde_json::from_str(document)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| {
            let id = v
                .get("dataset_id")
                .and_then(|x| x.as_str())
                .map(str::to_string)
                .unwrap_or_else(|| format!("#{i}"));
            let rec: DatasetRecord = serde_json::from_value(v)
                .map_err(|e| CatalogError::Record { record: id.clone(), message: e.to_string() })?;
            if rec.dataset_id.trim().is_empty() {
                return Err(CatalogError::Record { record: id, message: "empty dataset_id".into() });
            }
            if rec.modified.is_some_and(|m| m > harvest_date) {
                return Err(CatalogError::Record { record: id, message: "modified after harvest date".into() });
            }
            Ok(rec.normalize())
        })
        .collect()
}
