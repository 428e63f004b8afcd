//! A JSON-LD subset of DCAT-AP: datasets, distributions and the handful of
//! Dublin Core terms the checks need. Compact (`dct:title`), bare (`title`)
//! and full-IRI property names are all accepted. No RDF processing beyond
//! resolving `@id` references inside the same document.

use std::collections::HashMap;

use serde_json::Value;

use super::ckan::parse_date;
use super::{CatalogError, DatasetRecord, DateInterval, Resource};

const DCT: [&str; 3] = ["dct:", "dcterms:", "http://purl.org/dc/terms/"];
const DCAT: [&str; 2] = ["dcat:", "http://www.w3.org/ns/dcat#"];
const FOAF: [&str; 2] = ["foaf:", "http://xmlns.com/foaf/0.1/"];
const SCHEMA: [&str; 3] = ["schema:", "http://schema.org/", "https://schema.org/"];
const SKOS: [&str; 2] = ["skos:", "http://www.w3.org/2004/02/skos/core#"];

/// Whether a JSON document looks like a DCAT JSON-LD catalog.
pub fn looks_like_dcat(doc: &Value) -> bool {
    let mut found = false;
    walk(doc, &mut |n| found |= is_dataset(n));
    found && (doc.get("@context").is_some() || doc.get("@graph").is_some() || doc.is_array())
}

/// Extracts the datasets of a catalog document in document order.
pub fn parse_dcat_catalog(document: &str) -> Result<Vec<DatasetRecord>, CatalogError> {
    let doc: Value = serde_json::from_str(document)?;
    let mut index: HashMap<&str, &Value> = HashMap::new();
    let mut datasets: Vec<&Value> = Vec::new();
    walk(&doc, &mut |n| {
        if let Some(id) = n.get("@id").and_then(Value::as_str) {
            if n.as_object().is_some_and(|o| o.len() > 1) {
                index.entry(id).or_insert(n);
            }
        }
        if is_dataset(n) {
            let dup = n
                .get("@id")
                .and_then(Value::as_str)
                .is_some_and(|id| datasets.iter().any(|d| d.get("@id").and_then(Value::as_str) == Some(id)));
            if !dup {
                datasets.push(n);
            }
        }
    });
    if datasets.is_empty() && doc.get("@context").is_none() {
        return Err(CatalogError::Document("no dcat:Dataset nodes and no JSON-LD context".into()));
    }
    datasets.iter().enumerate().map(|(i, d)| record_from_node(d, i, &index)).collect()
}

fn walk<'a>(v: &'a Value, f: &mut impl FnMut(&'a Value)) {
    match v {
        Value::Object(map) => {
            f(v);
            for (k, child) in map {
                if k != "@context" {
                    walk(child, f);
                }
            }
        }
        Value::Array(items) => items.iter().for_each(|i| walk(i, f)),
        _ => {}
    }
}

fn is_dataset(n: &Value) -> bool {
    let is = |t: &str| matches!(t, "dcat:Dataset" | "Dataset" | "http://www.w3.org/ns/dcat#Dataset");
    match n.get("@type") {
        Some(Value::String(t)) => is(t),
        Some(Value::Array(ts)) => ts.iter().filter_map(Value::as_str).any(is),
        _ => false,
    }
}

fn prop<'a>(node: &'a Value, prefixes: &[&str], local: &str) -> Option<&'a Value> {
    let obj = node.as_object()?;
    prefixes
        .iter()
        .find_map(|p| obj.get(&format!("{p}{local}")))
        .or_else(|| obj.get(local))
}

fn texts(v: &Value) -> Vec<String> {
    match v {
        Value::String(s) => vec![s.trim().to_string()],
        Value::Number(n) => vec![n.to_string()],
        Value::Array(items) => items.iter().flat_map(texts).collect(),
        Value::Object(o) => o
            .get("@value")
            .or_else(|| o.get("@id"))
            .map(texts)
            .unwrap_or_default(),
        _ => Vec::new(),
    }
    .into_iter()
    .filter(|s| !s.is_empty())
    .collect()
}

fn text(v: Option<&Value>) -> Option<String> {
    v.and_then(|v| texts(v).into_iter().next())
}

fn resolve<'a>(v: &'a Value, index: &HashMap<&str, &'a Value>) -> &'a Value {
    let id = match v {
        Value::Object(o) if o.len() == 1 => o.get("@id").and_then(Value::as_str),
        Value::String(s) => Some(s.as_str()),
        _ => None,
    };
    id.and_then(|id| index.get(id).copied()).unwrap_or(v)
}

fn each(v: Option<&Value>) -> Vec<&Value> {
    match v {
        Some(Value::Array(items)) => items.iter().collect(),
        Some(v) => vec![v],
        None => Vec::new(),
    }
}

fn record_from_node(node: &Value, i: usize, index: &HashMap<&str, &Value>) -> Result<DatasetRecord, CatalogError> {
    let dataset_id = text(prop(node, &DCT, "identifier"))
        .or_else(|| node.get("@id").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_else(|| format!("#{i}"));

    let modified = match text(prop(node, &DCT, "modified")) {
        Some(s) => Some(parse_date(&s).ok_or_else(|| CatalogError::Record {
            record: dataset_id.clone(),
            message: format!("invalid modification date \"{s}\""),
        })?),
        None => None,
    };

    let distributions: Vec<&Value> = each(prop(node, &DCAT, "distribution")).into_iter().map(|d| resolve(d, index)).collect();
    let resources = distributions
        .iter()
        .map(|d| Resource {
            format: text(prop(d, &DCT, "format")).or_else(|| text(prop(d, &DCAT, "mediaType"))).unwrap_or_default(),
            download_url: text(prop(d, &DCAT, "downloadURL")).or_else(|| text(prop(d, &DCAT, "accessURL"))),
            reachable: None,
        })
        .collect();

    let publisher = prop(node, &DCT, "publisher").and_then(|p| {
        let p = resolve(p, index);
        text(prop(p, &FOAF, "name")).or_else(|| text(Some(p)))
    });

    let license = text(prop(node, &DCT, "license"))
        .or_else(|| distributions.iter().find_map(|d| text(prop(d, &DCT, "license"))));

    let temporal = prop(node, &DCT, "temporal").map(|t| {
        let t = resolve(t, index);
        let date = |local| {
            text(prop(t, &DCAT, local))
                .or_else(|| text(prop(t, &SCHEMA, local)))
                .and_then(|s| parse_date(&s))
        };
        DateInterval { start: date("startDate"), end: date("endDate") }
    });

    let spatial = prop(node, &DCT, "spatial").and_then(|s| {
        let s = resolve(s, index);
        text(prop(s, &SKOS, "prefLabel")).or_else(|| text(Some(s)))
    });

    Ok(DatasetRecord {
        title: text(prop(node, &DCT, "title")).unwrap_or_default(),
        description: text(prop(node, &DCT, "description")).unwrap_or_default(),
        modified,
        update_frequency: text(prop(node, &DCT, "accrualPeriodicity")),
        formats: Vec::new(),
        tags: prop(node, &DCAT, "keyword").map(texts).unwrap_or_default(),
        publisher,
        license,
        temporal_coverage: temporal,
        spatial_coverage: spatial,
        resources,
        views: None,
        downloads: None,
        reuse_count: None,
        page_features: Default::default(),
        page_url: text(prop(node, &DCAT, "landingPage")),
        dataset_id,
    }
    .normalize())
}
