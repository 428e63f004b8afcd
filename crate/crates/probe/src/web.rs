//! Load time, health sweep and API/SPARQL endpoint detection.

use oda_core::catalog::Platform;
use oda_core::evidence::{EndpointEvidence, EndpointFinding, LoadEvidence};
use oda_core::web::{HealthSweep, LoadMeasurement, PageCheck};
use oda_core::VerdictValue;

use crate::catalog::{base_url, PlatformDetection};
use crate::{ProbeError, Prober};

pub const LOAD_ATTEMPTS: usize = 3;

const RDF_TYPES: [&str; 5] =
    ["text/turtle", "application/rdf+xml", "application/ld+json", "application/n-triples", "application/n-quads"];

fn is_rdf(content_type: &str) -> bool {
    let ct = content_type.to_ascii_lowercase();
    RDF_TYPES.iter().any(|t| ct.starts_with(t))
}

impl Prober {
    /// Three sequential cold fetches of the document; the median decides.
    pub async fn measure_load_time(&self, url: &str) -> LoadEvidence {
        let mut attempts = Vec::new();
        let mut failures = Vec::new();
        for _ in 0..LOAD_ATTEMPTS {
            match self.get_cold(url).await {
                Ok(f) if f.status < 400 => attempts.push(f.elapsed.as_millis() as u64),
                Ok(f) => failures.push(format!("HTTP {}", f.status)),
                Err(e) => failures.push(e.to_string()),
            }
        }
        LoadEvidence {
            url: url.to_string(),
            measurement: LoadMeasurement::from_attempts(url, attempts, failures.clone()),
            failures,
        }
    }

    pub async fn probe_health(&self, urls: &[String]) -> HealthSweep {
        let mut pages = Vec::with_capacity(urls.len());
        for url in urls {
            pages.push(match self.get(url, Some("text/html,*/*;q=0.8")).await {
                Ok(f) => PageCheck { url: url.clone(), status: Some(f.status), error: None, body_bytes: f.body.len() },
                Err(e) => PageCheck { url: url.clone(), status: None, error: Some(e.to_string()), body_bytes: 0 },
            });
        }
        HealthSweep::from_pages(pages)
    }

    /// Suggestions for the API (`f12`) and SPARQL/RDF (`f13`) sub-dimensions.
    pub async fn detect_endpoints(&self, homepage: &str, detection: &PlatformDetection) -> EndpointEvidence {
        let mut findings = Vec::new();
        let site = detection.endpoint.as_deref().filter(|_| detection.platform == Platform::Ckan).map(str::to_string);
        let root = site.clone().unwrap_or_else(|| base_url(homepage));

        let f12 = match &site {
            Some(base) => EndpointFinding {
                sub_dimension_id: "f12".into(),
                suggestion: Some(VerdictValue::PASS),
                url: Some(format!("{base}/api/3/action/package_search")),
                detail: "CKAN action API answers package_search".into(),
            },
            None => {
                let api = format!("{root}/api/3/action/package_search?rows=0");
                match self.get(&api, Some("application/json")).await {
                    Ok(f) if f.ok() && f.body.contains("\"success\"") => EndpointFinding {
                        sub_dimension_id: "f12".into(),
                        suggestion: Some(VerdictValue::PASS),
                        url: Some(api),
                        detail: "CKAN action API answers package_search".into(),
                    },
                    Ok(f) => EndpointFinding {
                        sub_dimension_id: "f12".into(),
                        suggestion: Some(VerdictValue::FAIL),
                        url: Some(api),
                        detail: format!("no documented API found (HTTP {})", f.status),
                    },
                    Err(e) => EndpointFinding {
                        sub_dimension_id: "f12".into(),
                        suggestion: None,
                        url: Some(api),
                        detail: e.to_string(),
                    },
                }
            }
        };
        findings.push(f12);
        findings.push(self.detect_rdf(&root, detection).await);
        EndpointEvidence { findings }
    }

    async fn detect_rdf(&self, root: &str, detection: &PlatformDetection) -> EndpointFinding {
        let finding = |suggestion, url: &str, detail: String| EndpointFinding {
            sub_dimension_id: "f13".into(),
            suggestion,
            url: Some(url.to_string()),
            detail,
        };
        let sparql = format!("{root}/sparql");
        let mut failures: Vec<ProbeError> = Vec::new();
        match self.get(&sparql, Some("text/turtle, application/rdf+xml;q=0.9")).await {
            Ok(f) if f.ok() && (f.body.contains("sparql-service-description") || f.body.contains("sd:Service")) => {
                return finding(Some(VerdictValue::PASS), &sparql, "SPARQL service description served".into());
            }
            Ok(_) => {}
            Err(e) => failures.push(e),
        }
        let mut rdf_candidates = Vec::new();
        if detection.platform == Platform::DcatJsonld {
            rdf_candidates.extend(detection.endpoint.clone());
        }
        rdf_candidates.push(format!("{root}/catalog.ttl"));
        rdf_candidates.push(format!("{root}/catalog.rdf"));
        for url in rdf_candidates {
            match self.get(&url, Some("text/turtle, application/rdf+xml;q=0.9, application/ld+json;q=0.8")).await {
                Ok(f) if f.ok() && is_rdf(&f.content_type) => {
                    return finding(Some(VerdictValue::PASS), &url, format!("RDF served as {}", f.content_type));
                }
                Ok(_) => {}
                Err(e) => failures.push(e),
            }
        }
        if failures.len() >= 3 {
            return finding(None, &sparql, format!("undetermined: {}", failures[0]));
        }
        finding(Some(VerdictValue::FAIL), &sparql, "no SPARQL endpoint or RDF serialization found".into())
    }
}
