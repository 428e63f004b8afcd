//! A small fake portal served over HTTP on an ephemeral local port.
//!
//! Depending on [`PortalFixture`] it speaks the CKAN action API, serves a
//! DCAT JSON-LD catalog, exposes a SPARQL service description, delays or
//! fails selected pages, and serves plain HTML pages for the web probes.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use chrono::{Duration as Days, NaiveDate};
use serde_json::{json, Value};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Ckan,
    Dcat,
    HtmlOnly,
}

#[derive(Debug, Clone)]
pub struct PortalFixture {
    pub flavor: Flavor,
    pub datasets: usize,
    /// CKAN accepts `views_recent desc`.
    pub relevance_sort: bool,
    /// CKAN accepts `metadata_modified desc`.
    pub modified_sort: bool,
    pub sparql: bool,
    /// Delay before the homepage answers.
    pub home_delay: Duration,
    /// Paths answered with 500.
    pub failing_paths: Vec<String>,
    /// Newest modification date in the generated catalog.
    pub newest: NaiveDate,
}

impl PortalFixture {
    pub fn ckan(datasets: usize) -> Self {
        PortalFixture {
            flavor: Flavor::Ckan,
            datasets,
            relevance_sort: true,
            modified_sort: true,
            sparql: false,
            home_delay: Duration::ZERO,
            failing_paths: Vec::new(),
            newest: NaiveDate::from_ymd_opt(2024, 6, 10).unwrap(),
        }
    }

    pub fn dcat(datasets: usize) -> Self {
        PortalFixture { flavor: Flavor::Dcat, relevance_sort: false, modified_sort: false, ..Self::ckan(datasets) }
    }

    pub fn html_only() -> Self {
        PortalFixture { flavor: Flavor::HtmlOnly, datasets: 0, ..Self::dcat(0) }
    }

    pub fn sorts(mut self, relevance: bool, modified: bool) -> Self {
        self.relevance_sort = relevance;
        self.modified_sort = modified;
        self
    }

    pub fn with_sparql(mut self) -> Self {
        self.sparql = true;
        self
    }

    pub fn home_delay(mut self, d: Duration) -> Self {
        self.home_delay = d;
        self
    }

    pub fn failing(mut self, path: &str) -> Self {
        self.failing_paths.push(path.to_string());
        self
    }
}

const FREQUENCIES: [&str; 6] = ["monthly", "annual", "unknown", "weekly", "", "quarterly"];

/// Generated dataset number `i`, as a CKAN package.
pub fn ckan_package(fx: &PortalFixture, base: &str, i: usize) -> Value {
    let name = format!("dataset-{i:02}");
    let modified = fx.newest - Days::days(9 * i as i64);
    let freq = FREQUENCIES[i % FREQUENCIES.len()];
    let mut extras = vec![json!({"key": "temporal_start", "value": "2020-01-01"})];
    if !freq.is_empty() {
        extras.push(json!({"key": "frequency", "value": freq}));
    }
    let mut resources = vec![json!({
        "format": if i % 4 == 3 { "PDF" } else { "CSV" },
        "url": if i % 5 == 4 { format!("{base}/files/missing-{i}.csv") } else { format!("{base}/files/{name}.csv") },
        "datastore_active": i % 2 == 0,
    })];
    if i % 3 == 0 {
        resources.push(json!({"format": "application/json", "url": format!("{base}/files/{name}.json")}));
    }
    let tags: Vec<Value> =
        if i % 6 == 5 { Vec::new() } else { vec![json!({"name": "stats"}), json!({"name": format!("topic-{}", i % 4)})] };
    let mut pkg = json!({
        "id": format!("ds-{i:02}"),
        "name": name,
        "title": format!("Dataset {i}"),
        "notes": format!("Generated dataset number {i}"),
        "metadata_modified": format!("{modified}T08:00:00.000000"),
        "organization": {"name": "stat", "title": "Statistics Office"},
        "tags": tags,
        "extras": extras,
        "resources": resources,
        "tracking_summary": {"total": (i * 37) % 101, "recent": (i * 37) % 101},
        "num_showcases": i % 3,
    });
    if i % 7 != 6 {
        pkg["license_title"] = json!("CC-BY-4.0");
    }
    pkg
}

fn dcat_dataset(fx: &PortalFixture, base: &str, i: usize) -> Value {
    let modified = fx.newest - Days::days(9 * i as i64);
    let freq = match FREQUENCIES[i % FREQUENCIES.len()] {
        "" => None,
        f => Some(format!("http://publications.europa.eu/resource/authority/frequency/{}", f.to_uppercase())),
    };
    let mut ds = json!({
        "@id": format!("{base}/dataset/dataset-{i:02}"),
        "@type": "dcat:Dataset",
        "dct:identifier": format!("ds-{i:02}"),
        "dct:title": format!("Dataset {i}"),
        "dct:description": format!("Generated dataset number {i}"),
        "dct:modified": modified.to_string(),
        "dct:publisher": {"@id": format!("{base}/org/stat")},
        "dct:license": "http://creativecommons.org/licenses/by/4.0/",
        "dcat:keyword": ["stats"],
        "dcat:landingPage": format!("{base}/dataset/dataset-{i:02}"),
        "dcat:distribution": [{
            "@type": "dcat:Distribution",
            "dct:format": if i % 4 == 3 { "PDF" } else { "CSV" },
            "dcat:downloadURL": format!("{base}/files/dataset-{i:02}.csv"),
        }],
    });
    if let Some(f) = freq {
        ds["dct:accrualPeriodicity"] = json!({"@id": f});
    }
    ds
}

pub fn dcat_document(fx: &PortalFixture, base: &str) -> Value {
    let mut graph = vec![json!({"@id": format!("{base}/org/stat"), "@type": "foaf:Agent", "foaf:name": "Statistics Office"})];
    graph.extend((0..fx.datasets).map(|i| dcat_dataset(fx, base, i)));
    json!({
        "@context": {
            "dcat": "http://www.w3.org/ns/dcat#",
            "dct": "http://purl.org/dc/terms/",
            "foaf": "http://xmlns.com/foaf/0.1/"
        },
        "@graph": graph,
    })
}

struct AppState {
    fx: PortalFixture,
    base: String,
    hits: AtomicUsize,
}

type Shared = Arc<AppState>;

fn failing(st: &AppState, path: &str) -> bool {
    st.fx.failing_paths.iter().any(|p| p == path)
}

fn html(title: &str, body: &str) -> Response {
    let page = format!(
        "<!DOCTYPE html><html lang=\"en\"><head><title>{title}</title></head>\
         <body><nav><a href=\"/\">Home</a> <a href=\"/dataset\">Datasets</a></nav>\
         <img src=\"/logo.png\" alt=\"Portal logo\"><main>{body}</main></body></html>"
    );
    ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], page).into_response()
}

fn server_error() -> Response {
    (StatusCode::INTERNAL_SERVER_ERROR, "internal error").into_response()
}

async fn home(State(st): State<Shared>) -> Response {
    st.hits.fetch_add(1, Ordering::Relaxed);
    if !st.fx.home_delay.is_zero() {
        tokio::time::sleep(st.fx.home_delay).await;
    }
    if failing(&st, "/") {
        return server_error();
    }
    html("Fixture open data portal", "<h1>Open data</h1><form><label for=q>Search</label><input id=q name=q></form>")
}

async fn catalog_page(State(st): State<Shared>) -> Response {
    if failing(&st, "/dataset") {
        return server_error();
    }
    let items: String = (0..st.fx.datasets).map(|i| format!("<li><a href=\"/dataset/dataset-{i:02}\">Dataset {i}</a></li>")).collect();
    html("Datasets", &format!("<ul>{items}</ul>"))
}

async fn dataset_page(State(st): State<Shared>, Path(name): Path<String>) -> Response {
    if failing(&st, &format!("/dataset/{name}")) {
        return server_error();
    }
    html(&name, "<p>Dataset page</p>")
}

async fn file(State(st): State<Shared>, Path(name): Path<String>) -> Response {
    if name.starts_with("missing") || failing(&st, &format!("/files/{name}")) {
        return (StatusCode::NOT_FOUND, "not found").into_response();
    }
    ([(header::CONTENT_TYPE, "text/csv")], "year,value\n2023,1\n").into_response()
}

fn ckan_error(status: StatusCode, message: &str) -> Response {
    (status, axum::Json(json!({"success": false, "error": {"message": message, "__type": "Search Query Error"}})))
        .into_response()
}

async fn package_search(State(st): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    if st.fx.flavor != Flavor::Ckan {
        return (StatusCode::NOT_FOUND, "not found").into_response();
    }
    if failing(&st, "/api/3/action/package_search") {
        return server_error();
    }
    let rows: usize = q.get("rows").and_then(|r| r.parse().ok()).unwrap_or(10).min(1000);
    let start: usize = q.get("start").and_then(|r| r.parse().ok()).unwrap_or(0);
    let mut order: Vec<usize> = (0..st.fx.datasets).collect();
    let views = |i: usize| (i * 37) % 101;
    match q.get("sort").map(|s| s.trim()) {
        None | Some("") | Some("score desc, metadata_modified desc") => {}
        Some("views_recent desc") if st.fx.relevance_sort => {
            order.sort_by(|a, b| views(*b).cmp(&views(*a)).then(a.cmp(b)));
        }
        Some("metadata_modified desc") if st.fx.modified_sort => {
            // dataset i is 9*i days older than the newest
        }
        Some(other) => return ckan_error(StatusCode::CONFLICT, &format!("Can not sort by {other}")),
    }
    let results: Vec<Value> = order.iter().skip(start).take(rows).map(|&i| ckan_package(&st.fx, &st.base, i)).collect();
    axum::Json(json!({"success": true, "result": {"count": st.fx.datasets, "results": results}})).into_response()
}

async fn package_show(State(st): State<Shared>, Query(q): Query<HashMap<String, String>>) -> Response {
    let id = q.get("id").cloned().unwrap_or_default();
    let found = (0..st.fx.datasets).find(|i| format!("ds-{i:02}") == id || format!("dataset-{i:02}") == id);
    match found {
        Some(i) if st.fx.flavor == Flavor::Ckan => {
            axum::Json(json!({"success": true, "result": ckan_package(&st.fx, &st.base, i)})).into_response()
        }
        _ => (StatusCode::NOT_FOUND, axum::Json(json!({"success": false, "error": {"message": "Not found"}})))
            .into_response(),
    }
}

async fn api_root(State(st): State<Shared>) -> Response {
    if st.fx.flavor != Flavor::Ckan {
        return (StatusCode::NOT_FOUND, "not found").into_response();
    }
    axum::Json(json!({"version": 3})).into_response()
}

async fn catalog_jsonld(State(st): State<Shared>) -> Response {
    if st.fx.flavor != Flavor::Dcat {
        return (StatusCode::NOT_FOUND, "not found").into_response();
    }
    ([(header::CONTENT_TYPE, "application/ld+json")], dcat_document(&st.fx, &st.base).to_string()).into_response()
}

const SERVICE_DESCRIPTION: &str = "@prefix sd: <http://www.w3.org/ns/sparql-service-description#> .\n\
[] a sd:Service ;\n   sd:endpoint <sparql> ;\n   sd:supportedLanguage sd:SPARQL11Query .\n";

async fn sparql(State(st): State<Shared>, headers: HeaderMap) -> Response {
    if !st.fx.sparql {
        return (StatusCode::NOT_FOUND, "not found").into_response();
    }
    let accept = headers.get(header::ACCEPT).and_then(|v| v.to_str().ok()).unwrap_or("");
    if accept.contains("json") {
        let body = json!({"head": {"vars": []}, "results": {"bindings": []}});
        return ([(header::CONTENT_TYPE, "application/sparql-results+json")], body.to_string()).into_response();
    }
    ([(header::CONTENT_TYPE, "text/turtle")], SERVICE_DESCRIPTION).into_response()
}

/// A running fixture. The server stops when this value is dropped.
pub struct FixtureServer {
    addr: SocketAddr,
    state: Shared,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl FixtureServer {
    /// Binds 127.0.0.1 on an ephemeral port and serves from a dedicated
    /// thread, so callers need no runtime of their own.
    pub fn start(fx: PortalFixture) -> FixtureServer {
        let std_listener = std::net::TcpListener::bind("127.0.0.1:0").expect("bind fixture port");
        std_listener.set_nonblocking(true).expect("nonblocking listener");
        let addr = std_listener.local_addr().expect("local addr");
        let state = Arc::new(AppState { fx, base: format!("http://{addr}"), hits: AtomicUsize::new(0) });
        let app = Router::new()
            .route("/", get(home))
            .route("/dataset", get(catalog_page))
            .route("/dataset/{name}", get(dataset_page))
            .route("/files/{name}", get(file))
            .route("/api/3", get(api_root))
            .route("/api/3/action/package_search", get(package_search))
            .route("/api/3/action/package_show", get(package_show))
            .route("/catalog.jsonld", get(catalog_jsonld))
            .route("/sparql", get(sparql))
            .with_state(state.clone());
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .expect("fixture runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).expect("tokio listener");
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
                    .expect("fixture server");
            });
        });
        FixtureServer { addr, state, shutdown: Some(tx), thread: Some(thread) }
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    /// Number of homepage requests served so far.
    pub fn home_hits(&self) -> usize {
        self.state.hits.load(Ordering::Relaxed)
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// An address nothing listens on.
pub fn dead_address() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}")
}
