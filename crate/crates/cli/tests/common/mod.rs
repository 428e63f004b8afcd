#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

pub const NOW: &str = "2024-06-15T12:00:00Z";

pub fn oda(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oda-bench"))
        .args(args)
        .args(["--delay-ms", "2", "--timeout-secs", "5"])
        .env("ODA_BENCH_STORE", store)
        .env("ODA_BENCH_NOW", NOW)
        .env_remove("ODA_BENCH_CONFIG")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn describe(o: &Output) -> String {
    format!("exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), stdout(o), String::from_utf8_lossy(&o.stderr))
}

/// `oda-bench serve` on a free port; killed on drop.
pub struct ApiServer {
    child: Child,
    pub base: String,
}

impl ApiServer {
    pub fn start(store: &Path) -> ApiServer {
        let mut child = Command::new(env!("CARGO_BIN_EXE_oda-bench"))
            .args(["serve", "--listen", "127.0.0.1:0", "--delay-ms", "2", "--timeout-secs", "5"])
            .env("ODA_BENCH_STORE", store)
            .env("ODA_BENCH_NOW", NOW)
            .env_remove("ODA_BENCH_CONFIG")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("serve starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let base = line.trim().strip_prefix("listening on ").expect("first line names the address").to_string();
        ApiServer { child, base }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

impl Drop for ApiServer {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct Reply {
    pub status: u16,
    pub version_header: Option<String>,
    pub body: Value,
}

/// One blocking HTTP exchange; the body is sent raw when it is a string.
pub fn call(method: &str, url: &str, body: Option<Value>) -> Reply {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let client = reqwest::Client::new();
        let mut req = client.request(method.parse().unwrap(), url);
        match body {
            Some(Value::String(raw)) => {
                req = req.header("content-type", "application/json").body(raw);
            }
            Some(v) => req = req.json(&v),
            None => {}
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        let version_header =
            resp.headers().get("x-oda-api-version").and_then(|v| v.to_str().ok()).map(str::to_string);
        let text = resp.text().await.unwrap();
        let body = serde_json::from_str(&text).unwrap_or(Value::String(text));
        Reply { status, version_header, body }
    })
}
