#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use loadcast_core::engine::EngineConfig;
use loadcast_core::gbrt::BoostConfig;
use loadcast_service::api::router;
use loadcast_service::ops::Context;
use tower::ServiceExt;

pub const FIXTURE: &str = include_str!("../fixtures/hu_four_weeks.csv");
pub const HU: &str = "10YHU-MAVIR----U";

pub fn calendars() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../calendars")
}

fn small(n_trees: usize, max_depth: usize) -> BoostConfig {
    BoostConfig { n_trees, learning_rate: 0.3, max_depth, min_samples_leaf: 20, ..BoostConfig::default() }
}

/// Few shallow trees, for tests that exercise plumbing rather than accuracy.
pub fn quick_engine() -> EngineConfig {
    EngineConfig { basic: small(5, 3), advanced: small(10, 4), decile: small(5, 2), ..EngineConfig::default() }
}

/// The same settings as a configuration file.
pub const QUICK_CONFIG: &str = r#"
[engine.basic]
n_trees = 5
learning_rate = 0.3
max_depth = 3
min_samples_leaf = 20
loss = { type = "squared" }

[engine.advanced]
n_trees = 10
learning_rate = 0.3
max_depth = 4
min_samples_leaf = 20
loss = { type = "squared" }

[engine.decile]
n_trees = 5
learning_rate = 0.3
max_depth = 2
min_samples_leaf = 20
loss = { type = "squared" }
"#;

pub fn app(dir: &Path, engine: EngineConfig) -> Router {
    router(Context::open(dir, engine, Some(calendars())).unwrap())
}

pub async fn call(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, String) {
    let request = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let content_type = response.headers().get("content-type").map(|v| v.to_str().unwrap().to_string());
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(content_type.as_deref(), Some("application/json"), "{method} {uri}");
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, String) {
    call(app, "GET", uri, Body::empty()).await
}

pub async fn post(app: &Router, uri: &str, body: impl Into<Body>) -> (StatusCode, String) {
    call(app, "POST", uri, body).await
}

/// Every file under `root` with its contents.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for entry in entries {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.clone(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// The fixture cut to its header and first `rows` data rows.
pub fn fixture_rows(rows: usize) -> String {
    FIXTURE.lines().take(rows + 1).map(|l| format!("{l}\n")).collect()
}
