//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use aigiqa::rating::{RatingService, ServiceConfig};
use aigiqa::synth::{generate, SynthCorpus, SynthSpec};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tower::ServiceExt;

pub fn synth(dir: &Path, spec: SynthSpec) -> SynthCorpus {
    generate(&spec, &dir.join("db")).expect("synthetic corpus")
}

pub fn service_config(manifest: PathBuf, store: PathBuf, stage_count: u32, evaluators: &[&str]) -> ServiceConfig {
    ServiceConfig {
        stage_count,
        seed: 2024,
        listen: "127.0.0.1:0".into(),
        corpus: manifest,
        store,
        evaluators: evaluators.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn app(config: &ServiceConfig) -> Router {
    aigiqa::rating::http::router(Arc::new(RatingService::from_config(config).expect("service starts")))
}

/// Sends one request and returns the status with the raw body.
pub async fn call<B: Serialize>(app: &Router, method: Method, uri: &str, body: Option<&B>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(b).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn call_json<B: Serialize, T: DeserializeOwned>(app: &Router, method: Method, uri: &str, body: Option<&B>) -> (StatusCode, T) {
    let (status, bytes) = call(app, method, uri, body).await;
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{uri}: {e}: {}", String::from_utf8_lossy(&bytes)));
    (status, value)
}

pub fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap()
}
