//! One evaluator works through a rating stage over the HTTP API, then the
//! service is restarted and the session resumes where it stopped.
//!
//! Requests go straight to the router, so no port is opened. Run
//! `aigiqa serve --config service.toml` for a real listener.
//!
//! ```text
//! cargo run --example rating_session
//! ```

use std::sync::Arc;

use aigiqa::rating::http::{router, NextItemResponse, OpenSessionRequest, ProgressResponse, RatingRequest, SessionDescriptor};
use aigiqa::rating::{read_events, RatingService, ServiceConfig};
use aigiqa::synth::{generate, SynthSpec};
use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use tower::ServiceExt;

async fn call<T: DeserializeOwned>(app: &Router, method: Method, uri: &str, body: Option<String>) -> (u16, T) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .expect("valid request");
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    (status, serde_json::from_slice(&bytes).expect("json body"))
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let synth = generate(&SynthSpec { per_group: 1, side: 16, ..SynthSpec::default() }, &dir.path().join("db"))?;
    let config = ServiceConfig::from_toml(&format!(
        "stage_count = 2\nseed = 11\ncorpus = {:?}\nstore = {:?}\nevaluators = [\"alice\"]\n",
        synth.manifest,
        dir.path().join("ratings.jsonl"),
    ))?;

    let app = router(Arc::new(RatingService::from_config(&config)?));
    let open = serde_json::to_string(&OpenSessionRequest { evaluator_id: "alice".into(), stage: 1 })?;
    let (_, session): (_, SessionDescriptor) = call(&app, Method::POST, "/api/sessions", Some(open.clone())).await;
    println!("stage 1 of {}: {} images, cursor {}", session.stage_count, session.stage_size, session.cursor);

    // rate two images, then "crash"
    for _ in 0..2 {
        let (_, next): (_, NextItemResponse) = call(&app, Method::GET, "/api/sessions/alice/1/next", None).await;
        let NextItemResponse::Item { image_id, reference, .. } = next else { break };
        let latent = |d| synth.latent(&image_id, d).unwrap_or(2.5);
        let body = RatingRequest {
            image_id: image_id.clone(),
            quality: latent(aigiqa::subjective::Dimension::Quality),
            authenticity: latent(aigiqa::subjective::Dimension::Authenticity),
            correspondence: latent(aigiqa::subjective::Dimension::Correspondence),
        };
        let (status, _): (_, serde_json::Value) =
            call(&app, Method::POST, "/api/sessions/alice/1/ratings", Some(serde_json::to_string(&body)?)).await;
        println!("rated {image_id} (source image: {}) -> {status}", reference.is_some());
    }
    let off_grid = r#"{"image_id":"x","quality":5.005,"authenticity":1,"correspondence":1}"#;
    let (status, err): (_, serde_json::Value) =
        call(&app, Method::POST, "/api/sessions/alice/1/ratings", Some(off_grid.into())).await;
    println!("off-grid score -> {status} {}", err["error"]);
    drop(app);

    let app = router(Arc::new(RatingService::from_config(&config)?));
    let (_, session): (_, SessionDescriptor) = call(&app, Method::POST, "/api/sessions", Some(open)).await;
    println!("after restart: cursor {} of {}", session.cursor, session.stage_size);
    let (_, progress): (_, ProgressResponse) = call(&app, Method::GET, "/api/progress/alice", None).await;
    println!("progress: {}", serde_json::to_string(&progress.stages)?);
    println!("{} events on disk", read_events(&config.store)?.len());
    Ok(())
}
