mod common;

use aigiqa::rating::http::{ErrorBody, NextItemResponse, OpenSessionRequest, ProgressResponse, RatingRequest, SessionDescriptor};
use aigiqa::rating::Acknowledgment;
use aigiqa::synth::SynthSpec;
use axum::http::{Method, StatusCode};
use common::*;

fn rating(image_id: &str, quality: f64) -> RatingRequest {
    RatingRequest {
        image_id: image_id.to_string(),
        quality,
        authenticity: 2.80,
        correspondence: 4.00,
    }
}

#[test]
fn full_stage_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec { per_group: 1, ..SynthSpec::default() });
    let config = service_config(db.manifest.clone(), dir.path().join("ratings.jsonl"), 2, &["e1"]);
    let app = app(&config);

    runtime().block_on(async {
        let open = OpenSessionRequest { evaluator_id: "e1".into(), stage: 2 };
        let (status, session): (_, SessionDescriptor) = call_json(&app, Method::POST, "/api/sessions", Some(&open)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!((session.stage_count, session.cursor, session.stage_size), (2, 0, 4));

        for (i, expected) in session.order.iter().enumerate() {
            let (status, next): (_, NextItemResponse) =
                call_json::<(), _>(&app, Method::GET, "/api/sessions/e1/2/next", None).await;
            assert_eq!(status, StatusCode::OK);
            let NextItemResponse::Item { image_id, position, image, reference, .. } = next else {
                panic!("stage ended at {i}");
            };
            assert_eq!((&image_id, position), (expected, i));
            assert_eq!(&image.decode().unwrap()[..4], b"\x89PNG");
            assert_eq!(reference.is_some(), db.corpus.get(&image_id).unwrap().has_reference());

            let (status, ack): (_, Acknowledgment) =
                call_json(&app, Method::POST, "/api/sessions/e1/2/ratings", Some(&rating(&image_id, 3.25))).await;
            assert_eq!(status, StatusCode::OK);
            assert_eq!(ack.cursor, i + 1);
        }

        let (_, next): (_, NextItemResponse) = call_json::<(), _>(&app, Method::GET, "/api/sessions/e1/2/next", None).await;
        assert_eq!(next, NextItemResponse::Complete { rated: 4, stage_size: 4 });

        let (_, progress): (_, ProgressResponse) = call_json::<(), _>(&app, Method::GET, "/api/progress/e1", None).await;
        assert_eq!(progress.stages.iter().map(|s| s.rated).collect::<Vec<_>>(), vec![0, 4]);
    });
}

#[test]
fn errors_map_to_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec { per_group: 1, ..SynthSpec::default() });
    let config = service_config(db.manifest.clone(), dir.path().join("ratings.jsonl"), 2, &["e1"]);
    let app = app(&config);

    runtime().block_on(async {
        let (status, err): (_, ErrorBody) = call_json(
            &app,
            Method::POST,
            "/api/sessions",
            Some(&OpenSessionRequest { evaluator_id: "e1".into(), stage: 3 }),
        )
        .await;
        assert_eq!((status, err.error.as_str()), (StatusCode::NOT_FOUND, "stage_out_of_range"));

        let (status, err): (_, ErrorBody) = call_json::<(), _>(&app, Method::GET, "/api/progress/nobody", None).await;
        assert_eq!((status, err.error.as_str()), (StatusCode::NOT_FOUND, "unknown_evaluator"));

        let (_, session): (_, SessionDescriptor) = call_json(
            &app,
            Method::POST,
            "/api/sessions",
            Some(&OpenSessionRequest { evaluator_id: "e1".into(), stage: 1 }),
        )
        .await;
        let first = &session.order[0];
        let uri = "/api/sessions/e1/1/ratings";

        let (status, err): (_, ErrorBody) = call_json(&app, Method::POST, uri, Some(&rating(first, 5.005))).await;
        assert_eq!((status, err.error.as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "score_off_grid"));
        let (status, err): (_, ErrorBody) = call_json(&app, Method::POST, uri, Some(&rating(first, 5.01))).await;
        assert_eq!((status, err.error.as_str()), (StatusCode::UNPROCESSABLE_ENTITY, "score_out_of_range"));
        let (status, err): (_, ErrorBody) = call_json(&app, Method::POST, uri, Some(&rating(&session.order[1], 1.0))).await;
        assert_eq!((status, err.error.as_str()), (StatusCode::CONFLICT, "out_of_order"));

        let (status, _) = call(&app, Method::POST, uri, Some(&rating(first, 1.0))).await;
        assert_eq!(status, StatusCode::OK);
        let (status, err): (_, ErrorBody) = call_json(&app, Method::POST, uri, Some(&rating(first, 2.0))).await;
        assert_eq!((status, err.error.as_str()), (StatusCode::CONFLICT, "duplicate"));

        let (status, _) = call(&app, Method::POST, uri, Some(&serde_json::json!({"image_id": first}))).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    });
}

#[test]
fn restart_resumes_at_the_stored_cursor() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), SynthSpec { per_group: 1, ..SynthSpec::default() });
    let config = service_config(db.manifest.clone(), dir.path().join("ratings.jsonl"), 1, &["e1"]);
    let open = OpenSessionRequest { evaluator_id: "e1".into(), stage: 1 };

    let order = runtime().block_on(async {
        let app = app(&config);
        let (_, s): (_, SessionDescriptor) = call_json(&app, Method::POST, "/api/sessions", Some(&open)).await;
        for id in &s.order[..3] {
            let (status, _) = call(&app, Method::POST, "/api/sessions/e1/1/ratings", Some(&rating(id, 4.5))).await;
            assert_eq!(status, StatusCode::OK);
        }
        s.order
    });

    runtime().block_on(async {
        let app = app(&config);
        let (_, s): (_, SessionDescriptor) = call_json(&app, Method::POST, "/api/sessions", Some(&open)).await;
        assert_eq!((s.order, s.cursor), (order.clone(), 3));
        let (_, next): (_, NextItemResponse) = call_json::<(), _>(&app, Method::GET, "/api/sessions/e1/1/next", None).await;
        assert!(matches!(next, NextItemResponse::Item { image_id, .. } if image_id == order[3]));
    });
}
