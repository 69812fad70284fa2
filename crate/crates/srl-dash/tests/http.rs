mod common;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use chrono::{TimeDelta, TimeZone, Utc};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use srl_dash::http::{router, AppState, GENERATION_HEADER};
use srl_dash::store::ContentStore;
use srl_dash::usage_log::UsageLog;
use srl_dash_core::usage::{usage_report, Screen, UsageEvent};

use common::{restamp, shared};

fn app() -> (AppState, Router) {
    let state = AppState::new(ContentStore::in_memory(), UsageLog::in_memory());
    (state.clone(), router(state))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_json(uri: &str, body: String) -> Request<Body> {
    Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body))
        .unwrap()
}

fn json(body: &[u8]) -> Value {
    serde_json::from_slice(body).unwrap()
}

fn visit(session: &str, page: Screen, offset: i64, secs: i64) -> UsageEvent {
    let t = Utc.with_ymd_and_hms(2024, 5, 2, 8, 0, 0).unwrap() + TimeDelta::seconds(offset);
    UsageEvent {
        session_id: session.into(),
        page,
        entered_at: t,
        left_at: t + TimeDelta::seconds(secs),
    }
}

#[tokio::test]
async fn publish_then_read_every_bundle_byte_for_byte() {
    let (_, app) = app();
    let (status, _, body) = send(&app, post_json("/admin/publish", serde_json::to_string(shared()).unwrap())).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    assert_eq!(json(&body)["generation"], 1);

    for b in shared() {
        let uri = format!(
            "/courses/c1/content?from_week={}&to_week={}&page={}&view={}",
            b.week_range.from, b.week_range.to, b.page, b.view
        );
        let (status, headers, body) = send(&app, get(&uri)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(headers[GENERATION_HEADER], "1");
        assert_eq!(headers[header::CONTENT_TYPE], "application/json");
        assert_eq!(body, serde_json::to_vec(b).unwrap());
    }
}

#[tokio::test]
async fn courses_lists_published_ranges() {
    let (state, app) = app();
    let (_, _, body) = send(&app, get("/courses")).await;
    assert_eq!(json(&body)["courses"], serde_json::json!([]));
    state.store.publish(shared()).unwrap();
    let (status, _, body) = send(&app, get("/courses")).await;
    assert_eq!(status, StatusCode::OK);
    let v = json(&body);
    assert_eq!(v["generation"], 1);
    assert_eq!(v["courses"][0]["course_id"], "c1");
    assert_eq!(
        v["courses"][0]["week_ranges"],
        serde_json::json!([{ "from": 1, "to": 3 }, { "from": 2, "to": 3 }])
    );
}

#[tokio::test]
async fn content_errors_map_to_statuses() {
    let (state, app) = app();
    state.store.publish(shared()).unwrap();
    let cases = [
        ("/courses/zz/content?from_week=1&to_week=3&page=summary&view=aggregated", StatusCode::NOT_FOUND, "not_found"),
        ("/courses/c1/content?from_week=3&to_week=1&page=summary&view=aggregated", StatusCode::BAD_REQUEST, "invalid_range"),
        ("/courses/c1/content?from_week=1&to_week=3&page=weather&view=aggregated", StatusCode::BAD_REQUEST, "bad_request"),
        ("/courses/c1/content?from_week=1&to_week=3&page=summary&view=groups", StatusCode::NOT_FOUND, "not_found"),
        ("/courses/c1/content?page=summary", StatusCode::BAD_REQUEST, "bad_request"),
    ];
    for (uri, status, kind) in cases {
        let (got, _, body) = send(&app, get(uri)).await;
        assert_eq!(got, status, "{uri}");
        assert_eq!(json(&body)["error"], kind, "{uri}");
    }
}

#[tokio::test]
async fn incomplete_publish_is_a_conflict() {
    let (state, app) = app();
    let partial: Vec<_> = shared().iter().skip(1).cloned().collect();
    let (status, _, body) = send(&app, post_json("/admin/publish", serde_json::to_string(&partial).unwrap())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(json(&body)["error"], "incomplete_run");
    assert_eq!(state.store.generation(), 0);
    let (status, _, _) = send(&app, post_json("/admin/publish", "{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn admin_routes_honor_the_bearer_token() {
    let state = AppState::new(ContentStore::in_memory(), UsageLog::in_memory()).with_admin_token("s3cret");
    let app = router(state.clone());
    let body = serde_json::to_string(shared()).unwrap();
    let (status, _, _) = send(&app, post_json("/admin/publish", body.clone())).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let req = Request::post("/admin/publish")
        .header(header::AUTHORIZATION, "Bearer wrong")
        .body(Body::from(body.clone()))
        .unwrap();
    assert_eq!(send(&app, req).await.0, StatusCode::UNAUTHORIZED);
    let req = Request::post("/admin/publish")
        .header(header::AUTHORIZATION, "Bearer s3cret")
        .body(Body::from(body))
        .unwrap();
    assert_eq!(send(&app, req).await.0, StatusCode::OK);
    // reads stay open
    assert_eq!(send(&app, get("/courses")).await.0, StatusCode::OK);
}

#[tokio::test]
async fn rollback_endpoint() {
    let (state, app) = app();
    state.store.publish(shared()).unwrap();
    state.store.publish(&restamp(shared(), "run-2")).unwrap();
    let (status, _, body) = send(&app, post_json("/admin/rollback", String::new())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["generation"], 1);
    let (status, _, _) = send(&app, post_json("/admin/rollback", String::new())).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn help_topics() {
    let (_, app) = app();
    let (status, _, body) = send(&app, get("/help/proactivity")).await;
    assert_eq!(status, StatusCode::OK);
    let text = json(&body)["text"].as_str().unwrap().to_string();
    assert!(text.contains("delay") && text.contains("anticipation"));
    assert_eq!(send(&app, get("/help/nonsense")).await.0, StatusCode::NOT_FOUND);
    let (_, _, body) = send(&app, get("/help")).await;
    assert!(json(&body)["topics"].as_array().unwrap().len() >= 7);
}

#[tokio::test]
async fn usage_events_are_idempotent_and_validated() {
    let (state, app) = app();
    let batch = vec![
        visit("t1", Screen::Summary, 0, 30),
        visit("t1", Screen::Effort, 30, 60),
        visit("t1", Screen::EffortGroups, 90, 20),
    ];
    let body = serde_json::to_string(&batch).unwrap();
    let (status, _, resp) = send(&app, post_json("/usage/events", body.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&resp)["accepted"], 3);
    let (_, _, resp) = send(&app, post_json("/usage/events", body)).await;
    assert_eq!(json(&resp)["accepted"], 0);

    let wrapped = serde_json::json!({ "events": [visit("t2", Screen::Profiles, 0, 10)] }).to_string();
    let (_, _, resp) = send(&app, post_json("/usage/events", wrapped)).await;
    assert_eq!(json(&resp)["accepted"], 1);

    let mut bad = visit("t3", Screen::Control, 0, 5);
    bad.left_at = bad.entered_at - TimeDelta::seconds(5);
    let (status, _, resp) = send(&app, post_json("/usage/events", serde_json::to_string(&[bad]).unwrap())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json(&resp)["error"], "malformed_event");
    let (status, _, _) = send(&app, post_json("/usage/events", r#"[{"session_id":"x"}]"#.into())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(state.usage.len(), 4);
}

#[tokio::test]
async fn usage_report_matches_library_output() {
    let (state, app) = app();
    let events = srl_dash::run::synth_usage(70, 3, Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()).unwrap();
    state.usage.record(&events).unwrap();
    let (status, _, body) = send(&app, get("/usage/report?min_p=0.12")).await;
    assert_eq!(status, StatusCode::OK);
    let expected = usage_report(&events, 0.12, true).unwrap();
    assert_eq!(body, serde_json::to_vec(&expected).unwrap());
    let (_, _, body) = send(&app, get("/usage/report?min_p=0.12&self_loops=false")).await;
    assert_eq!(json(&body)["self_loops"], false);
    assert_eq!(send(&app, get("/usage/report?min_p=2")).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn serves_over_a_real_socket() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let (state, _) = app();
    state.store.publish(shared()).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(srl_dash::http::serve(listener, state, async {
        let _ = rx.await;
    }));
    let mut stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    stream
        .write_all(b"GET /help/effort HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).await.unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"topic\":\"effort\""));
    tx.send(()).unwrap();
    server.await.unwrap().unwrap();
}
