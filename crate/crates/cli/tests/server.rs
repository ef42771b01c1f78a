mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;
use vartrace_cli::cli::{execute, Format, RunArgs};
use vartrace_cli::server::{router, AppState};
use vartrace_core::varinterp::run_variational;

fn state(name: &str) -> Arc<AppState> {
    let p = common::load(name);
    let t = run_variational(&p).unwrap().trace;
    AppState::new(p, t, None).unwrap()
}

async fn call(state: &Arc<AppState>, req: Request<Body>) -> (StatusCode, String) {
    let res = router(Arc::clone(state)).oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_focus(focus: &[&str]) -> Request<Body> {
    let body = serde_json::json!({ "focus": focus }).to_string();
    Request::post("/api/project")
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap()
}

fn cli_json(name: &str, focus: &str) -> String {
    let args = RunArgs {
        file: common::corpus_dir().join(format!("{name}.vl")),
        baseline: false,
        project: Some(focus.split(',').map(String::from).collect()),
        project_report: None,
        format: Format::Json,
        out: None,
        stats: false,
        max_steps: None,
        serve: None,
        dump_logs: None,
    };
    let mut out = Vec::new();
    let mut err = Vec::new();
    execute(&args, &mut out, &mut err);
    String::from_utf8(out).unwrap()
}

#[tokio::test]
async fn trace_and_options() {
    let s = state("geterr");
    let (status, body) = call(&s, get("/api/trace")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.contains(r#""context":"!flag & ipv4""#));
    let (_, body) = call(&s, get("/api/options")).await;
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["options"], serde_json::json!(["flag", "ipv4"]));
    assert_eq!(v["focus"], serde_json::json!(["flag", "ipv4"]));
}

#[tokio::test]
async fn projection_replaces_the_current_trace() {
    let s = state("geterr");
    let (_, full) = call(&s, get("/api/trace")).await;

    let (status, body) = call(&s, post_focus(&["flag"])).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!body.contains("Exception"));
    let (_, now) = call(&s, get("/api/trace")).await;
    assert_eq!(now, body);
    let (_, opts) = call(&s, get("/api/options")).await;
    assert!(opts.contains(r#""focus":["flag"]"#));

    // empty focus: the single all-false configuration shows no differences
    let (_, none) = call(&s, post_focus(&[])).await;
    let v: serde_json::Value = serde_json::from_str(&none).unwrap();
    assert_eq!(v["nodes"], serde_json::json!([]));

    let (_, all) = call(&s, post_focus(&["flag", "ipv4"])).await;
    assert_eq!(all, full);
}

#[tokio::test]
async fn bad_focus_is_rejected() {
    let s = state("geterr");
    let (status, body) = call(&s, post_focus(&["nope"])).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body.contains("unknown option `nope`"));
    // the current projection is untouched
    let (_, opts) = call(&s, get("/api/options")).await;
    assert!(opts.contains(r#""focus":["flag","ipv4"]"#));
}

#[tokio::test]
async fn source_lines_match_locations() {
    let s = state("geterr");
    let (status, body) = call(&s, get("/api/source?file=geterr.vl")).await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    let lines: Vec<String> = serde_json::from_value(v["lines"].clone()).unwrap();
    let (_, trace) = call(&s, get("/api/trace")).await;
    let t: serde_json::Value = serde_json::from_str(&trace).unwrap();
    let exc = t["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|n| n["kind"] == "Exception")
        .unwrap();
    let line = exc["location"]["line"].as_u64().unwrap() as usize;
    let col = exc["location"]["col"].as_u64().unwrap() as usize;
    assert!(lines[line - 1][col - 1..].starts_with("deref(err)"));

    let (status, _) = call(&s, get("/api/source?file=other.vl")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn service_matches_command_line_projection() {
    for (name, focus) in [("elevator", "executivefloor,empty,weight"), ("geterr", "ipv4"), ("email", "sign,verify")] {
        let s = state(name);
        let list: Vec<&str> = focus.split(',').collect();
        let (_, body) = call(&s, post_focus(&list)).await;
        assert_eq!(body + "\n", cli_json(name, focus), "{name}");
    }
}

#[tokio::test]
async fn index_page() {
    let s = state("geterr");
    let (status, body) = call(&s, get("/")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.contains("/api/trace"));
}
