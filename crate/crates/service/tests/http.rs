use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sgl_core::Database;
use sgl_service::{router, AppState, BODY_LIMIT};
use tower::ServiceExt;

const CARS: &str = include_str!("../../core/fixtures/cars_sample.csv");
const CARS_FULL: &str = include_str!("../../core/fixtures/cars.csv");
const TREES: &str = include_str!("../../core/fixtures/trees_sample.csv");
const COLOR_SCATTER: &str = include_str!("../../core/fixtures/corpus/03_color.sgl");
const MEAN_BY_YEAR: &str = include_str!("../../core/fixtures/corpus/06_individual_geom.sgl");

fn app() -> Router {
    router(AppState::new(Database::open_in_memory().unwrap()))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, bytes.to_vec())
}

async fn put_csv(app: &Router, name: &str, csv: &str) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(Method::PUT)
        .uri(format!("/tables/{name}"))
        .header(header::CONTENT_TYPE, "text/csv")
        .body(Body::from(csv.to_string()))
        .unwrap();
    let (status, body) = send(app, req).await;
    (status, serde_json::from_slice(&body).unwrap())
}

async fn query(app: &Router, body: Value) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(Method::POST)
        .uri("/query")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, body) = send(app, req).await;
    (status, serde_json::from_slice(&body).unwrap())
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let req = Request::builder().uri(uri).body(Body::empty()).unwrap();
    let (status, body) = send(app, req).await;
    (status, serde_json::from_slice(&body).unwrap())
}

fn first_code(v: &Value) -> &str {
    v["diagnostics"][0]["code"].as_str().unwrap()
}

#[tokio::test]
async fn health_reports_version() {
    let (status, v) = get_json(&app(), "/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[tokio::test]
async fn scatter_query_returns_svg() {
    let app = app();
    put_csv(&app, "cars", CARS).await;
    let (status, v) = query(&app, json!({ "sgl": COLOR_SCATTER })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
    assert!(v["warnings"].is_array());
    assert!(v["timing_ms"].as_f64().unwrap() >= 0.0);
}

#[tokio::test]
async fn raw_svg_on_accept_header() {
    let app = app();
    put_csv(&app, "cars", CARS).await;
    let req = Request::builder()
        .method(Method::POST)
        .uri("/query")
        .header(header::ACCEPT, "image/svg+xml")
        .body(Body::from(json!({ "sgl": COLOR_SCATTER }).to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()[header::CONTENT_TYPE], "image/svg+xml");
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    assert!(body.starts_with(b"<svg"));
}

#[tokio::test]
async fn parse_error_has_position() {
    let app = app();
    let (status, v) = query(&app, json!({ "sgl": "visualize from cars using points;" })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(first_code(&v), "UnexpectedToken");
    assert_eq!(v["diagnostics"][0]["line"], 1);
    assert_eq!(v["diagnostics"][0]["col"], 11);
}

#[tokio::test]
async fn missing_group_by_is_rejected() {
    let app = app();
    put_csv(&app, "cars", CARS).await;
    let sgl = MEAN_BY_YEAR.replace("group by\n  year\n", "");
    assert!(!sgl.contains("group by"));
    let (status, v) = query(&app, json!({ "sgl": sgl })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(first_code(&v), "E_GROUPBY_INCOMPLETE");
}

#[tokio::test]
async fn malformed_requests() {
    let app = app();
    let req = Request::builder()
        .method(Method::POST)
        .uri("/query")
        .body(Body::from("{not json"))
        .unwrap();
    let (status, body) = send(&app, req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(first_code(&v), "E_REQUEST");

    let (status, v) = query(&app, json!({ "sgl": COLOR_SCATTER, "width": 5 })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(first_code(&v), "E_REQUEST");
}

#[tokio::test]
async fn unknown_table() {
    let (status, v) = query(&app(), json!({ "sgl": COLOR_SCATTER })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(first_code(&v), "E_NO_TABLE");
}

#[tokio::test]
async fn ingestion_and_replacement() {
    let app = app();
    let (status, v) = put_csv(&app, "cars", CARS_FULL).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["columns"].as_array().unwrap().len(), 5);
    assert_eq!(v["row_count"], 406);

    let (status, v) = put_csv(&app, "cars", CARS).await;
    assert_eq!(status, StatusCode::CREATED);
    let sample_rows = CARS.lines().count() - 1;
    assert_eq!(v["row_count"], sample_rows);

    let (_, tables) = get_json(&app, "/tables").await;
    assert_eq!(tables.as_array().unwrap().len(), 1);
    assert_eq!(tables[0]["row_count"], sample_rows);

    let (status, v) = put_csv(&app, "empty", "").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(first_code(&v), "EmptyFile");

    let (status, v) = put_csv(&app, "ragged", "a,b\n1,2\n3\n").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(first_code(&v), "RaggedRow");
}

#[tokio::test]
async fn table_listing() {
    let app = app();
    let (status, v) = get_json(&app, "/tables").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!([]));
    put_csv(&app, "cars", CARS).await;
    put_csv(&app, "trees", TREES).await;
    let (_, v) = get_json(&app, "/tables").await;
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|t| t["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["cars", "trees"]);
}

#[tokio::test]
async fn same_request_same_svg() {
    let app = app();
    put_csv(&app, "cars", CARS).await;
    let jittered = include_str!("../../core/fixtures/corpus/12_jittered.sgl");
    let (_, a) = query(&app, json!({ "sgl": jittered, "seed": 7 })).await;
    let (_, b) = query(&app, json!({ "sgl": jittered, "seed": 7 })).await;
    assert_eq!(a["svg"], b["svg"]);
    let (_, c) = query(&app, json!({ "sgl": jittered, "seed": 8 })).await;
    assert_ne!(a["svg"], c["svg"]);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_ingestion_and_queries() {
    let app = app();
    put_csv(&app, "cars", CARS).await;
    let mut tasks = Vec::new();
    for i in 0..16 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            if i % 4 == 0 {
                let (status, _) = put_csv(&app, &format!("t{i}"), TREES).await;
                assert_eq!(status, StatusCode::CREATED);
            } else {
                let (status, v) = query(&app, json!({ "sgl": COLOR_SCATTER })).await;
                assert_eq!(status, StatusCode::OK, "{v}");
            }
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (_, v) = get_json(&app, "/tables").await;
    assert_eq!(v.as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn oversized_body_is_refused() {
    let app = app();
    let big = "a\n".repeat(BODY_LIMIT / 2 + 16);
    let req = Request::builder()
        .method(Method::PUT)
        .uri("/tables/big")
        .body(Body::from(big))
        .unwrap();
    let (status, _) = send(&app, req).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn catalog_never_shows_partial_table() {
    let app = app();
    put_csv(&app, "cars", CARS).await;
    let sample_rows = (CARS.lines().count() - 1) as u64;
    let writer = {
        let app = app.clone();
        tokio::spawn(async move {
            for i in 0..6 {
                let csv = if i % 2 == 0 { CARS_FULL } else { CARS };
                put_csv(&app, "cars", csv).await;
            }
        })
    };
    let mut seen = Vec::new();
    while !writer.is_finished() {
        let (_, v) = get_json(&app, "/tables").await;
        seen.push(v[0]["row_count"].as_u64().unwrap());
    }
    writer.await.unwrap();
    assert!(seen.iter().all(|&n| n == sample_rows || n == 406), "{seen:?}");
}

#[tokio::test]
async fn subquery_cannot_write() {
    let app = app();
    put_csv(&app, "cars", CARS).await;
    let sgl = "visualize a as x, a as y from (delete from cars returning 1 as a) using points;";
    let (status, v) = query(&app, json!({ "sgl": sgl })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");
    let (_, tables) = get_json(&app, "/tables").await;
    assert_eq!(tables[0]["row_count"], (CARS.lines().count() - 1) as u64);
}
