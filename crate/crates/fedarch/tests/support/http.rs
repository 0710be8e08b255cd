#![allow(dead_code)]

use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Vec<u8>>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    call(app, Method::GET, uri, None).await
}

pub async fn post(app: &Router, uri: &str, body: impl Into<Vec<u8>>) -> (StatusCode, Vec<u8>) {
    call(app, Method::POST, uri, Some(body.into())).await
}

pub fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

/// Polls a run until its result endpoint answers 200.
pub async fn wait_for(app: &Router, result_uri: &str) -> Vec<u8> {
    for _ in 0..6000 {
        let (status, body) = get(app, result_uri).await;
        if status == StatusCode::OK {
            return body;
        }
        assert_eq!(status, StatusCode::CONFLICT, "{}", String::from_utf8_lossy(&body));
        assert_eq!(json(&body)["code"], "RunNotFinished", "{}", String::from_utf8_lossy(&body));
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    panic!("run at {result_uri} did not finish");
}
