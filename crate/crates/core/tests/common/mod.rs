#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use nosql_advisor::service::{router, AppState};
use serde_json::Value;
use tower::ServiceExt;

pub fn state() -> Arc<AppState> {
    static STATE: OnceLock<Arc<AppState>> = OnceLock::new();
    STATE.get_or_init(|| Arc::new(AppState::canonical())).clone()
}

pub fn runtime() -> &'static tokio::runtime::Runtime {
    static RT: OnceLock<tokio::runtime::Runtime> = OnceLock::new();
    RT.get_or_init(|| tokio::runtime::Builder::new_current_thread().build().expect("runtime"))
}

pub fn call(req: Request<Body>) -> (StatusCode, Value) {
    runtime().block_on(async {
        let resp = router(state()).oneshot(req).await.expect("infallible");
        let status = resp.status();
        let bytes = resp.into_body().collect().await.expect("body").to_bytes();
        let json = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        (status, json)
    })
}

pub fn get(uri: &str) -> (StatusCode, Value) {
    call(Request::get(uri).body(Body::empty()).unwrap())
}

pub fn post(uri: &str, body: &Value) -> (StatusCode, Value) {
    call(Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap())
}
