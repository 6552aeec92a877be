use axum::body::{Body, Bytes};
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub struct Reply {
    pub status: StatusCode,
    pub version: Option<u64>,
    pub content_type: String,
    pub body: Bytes,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("{} is not JSON ({e}): {}", self.status, String::from_utf8_lossy(&self.body))
        })
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    /// The `error` kind of a failure body.
    pub fn kind(&self) -> String {
        self.json()["error"].as_str().unwrap_or_default().to_string()
    }
}

pub async fn send(app: &Router, method: Method, uri: &str, content_type: Option<&str>, body: impl Into<Body>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(ct) = content_type {
        req = req.header(header::CONTENT_TYPE, ct);
    }
    let resp = app
        .clone()
        .oneshot(req.body(body.into()).unwrap())
        .await
        .expect("router is infallible");
    let status = resp.status();
    let version = resp
        .headers()
        .get("x-session-version")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse().ok());
    let content_type = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_string();
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        version,
        content_type,
        body,
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, None, Body::empty()).await
}

pub async fn put_json(app: &Router, uri: &str, v: &Value) -> Reply {
    send(app, Method::PUT, uri, Some("application/json"), v.to_string()).await
}

pub async fn put_text(app: &Router, uri: &str, text: &str) -> Reply {
    send(app, Method::PUT, uri, Some("text/plain"), text.to_string()).await
}

const BOUNDARY: &str = "gazescope-test-boundary";

/// Multipart upload of `(file name, contents)` parts.
pub async fn upload(app: &Router, uri: &str, files: &[(&str, &str)]) -> Reply {
    let mut body = String::new();
    for (name, contents) in files {
        body.push_str(&format!(
            "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{name}\"\r\n\
             Content-Type: text/tab-separated-values\r\n\r\n{contents}\r\n"
        ));
    }
    body.push_str(&format!("--{BOUNDARY}--\r\n"));
    send(
        app,
        Method::POST,
        uri,
        Some(&format!("multipart/form-data; boundary={BOUNDARY}")),
        body,
    )
    .await
}

/// Creates a session and returns its id.
pub async fn create(app: &Router) -> String {
    let r = send(app, Method::POST, "/api/sessions", None, Body::empty()).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    r.json()["session_id"].as_str().unwrap().to_string()
}

/// Two dwell-cluster samples, three AOIs, two shared TWIs and sample groups.
/// `seed` shifts the geometry so different seeds give different sessions.
pub async fn populate(app: &Router, id: &str, seed: u64) {
    let shift = seed as f64 * 37.0;
    let p1 = super::gaze_tsv(&[
        ((100.0 + shift, 100.0), 200.0),
        ((400.0, 120.0 + shift), 150.0),
        ((120.0 + shift, 110.0), 300.0),
        ((800.0, 600.0), 250.0),
        ((410.0, 130.0 + shift), 120.0),
    ]);
    let p2 = super::gaze_tsv(&[
        ((410.0, 100.0 + shift), 180.0),
        ((90.0 + shift, 90.0), 400.0),
        ((700.0 - shift, 300.0), 220.0),
        ((420.0, 110.0), 160.0),
    ]);
    let r = upload(app, &format!("/api/sessions/{id}/samples"), &[("P1.tsv", &p1), ("P2.tsv", &p2)]).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let aois = serde_json::json!([
        {"id": "A", "shape": {"type": "rect", "x": 0, "y": 0, "w": 300, "h": 300}, "precedence": 0, "gid": 1},
        {"id": "B", "shape": {"type": "rect", "x": 350, "y": 50, "w": 200, "h": 200}, "precedence": 1, "gid": 1},
        {"id": "C", "shape": {"type": "polygon", "vertices": [[600, 200], [900, 200], [750, 700]]}, "precedence": 2, "gid": 2}
    ]);
    let r = put_json(app, &format!("/api/sessions/{id}/aois"), &aois).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let r = put_text(app, &format!("/api/sessions/{id}/twis"), "0\t900\tearly\t1\n900\t3000\tlate\t2\n").await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let r = put_json(
        app,
        &format!("/api/sessions/{id}/groups/samples"),
        &serde_json::json!({"P1": 4, "P2": 4 + seed}),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
}

/// Read endpoints the browser client relies on.
pub fn read_uris(id: &str) -> Vec<String> {
    [
        "",
        "/fixations",
        "/saccades",
        "/labels",
        "/fixations?sample=P2&scope=all,group:1",
        "/metrics",
        "/metrics?format=tsv",
        "/matrix?rows=sample&cols=aoi&metric=fixation_count",
        "/matrix?rows=sample&cols=aoi&metric=haar",
        "/matrix?rows=aoi&cols=aoi&metric=direct",
        "/matrix?rows=sample&cols=sample&metric=nw&reorder=global",
        "/matrix?rows=sample&cols=twi&metric=total_duration",
        "/matrix?rows=sample_group&cols=aoi_group&metric=mean_duration",
        "/histogram?metric=fixation_duration&bins=5",
        "/density?grid_width=32",
        "/bundles",
        "/timeline",
        "/focus-context?aoi=A",
        "/notes",
        "/export",
    ]
    .iter()
    .map(|u| format!("/api/sessions/{id}{u}"))
    .collect()
}
