use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use carve_cli::registry::Registry;
use carve_cli::service::{parse_multipart, router, AppState, PickResponse, BOUNDARY};
use carve_cli::{run, Cli};
use carve_core::io::buffers::{encode_pfm, encode_pgm16, encode_png, frameset_paths};
use carve_core::io::load_scene_dataset;
use carve_core::{ClipMask, ClippingSphere, Scene};
use clap::Parser;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    dir: tempfile::TempDir,
    app: axum::Router,
    scene: Scene,
}

fn phantom(dir: &Path, name: &str, dims: usize) {
    let cli = Cli::parse_from(["carve", "phantom", "--out", dir.join(name).to_str().unwrap(), "--dims", &dims.to_string()]);
    run(cli, &mut Vec::new()).unwrap();
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    phantom(dir.path(), "p", 24);
    phantom(dir.path(), "q", 16);
    let mut scene = Scene::parse(&std::fs::read_to_string(dir.path().join("p_scene.json")).unwrap()).unwrap();
    scene.camera.width = 24;
    scene.camera.height = 20;
    let registry = Registry::scan(dir.path()).unwrap();
    let app = router(Arc::new(AppState::new(registry, 2).unwrap()));
    Fixture { dir, app, scene }
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Vec<u8>) -> (StatusCode, String, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    (status, ctype, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn json_body(v: &Value) -> Vec<u8> {
    serde_json::to_vec(v).unwrap()
}

#[tokio::test]
async fn lists_registered_datasets() {
    let f = fixture();
    let (status, _, body) = call(&f.app, "GET", "/datasets", vec![]).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|d| d["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["p", "q"]);
    assert_eq!(v[0]["dims"], json!([24, 24, 24]));
    assert_eq!(v[0]["labels"], json!("p_labels.nrrd"));
    let ids: Vec<u64> = v[0]["segments"].as_array().unwrap().iter().map(|s| s["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [0, 1, 2, 3, 4]);
    assert_eq!(v[0]["segments"][1]["name"], json!("skin_1"));
}

#[tokio::test]
async fn render_returns_the_three_buffers() {
    let f = fixture();
    let (status, ctype, body) = call(&f.app, "POST", "/render", f.scene.serialize().into_bytes()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype, format!("multipart/mixed; boundary={BOUNDARY}"));
    let parts = parse_multipart(&body).unwrap();
    let names: Vec<&str> = parts.iter().map(|p| p.0.as_str()).collect();
    assert_eq!(names, ["color", "depth", "seg"]);

    let dataset = load_scene_dataset(&f.scene, f.dir.path()).unwrap();
    let frame = carve_core::render(&f.scene, &dataset).unwrap();
    assert_eq!(parts[0].1, encode_png(&frame.color).unwrap());
    assert_eq!(parts[1].1, encode_pfm(&frame.depth));
    assert_eq!(parts[2].1, encode_pgm16(&frame.seg));

    let (status, ctype, seg) = call(&f.app, "POST", "/render?buffer=seg", f.scene.serialize().into_bytes()).await;
    assert_eq!((status, ctype.as_str()), (StatusCode::OK, "image/x-portable-graymap"));
    assert_eq!(seg, parts[2].1);
    let (status, _, _) = call(&f.app, "POST", "/render?buffer=alpha", f.scene.serialize().into_bytes()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn identical_requests_give_identical_bodies() {
    let f = fixture();
    let a = f.scene.serialize().into_bytes();
    let mut other = f.scene.clone();
    other.spheres = vec![ClippingSphere::new([0.0, 0.0, 8.0], 5.0, ClipMask::all(5)).unwrap()];
    let first = call(&f.app, "POST", "/render", a.clone()).await;
    let pick = json!({ "scene": other.to_value(), "pixel": [3, 4] });
    let (app, b) = (f.app.clone(), other.serialize().into_bytes());
    let (x, y, _) = tokio::join!(
        call(&app, "POST", "/render", b),
        call(&app, "POST", "/render", a.clone()),
        call(&app, "POST", "/pick", json_body(&pick)),
    );
    assert_eq!(x.0, StatusCode::OK);
    assert_eq!(y, first);
    assert_eq!(call(&f.app, "POST", "/render", a).await, first);
}

#[tokio::test]
async fn request_errors_map_to_status_codes() {
    let f = fixture();
    let mut v = f.scene.to_value();
    let post = |v: Value| {
        let app = f.app.clone();
        async move { call(&app, "POST", "/render", json_body(&v)).await.0 }
    };

    assert_eq!(call(&f.app, "POST", "/render", b"{not json".to_vec()).await.0, StatusCode::BAD_REQUEST);
    let mut bad = v.clone();
    bad["spheres"] = json!([{ "center": [0, 0, 0], "radius": -1.0, "clipped_labels": [] }]);
    assert_eq!(post(bad).await, StatusCode::BAD_REQUEST);
    let mut bad = v.clone();
    bad.as_object_mut().unwrap().remove("camera");
    assert_eq!(post(bad).await, StatusCode::BAD_REQUEST);

    for path in ["../p_labels.nrrd", "/etc/passwd", "missing_labels.nrrd"] {
        let mut bad = v.clone();
        bad["labels"] = json!(path);
        assert_eq!(post(bad).await, StatusCode::NOT_FOUND, "{path}");
    }
    let mut bad = v.clone();
    bad["color_table"] = json!("nope_colors.txt");
    assert_eq!(post(bad).await, StatusCode::NOT_FOUND);

    v["labels"] = json!("q_labels.nrrd");
    assert_eq!(post(v).await, StatusCode::UNPROCESSABLE_ENTITY);
}

async fn pick(f: &Fixture, scene: &Scene, pixel: [u32; 2]) -> (StatusCode, Option<PickResponse>) {
    let body = json!({ "scene": scene.to_value(), "pixel": pixel });
    let (status, _, bytes) = call(&f.app, "POST", "/pick", json_body(&body)).await;
    (status, serde_json::from_slice(&bytes).ok())
}

#[tokio::test]
async fn pick_reports_label_and_affordance() {
    let f = fixture();
    let center = [12, 10];
    let (status, p) = pick(&f, &f.scene, center).await;
    assert_eq!(status, StatusCode::OK);
    let p = p.unwrap();
    assert_eq!((p.label, p.name.as_deref(), p.clippable), (Some(1), Some("skin_1"), None));
    assert!(p.position.is_some());

    let mut carved = f.scene.clone();
    carved.spheres = vec![ClippingSphere::new([0.0, 0.0, 9.0], 5.0, ClipMask::all(5)).unwrap()];
    let p = pick(&f, &carved, center).await.1.unwrap();
    assert_eq!((p.label, p.clippable), (Some(2), Some(true)));

    let mut mask = ClipMask::all(5);
    mask.toggle(2).unwrap();
    carved.spheres[0].mask = mask;
    let p = pick(&f, &carved, center).await.1.unwrap();
    assert_eq!((p.label, p.clippable), (Some(2), Some(false)));

    let p = pick(&f, &f.scene, [0, 0]).await.1.unwrap();
    assert_eq!(p, PickResponse { label: None, name: None, position: None, clippable: None });

    assert_eq!(pick(&f, &f.scene, [24, 0]).await.0, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&f.app, "POST", "/pick", json_body(&json!({ "pixel": [0, 0] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn cli_and_service_renders_match() {
    let f = fixture();
    let scene_path = f.dir.path().join("snap.json");
    std::fs::write(&scene_path, f.scene.serialize()).unwrap();
    let prefix = f.dir.path().join("out");
    let cli = Cli::parse_from([
        "carve",
        "render",
        "--scene",
        scene_path.to_str().unwrap(),
        "--out-prefix",
        prefix.to_str().unwrap(),
        "--threads",
        "3",
    ]);
    run(cli, &mut Vec::new()).unwrap();
    let (_, _, body) = call(&f.app, "POST", "/render", f.scene.serialize().into_bytes()).await;
    let parts = parse_multipart(&body).unwrap();
    for (path, (_, bytes)) in frameset_paths(&prefix).iter().zip(&parts) {
        assert_eq!(&std::fs::read(path).unwrap(), bytes, "{}", path.display());
    }
}
