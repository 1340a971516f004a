use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, Local, Utc};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use snapmark_core::model::{default_title, CaptureRecord, ListedCapture};
use snapmark_core::platform::{
    execute_restore, plan_restore, EchoExecutor, NativeProvider, Scenario, ScriptRegistry, SimulatedProvider,
};
use snapmark_core::store::{SearchQuery, SortSpec, Store};
use snapmark_service::{router, ApiError, AppState, Clock};

fn fixture(name: &str) -> String {
    format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

struct Harness {
    app: Router,
    state: Arc<AppState>,
    store: Arc<Store>,
    echo: Arc<EchoExecutor>,
    now: Arc<Mutex<DateTime<Utc>>>,
    _dir: tempfile::TempDir,
}

fn t0() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2022-03-01T14:00:00Z").unwrap().with_timezone(&Utc)
}

fn harness_with(scenario: &str) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    let echo = Arc::new(EchoExecutor::new());
    let now = Arc::new(Mutex::new(t0()));
    let clock_now = now.clone();
    let clock: Clock = Arc::new(move || *clock_now.lock().unwrap());
    let provider = Arc::new(SimulatedProvider::new(Scenario::load(fixture(scenario)).unwrap()));
    let state = Arc::new(
        AppState::new(
            store.clone(),
            provider,
            echo.clone(),
            ScriptRegistry::load(fixture("registry.csv")).unwrap(),
        )
        .with_clock(clock),
    );
    Harness {
        app: router(state.clone()),
        state,
        store,
        echo,
        now,
        _dir: dir,
    }
}

fn harness() -> Harness {
    harness_with("three_windows.json")
}

impl Harness {
    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(v) => req
                .header("content-type", "application/json")
                .body(Body::from(serde_json::to_vec(&v).unwrap())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    async fn json(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, bytes) = self.call(method, uri, body).await;
        (status, serde_json::from_slice(&bytes).expect("JSON body"))
    }

    async fn draft(&self) -> Value {
        let (status, v) = self.json("POST", "/api/drafts", Some(json!({"mode": "full_screen"}))).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v
    }

    async fn save(&self, edits: Value) -> CaptureRecord {
        let d = self.draft().await;
        let (status, v) = self
            .json("POST", "/api/captures", Some(json!({"draft_id": d["draft_id"], "edits": edits})))
            .await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        serde_json::from_value(v).unwrap()
    }

    fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }
}

fn assert_api_error(v: &Value, status: u16, code: &str) {
    let err: ApiError = serde_json::from_value(v.clone()).expect("ApiError shape");
    assert_eq!(err.status, status, "{v}");
    assert_eq!(err.code, code, "{v}");
}

fn selected(rec: &CaptureRecord) -> Vec<&str> {
    rec.resources.iter().filter(|r| r.selected).map(|r| r.window_id.as_str()).collect()
}

#[tokio::test]
async fn draft_preselects_visible_and_defaults_title() {
    let h = harness();
    let d = h.draft().await;
    let rec: CaptureRecord = serde_json::from_value(d["record"].clone()).unwrap();
    assert_eq!(rec.resources.len(), 3);
    assert_eq!(selected(&rec), ["browser", "itinerary"]);
    assert!(!rec.resources[2].visible);
    assert_eq!(rec.title, default_title(t0(), &Local));
    assert_eq!(d["image_url"], format!("/images/{}.png", rec.capture_id));
    assert_eq!(d["draft_id"], rec.capture_id.as_str());
    assert_eq!(d["expires_at"], "2022-03-01T14:10:00.000Z");

    // The provisional image is served before saving.
    let (status, bytes) = h.call("GET", d["image_url"].as_str().unwrap(), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
}

#[tokio::test]
async fn draft_errors() {
    let h = harness();
    let (status, v) = h
        .json(
            "POST",
            "/api/drafts",
            Some(json!({"mode": "selected_area", "region": {"x": 0, "y": 0, "w": 0, "h": 10}})),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_api_error(&v, 400, "invalid_region");

    let (status, v) = h.json("POST", "/api/drafts", Some(json!({"mode": "sideways"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_api_error(&v, 400, "invalid_json");

    let (_, v) = h
        .json("POST", "/api/drafts", Some(json!({"scenario_override": {"screen": {"width_px": 0, "height_px": 1}}})))
        .await;
    assert_api_error(&v, 400, "invalid_scenario");

    let dir = tempfile::tempdir().unwrap();
    let native = Arc::new(AppState::new(
        Arc::new(Store::open(dir.path()).unwrap()),
        Arc::new(NativeProvider),
        Arc::new(EchoExecutor::new()),
        ScriptRegistry::default(),
    ));
    let app = router(native);
    let resp = app
        .oneshot(Request::post("/api/drafts").body(Body::from("{}")).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_GATEWAY);
}

#[tokio::test]
async fn scenario_override_and_selected_area() {
    let h = harness();
    let scenario: Value = serde_json::from_str(&std::fs::read_to_string(fixture("four_windows.json")).unwrap()).unwrap();
    let (status, v) = h
        .json(
            "POST",
            "/api/drafts",
            Some(json!({
                "mode": "selected_area",
                "region": {"x": 300, "y": 250, "w": 700, "h": 500},
                "scenario_override": scenario,
            })),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    let rec: CaptureRecord = serde_json::from_value(v["record"].clone()).unwrap();
    assert_eq!(selected(&rec), ["w1", "w2", "w3", "w4"]);
    assert_eq!(rec.region, snapmark_core::Rect::new(300, 250, 700, 500));
}

#[tokio::test]
async fn save_applies_edits_and_consumes_draft() {
    let h = harness();
    let rec = h.save(json!({})).await;
    assert_eq!(selected(&rec), ["browser", "itinerary"]);
    assert_eq!(h.store.get(&rec.capture_id).unwrap(), rec);

    let rec = h
        .save(json!({"deselect_ids": ["itinerary"], "add_invisible_ids": ["notes"], "title": "Trip planning"}))
        .await;
    assert_eq!(selected(&rec), ["browser", "notes"]);
    assert_eq!(rec.title, "Trip planning");

    let d = h.draft().await;
    let body = json!({"draft_id": d["draft_id"], "edits": {}});
    let (first, _) = h.call("POST", "/api/captures", Some(body.clone())).await;
    assert_eq!(first, StatusCode::CREATED);
    let (second, v) = h.json("POST", "/api/captures", Some(body)).await;
    assert_eq!(second, StatusCode::NOT_FOUND);
    assert_api_error(&v, 404, "not_found");
}

#[tokio::test]
async fn invalid_edits_keep_the_draft() {
    let h = harness();
    let d = h.draft().await;
    let (status, v) = h
        .json("POST", "/api/captures", Some(json!({"draft_id": d["draft_id"], "edits": {"deselect_ids": ["notes"]}})))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_api_error(&v, 400, "invalid_edit");
    let (status, _) = h
        .call("POST", "/api/captures", Some(json!({"draft_id": d["draft_id"]})))
        .await;
    assert_eq!(status, StatusCode::CREATED);
}

#[tokio::test]
async fn drafts_expire() {
    let h = harness();
    let d = h.draft().await;
    assert_eq!(h.state.pending_drafts(), 1);
    h.advance(Duration::minutes(10));
    let (status, _) = h.call("POST", "/api/captures", Some(json!({"draft_id": d["draft_id"]}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(h.state.pending_drafts(), 0);
    let (status, _) = h.call("GET", d["image_url"].as_str().unwrap(), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn list_search_and_detail() {
    let h = harness();
    let (status, v) = h.json("GET", "/api/captures", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, json!([]));

    let a = h.save(json!({"description": "holiday"})).await;
    h.advance(Duration::days(3));
    let b = h.save(json!({"deselect_ids": ["itinerary"], "title": "only the browser"})).await;
    h.advance(Duration::hours(1));

    let (_, v) = h.json("GET", "/api/captures", None).await;
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["capture_id"].as_str().unwrap()).collect();
    assert_eq!(ids, [b.capture_id.as_str(), a.capture_id.as_str()]);
    assert_eq!(v[0]["relative_time"], "1 hour ago");
    assert_eq!(v[1]["relative_time"], "3 days ago");

    let (_, v) = h.json("GET", "/api/captures?q=holiday", None).await;
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["capture_id"], a.capture_id.as_str());
    let (_, v) = h.json("GET", "/api/captures?q=pdf", None).await;
    assert_eq!(v.as_array().unwrap().len(), 2, "both records hold the itinerary resource");
    let (_, v) = h.json("GET", "/api/captures?q=zzz-no-such", None).await;
    assert_eq!(v, json!([]));
    let (status, v) = h.json("GET", "/api/captures?sort=sideways", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_api_error(&v, 400, "invalid_query");

    let (status, v) = h.json("GET", &format!("/api/captures/{}", b.capture_id), None).await;
    assert_eq!(status, StatusCode::OK);
    let detail: ListedCapture = serde_json::from_value(v).unwrap();
    assert_eq!(detail.record, b);
    let notes = detail.record.resource("notes").unwrap();
    assert!(!notes.visible && !notes.selected);

    let (status, v) = h.json("GET", "/api/captures/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_api_error(&v, 404, "not_found");
}

#[tokio::test]
async fn responses_match_direct_composition() {
    let h = harness();
    let a = h.save(json!({})).await;
    h.advance(Duration::minutes(5));
    h.save(json!({"description": "second pdf"})).await;
    h.store
        .update_fields(&a.capture_id, &snapmark_core::store::FieldUpdate { liked: Some(true), ..Default::default() })
        .unwrap();
    let now = *h.now.lock().unwrap();
    let render = |recs: Vec<CaptureRecord>| {
        let listed: Vec<ListedCapture> = recs.into_iter().map(|r| ListedCapture::new(r, now)).collect();
        serde_json::to_vec(&listed).unwrap()
    };

    let (_, bytes) = h.call("GET", "/api/captures", None).await;
    assert_eq!(bytes, render(h.store.list_sorted(SortSpec::default())));
    let (_, bytes) = h.call("GET", "/api/captures?q=second%20zzz", None).await;
    assert_eq!(bytes, render(h.store.search(&SearchQuery::parse("second zzz"), SortSpec::default())));
    let (_, bytes) = h.call("GET", "/api/captures?sort=recent_only", None).await;
    assert_eq!(bytes, render(h.store.list_sorted(SortSpec::RecentOnly)));

    let (_, bytes) = h.call("POST", &format!("/api/captures/{}/reopen", a.capture_id), None).await;
    let reg = ScriptRegistry::load(fixture("registry.csv")).unwrap();
    let plan = plan_restore(&a, None, &reg).unwrap();
    let direct = snapmark_core::platform::RestorePlan {
        actions: execute_restore(plan.actions, &EchoExecutor::new()),
        skipped: plan.skipped,
    };
    assert_eq!(bytes, serde_json::to_vec(&direct).unwrap());
}

#[tokio::test]
async fn patch_like_is_idempotent() {
    let h = harness();
    let a = h.save(json!({})).await;
    h.advance(Duration::minutes(1));
    let b = h.save(json!({})).await;
    let uri = format!("/api/captures/{}", a.capture_id);
    let (s1, first) = h.call("PATCH", &uri, Some(json!({"liked": true}))).await;
    let (s2, second) = h.call("PATCH", &uri, Some(json!({"liked": true}))).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(first, second);
    let (_, v) = h.json("GET", "/api/captures", None).await;
    assert_eq!(v[0]["capture_id"], a.capture_id.as_str());
    assert_eq!(v[1]["capture_id"], b.capture_id.as_str());

    let (_, v) = h.json("PATCH", &uri, None).await;
    assert_eq!(v["liked"], true);
    let (status, v) = h.json("PATCH", &uri, Some(json!({"title": ""}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_api_error(&v, 400, "invalid_edit");
    let (status, _) = h.call("PATCH", "/api/captures/missing", Some(json!({"liked": true}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = h.call("PATCH", &uri, Some(json!({"created_at": "2020-01-01T00:00:00Z"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn reopen_variants() {
    let h = harness();
    let rec = h.save(json!({"add_invisible_ids": ["notes"]})).await;
    let uri = format!("/api/captures/{}/reopen", rec.capture_id);

    let (status, v) = h.json("POST", &uri, None).await;
    assert_eq!(status, StatusCode::OK);
    let cmds: Vec<&str> = v["actions"].as_array().unwrap().iter().map(|a| a["command"].as_str().unwrap()).collect();
    assert_eq!(
        cmds,
        [
            "open-url https://flights.example.com/search?to=LIS",
            "open /Users/alex/Trips/itinerary.pdf",
            "open -a /System/Applications/Notes.app"
        ]
    );
    assert!(v["actions"].as_array().unwrap().iter().all(|a| a["executed"] == true));
    assert_eq!(h.echo.lines().len(), 3);

    let (_, v) = h.json("POST", &uri, Some(json!({"resource_ids": ["itinerary"]}))).await;
    assert_eq!(v["actions"].as_array().unwrap().len(), 1);
    assert_eq!(v["actions"][0]["window_id"], "itinerary");

    let (status, v) = h.json("POST", &uri, Some(json!({"resource_ids": ["ghost"]}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_api_error(&v, 400, "invalid_input");
    let (status, _) = h.call("POST", "/api/captures/missing/reopen", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn reopen_without_locators_skips_all() {
    let h = harness();
    let scenario = json!({
        "screen": {"width_px": 100, "height_px": 100},
        "windows": [
            {"window_id": "a", "app_name": "Finder", "bounds": {"x": 0, "y": 0, "w": 50, "h": 100}, "locator": null},
            {"window_id": "b", "app_name": "Dock", "bounds": {"x": 50, "y": 0, "w": 50, "h": 100}}
        ]
    });
    let (_, d) = h.json("POST", "/api/drafts", Some(json!({"scenario_override": scenario}))).await;
    let (_, rec) = h.json("POST", "/api/captures", Some(json!({"draft_id": d["draft_id"]}))).await;
    let (_, v) = h
        .json("POST", &format!("/api/captures/{}/reopen", rec["capture_id"].as_str().unwrap()), None)
        .await;
    assert_eq!(v["actions"], json!([]));
    let skipped: BTreeSet<&str> = v["skipped"].as_array().unwrap().iter().map(|s| s["window_id"].as_str().unwrap()).collect();
    assert_eq!(skipped, ["a", "b"].into());
}

#[tokio::test]
async fn delete_and_images() {
    let h = harness();
    let rec = h.save(json!({})).await;
    let img = format!("/images/{}.png", rec.capture_id);
    let resp = h
        .app
        .clone()
        .oneshot(Request::get(&img).body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/png");

    let (status, v) = h.json("DELETE", &format!("/api/captures/{}", rec.capture_id), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["deleted"], rec.capture_id.as_str());
    let (status, _) = h.call("GET", &format!("/api/captures/{}", rec.capture_id), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = h.call("GET", &img, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = h.call("DELETE", "/api/captures/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = h.call("GET", "/images/..%2Fsecret.png", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn index_and_unknown_routes() {
    let h = harness();
    let (status, body) = h.call("GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api/captures"));
    let (status, v) = h.json("GET", "/api/nothing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_api_error(&v, 404, "not_found");
    let (status, _) = h.call("GET", "/assets/app.js", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn serves_ui_dir_assets() {
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>ui</html>").unwrap();
    std::fs::create_dir(ui.path().join("assets")).unwrap();
    std::fs::write(ui.path().join("assets/app.js"), "console.log(1)").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(
        Arc::new(Store::open(dir.path()).unwrap()),
        Arc::new(NativeProvider),
        Arc::new(EchoExecutor::new()),
        ScriptRegistry::default(),
    )
    .with_ui_dir(ui.path());
    let app = router(Arc::new(state));
    let resp = app.clone().oneshot(Request::get("/").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.into_body().collect().await.unwrap().to_bytes(), "<html>ui</html>");
    let resp = app.clone().oneshot(Request::get("/assets/app.js").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.headers()["content-type"], "text/javascript");
    let resp = app.oneshot(Request::get("/assets/../index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests() {
    let h = Arc::new(harness());
    let mut tasks = Vec::new();
    for i in 0..16 {
        let h = h.clone();
        tasks.push(tokio::spawn(async move {
            let rec = h.save(json!({"title": format!("capture {i}")})).await;
            let (s, _) = h.call("PATCH", &format!("/api/captures/{}", rec.capture_id), Some(json!({"liked": i % 2 == 0}))).await;
            assert_eq!(s, StatusCode::OK);
            let (s, _) = h.call("GET", "/api/captures", None).await;
            assert_eq!(s, StatusCode::OK);
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (_, v) = h.json("GET", "/api/captures", None).await;
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 16);
    let liked: Vec<bool> = list.iter().map(|r| r["liked"].as_bool().unwrap()).collect();
    assert!(liked.windows(2).all(|w| w[0] >= w[1]), "liked partition first");
}

#[tokio::test]
async fn real_socket_roundtrip() {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let h = harness();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let server = tokio::spawn(snapmark_service::serve_listener(h.state.clone(), listener));
    let mut sock = tokio::net::TcpStream::connect(addr).await.unwrap();
    sock.write_all(b"GET /api/captures HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut buf = String::new();
    sock.read_to_string(&mut buf).await.unwrap();
    assert!(buf.starts_with("HTTP/1.1 200"), "{buf}");
    assert!(buf.contains("application/json"));
    assert!(buf.ends_with("[]"));
    server.abort();
}
