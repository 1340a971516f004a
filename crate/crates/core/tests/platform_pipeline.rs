use std::collections::BTreeSet;

use chrono::Utc;
use proptest::prelude::*;
use snapmark_core::model::{apply_user_edits, CaptureEdits, CaptureMode};
use snapmark_core::platform::{
    capture_draft, enumerate_windows, execute_restore, grab_screenshot, plan_restore, render_scenario,
    EchoExecutor, PlatformError, Rgb, Scenario, ScenarioWindow, ScriptRegistry, SimulatedProvider,
};
use snapmark_core::visibility::{identify_visible_windows, Rect, ScreenDims, VisibilityConfig};
use snapmark_core::WindowSnapshot;

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn decode(png_bytes: &[u8]) -> (u32, u32, Vec<u8>) {
    let decoder = png::Decoder::new(std::io::Cursor::new(png_bytes));
    let mut reader = decoder.read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    assert_eq!(info.color_type, png::ColorType::Rgb);
    buf.truncate(info.buffer_size());
    (info.width, info.height, buf)
}

fn pixel(img: &(u32, u32, Vec<u8>), x: u32, y: u32) -> Rgb {
    let i = ((y * img.0 + x) * 3) as usize;
    Rgb(img.2[i], img.2[i + 1], img.2[i + 2])
}

#[test]
fn enumerate_passthrough() {
    let p = SimulatedProvider::new(Scenario::load(fixture("three_windows.json")).unwrap());
    let (screen, wins) = enumerate_windows(&p).unwrap();
    assert_eq!(screen, ScreenDims::new(800, 600).unwrap());
    let zs: Vec<u32> = wins.iter().map(|w| w.z_index).collect();
    assert_eq!(zs, [0, 1, 2]);
}

#[test]
fn fixture_four_windows_front_to_back() {
    let s = Scenario::load(fixture("four_windows.json")).unwrap();
    let ids: Vec<&str> = s.windows.iter().map(|w| w.snapshot.window_id.as_str()).collect();
    assert_eq!(ids, ["w1", "w2", "w3", "w4"]);
}

#[test]
fn screenshot_dimensions() {
    let p = SimulatedProvider::new(Scenario::from_json_str(
        r#"{"screen":{"width_px":100,"height_px":100},"windows":[]}"#,
    ).unwrap());
    let full = grab_screenshot(&p, CaptureMode::FullScreen, None).unwrap();
    assert_eq!(full.region, Rect::new(0, 0, 100, 100));
    assert_eq!(decode(&full.png).0, 100);
    let part = grab_screenshot(&p, CaptureMode::SelectedArea, Some(Rect::new(10, 10, 50, 40))).unwrap();
    let img = decode(&part.png);
    assert_eq!((img.0, img.1), (50, 40));
    // Clipped to screen.
    let clipped = grab_screenshot(&p, CaptureMode::SelectedArea, Some(Rect::new(80, 90, 50, 40))).unwrap();
    assert_eq!(clipped.region, Rect::new(80, 90, 20, 10));
    for degenerate in [Rect::new(10, 10, 0, 40), Rect::new(200, 200, 10, 10)] {
        assert!(matches!(
            grab_screenshot(&p, CaptureMode::SelectedArea, Some(degenerate)),
            Err(PlatformError::InvalidRegion(_))
        ));
    }
    assert!(matches!(
        grab_screenshot(&p, CaptureMode::SelectedArea, None),
        Err(PlatformError::InvalidRegion(_))
    ));
}

#[test]
fn back_window_color_where_only_it_is() {
    let s = Scenario::load(fixture("four_windows.json")).unwrap();
    let png = render_scenario(&s, s.screen.bounds()).unwrap();
    let img = decode(&png);
    // (1100, 750) lies only inside w4; (150, 400) only inside w1 below its label.
    assert_eq!(pixel(&img, 1100, 750), s.windows[3].color.unwrap());
    assert_eq!(pixel(&img, 150, 400), s.windows[0].color.unwrap());
    // (300, 300) is covered by w1, w2 and the desktop: w1 wins.
    assert_eq!(pixel(&img, 300, 300), s.windows[0].color.unwrap());
    assert_eq!(pixel(&img, 5, 5), snapmark_core::platform::DESKTOP_COLOR);
}

#[test]
fn draft_pipeline_on_three_windows() {
    let p = SimulatedProvider::new(Scenario::load(fixture("three_windows.json")).unwrap());
    let d = capture_draft(&p, CaptureMode::FullScreen, None, VisibilityConfig::default(), Utc::now()).unwrap();
    let flags: Vec<(bool, bool)> = d.record.resources.iter().map(|r| (r.visible, r.selected)).collect();
    assert_eq!(flags, [(true, true), (true, true), (false, false)]);
    assert_eq!(d.record.region, Rect::new(0, 0, 800, 600));

    let edits = CaptureEdits {
        deselect_ids: ["itinerary".to_string()].into(),
        add_invisible_ids: ["notes".to_string()].into(),
        ..Default::default()
    };
    let rec = apply_user_edits(&d.record, &edits).unwrap();
    let reg = ScriptRegistry::load(fixture("registry.csv")).unwrap();
    let plan = plan_restore(&rec, None, &reg).unwrap();
    let echo = EchoExecutor::new();
    let done = execute_restore(plan.actions, &echo);
    assert!(done.iter().all(|a| a.executed));
    assert_eq!(
        echo.lines(),
        [
            "open-url https://flights.example.com/search?to=LIS",
            "open -a /System/Applications/Notes.app"
        ]
    );
    let explicit: BTreeSet<String> = ["itinerary".to_string()].into();
    let plan = plan_restore(&rec, Some(&explicit), &reg).unwrap();
    assert_eq!(plan.actions[0].command, "open /Users/alex/Trips/itinerary.pdf");
}

fn arb_scenario() -> impl Strategy<Value = (Scenario, Rect)> {
    let win = (-30i32..150, -30i32..150, 0u32..120, 0u32..120, "[A-Za-z ]{0,12}");
    (
        (1u32..160, 1u32..160),
        prop::collection::vec(win, 0..7),
        (-20i32..150, -20i32..150, 1u32..160, 1u32..160),
    )
        .prop_map(|((sw, sh), wins, (rx, ry, rw, rh))| {
            let windows = wins
                .into_iter()
                .enumerate()
                .map(|(k, (x, y, w, h, app))| ScenarioWindow {
                    snapshot: WindowSnapshot {
                        window_id: format!("w{k}"),
                        app_name: app,
                        window_title: String::new(),
                        bounds: Rect::new(x, y, w, h),
                        z_index: k as u32,
                        locator: None,
                    },
                    color: Some(Rgb(20 + 30 * k as u8, 200 - 25 * k as u8, 90)),
                })
                .collect();
            (
                Scenario { screen: ScreenDims::new(sw, sh).unwrap(), windows },
                Rect::new(rx, ry, rw, rh),
            )
        })
}

proptest! {
    // Visible at threshold 0 and downsample 1 => owns a pixel of its own color.
    #[test]
    fn rendering_agrees_with_visibility((scenario, region) in arb_scenario()) {
        let p = SimulatedProvider::new(scenario.clone());
        let shot = match grab_screenshot(&p, CaptureMode::SelectedArea, Some(region)) {
            Ok(s) => s,
            Err(PlatformError::InvalidRegion(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let img = decode(&shot.png);
        let snaps = scenario.snapshots();
        let rep = identify_visible_windows(shot.region, &snaps, scenario.screen, VisibilityConfig::new(1, 0).unwrap());
        for k in rep.visible_ids {
            let color = scenario.windows[k].color.unwrap();
            let found = (0..img.1).any(|y| (0..img.0).any(|x| pixel(&img, x, y) == color));
            prop_assert!(found, "window {} has no pixel of {}", k, color);
        }
    }
}
