#![no_main]

use libfuzzer_sys::fuzz_target;
use snapmark_core::model::{apply_user_edits, CaptureEdits, CaptureRecord};

const BASE: &str = include_str!("../corpus/record_json/sample.json");

fuzz_target!(|data: &[u8]| {
    let Ok(edits) = serde_json::from_slice::<CaptureEdits>(data) else { return };
    let base = CaptureRecord::from_json_slice(BASE.as_bytes()).unwrap();
    if let Ok(out) = apply_user_edits(&base, &edits) {
        out.validate().expect("edited record stays valid");
        for r in &out.resources {
            let want = if r.visible { !edits.deselect_ids.contains(&r.window_id) } else { edits.add_invisible_ids.contains(&r.window_id) };
            assert_eq!(r.selected, want);
        }
    }
});
