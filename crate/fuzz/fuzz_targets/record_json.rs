#![no_main]

use libfuzzer_sys::fuzz_target;
use snapmark_core::model::CaptureRecord;
use snapmark_core::store::SearchQuery;

fuzz_target!(|data: &[u8]| {
    let Ok(rec) = CaptureRecord::from_json_slice(data) else { return };
    let bytes = serde_json::to_vec(&rec).unwrap();
    assert_eq!(CaptureRecord::from_json_slice(&bytes).unwrap(), rec);
    let _ = SearchQuery::parse(&rec.title).matches(&rec);
});
