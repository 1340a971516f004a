#![no_main]

use libfuzzer_sys::fuzz_target;
use snapmark_core::model::CaptureRecord;
use snapmark_core::store::SearchQuery;

const BASE: &str = include_str!("../corpus/record_json/sample.json");

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let rec = CaptureRecord::from_json_slice(BASE.as_bytes()).unwrap();
    let q = SearchQuery::parse(text);
    let hit = q.matches(&rec);
    if q.is_empty() {
        assert!(hit);
    }
});
