#![no_main]

use libfuzzer_sys::fuzz_target;
use snapmark_core::platform::parse_region;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = parse_region(text) {
        assert_eq!(parse_region(&r.to_string()).unwrap(), r);
    }
});
