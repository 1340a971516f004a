#![no_main]

use libfuzzer_sys::fuzz_target;
use snapmark_core::platform::Scenario;

// Accepted scenarios must survive a serialize/parse round trip.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Scenario::from_json_str(text) {
        let again = Scenario::from_json_str(&s.to_json_string()).expect("re-parse");
        assert_eq!(again, s);
    }
});
