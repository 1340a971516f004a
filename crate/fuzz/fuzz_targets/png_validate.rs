#![no_main]

use libfuzzer_sys::fuzz_target;
use snapmark_core::store::validate_png;

fuzz_target!(|data: &[u8]| {
    let _ = validate_png(data);
});
