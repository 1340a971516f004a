#![no_main]

use libfuzzer_sys::fuzz_target;
use snapmark_core::model::ResourceKind;
use snapmark_core::platform::ScriptRegistry;

fuzz_target!(|data: &[u8]| {
    let Ok(reg) = ScriptRegistry::from_reader(data) else { return };
    for kind in [ResourceKind::WebPage, ResourceKind::File, ResourceKind::Application] {
        if let Some(entry) = reg.find("Safari", kind) {
            // Every accepted template holds exactly one placeholder.
            let cmd = entry.render("VALUE");
            assert!(cmd.contains("VALUE"));
        }
    }
});
