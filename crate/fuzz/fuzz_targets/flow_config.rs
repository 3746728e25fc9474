#![no_main]

use libfuzzer_sys::fuzz_target;
use movsurf::landau::FlowConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = FlowConfig::from_json(text) {
            let back = serde_json::to_string(&cfg).unwrap();
            assert_eq!(FlowConfig::from_json(&back).unwrap(), cfg);
        }
    }
});
