#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = dewet::cli::parse_config(text) {
            assert!(config.theta > 0.0 && config.theta < std::f64::consts::PI);
            assert!(config.eta > 0.0 && config.stride >= 1);
        }
    }
});
