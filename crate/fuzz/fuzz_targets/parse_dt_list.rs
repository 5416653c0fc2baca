#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(values) = minefair::report::parse_dt_list(text) {
            assert!(!values.is_empty());
            assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }
});
