#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = minefair::parse_scenario(text) {
            assert!(s.n_miners() >= 2);
            assert!((s.alpha().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let _ = s.fingerprint();
        }
    }
});
