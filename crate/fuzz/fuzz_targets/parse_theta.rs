#![no_main]

use expg::input::parse_theta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(theta) = parse_theta(text) {
        assert!(!theta.is_empty() && theta.iter().all(|v| v.is_finite()));
    }
});
