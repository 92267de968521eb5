#![no_main]

use expg::input::parse_dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_dataset(text) {
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
