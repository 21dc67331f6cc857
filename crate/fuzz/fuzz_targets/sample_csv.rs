#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowscatter::fitgof::parse_sample_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = parse_sample_csv(text) {
            assert!(!s.is_empty());
            assert!(s.effective_len() > 0.0);
        }
    }
});
