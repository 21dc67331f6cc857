#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowscatter::trace::{parse_trace_csv, TraceMeta};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Once on its own header and once with a sidecar that may conflict with it.
    let _ = parse_trace_csv(text, None);
    let sidecar = TraceMeta {
        unit: Some("dB".into()),
        sample_spacing_m: Some(0.025),
        wavelength_m: Some(0.15),
    };
    if let Ok(t) = parse_trace_csv(text, Some(&sidecar)) {
        assert!(t.linear_values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }
});
