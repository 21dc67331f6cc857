#![no_main]

use libfuzzer_sys::fuzz_target;
use shadowscatter::SampleBatch;

fuzz_target!(|data: &[u8]| {
    if let Ok(batch) = SampleBatch::from_json(data) {
        // Whatever decodes must encode and decode to the same batch.
        let again = SampleBatch::from_json(batch.to_json().unwrap().as_bytes()).unwrap();
        assert_eq!(again.values.len(), batch.values.len());
    }
});
