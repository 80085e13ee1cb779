#![no_main]

use deltaclose_core::codec::{decode_field, encode_field};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(k) = decode_field(&v) {
            let again = decode_field(&encode_field(&k)).expect("encoded field decodes");
            assert!(again.same_as(&k));
        }
    }
});
