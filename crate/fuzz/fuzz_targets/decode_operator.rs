#![no_main]

use deltaclose_core::codec::{decode_operator, encode_operator};
use deltaclose_core::scalar::NumberField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let k = NumberField::sqrt(2).unwrap();
    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(op) = decode_operator(&k, &v) {
            assert_eq!(decode_operator(&k, &encode_operator(&op)).unwrap(), op);
        }
    }
});
