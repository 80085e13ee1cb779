#![no_main]

use deltaclose_core::codec::{decode_scalar, encode_scalar};
use deltaclose_core::scalar::NumberField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let k = NumberField::sqrt(2).unwrap();
    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(x) = decode_scalar(&k, &v) {
            assert_eq!(decode_scalar(&k, &encode_scalar(&x)).unwrap(), x);
        }
    }
});
