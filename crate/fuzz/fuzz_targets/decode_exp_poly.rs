#![no_main]

use deltaclose_core::codec::{decode_exp_poly, encode_exp_poly};
use deltaclose_core::scalar::NumberField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let k = NumberField::sqrt(2).unwrap();
    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(f) = decode_exp_poly(&k, &v) {
            let encoded = encode_exp_poly(&f);
            assert_eq!(decode_exp_poly(&k, &encoded).unwrap(), f);
        }
    }
});
