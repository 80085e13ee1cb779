#![no_main]

use deltaclose_core::codec::decode_function;
use deltaclose_core::scalar::NumberField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let k = NumberField::sqrt(2).unwrap();
    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(f) = decode_function(&k, &v) {
            let x = vec![0.375; f.dim()];
            let _ = f.eval(&x);
        }
    }
});
