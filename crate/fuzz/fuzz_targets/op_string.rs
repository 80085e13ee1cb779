#![no_main]

use deltaclose_core::codec::{op_string_operator, parse_op_string};
use deltaclose_core::scalar::NumberField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(specs) = parse_op_string(s) {
            let k = NumberField::rationals();
            let _ = op_string_operator(&k, &specs);
        }
    }
});
