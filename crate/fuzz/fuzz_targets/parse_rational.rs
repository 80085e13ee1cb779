#![no_main]

use deltaclose_core::codec::{parse_rational, rational_to_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(q) = parse_rational(s) {
            assert_eq!(parse_rational(&rational_to_string(&q)).unwrap(), q);
        }
    }
});
