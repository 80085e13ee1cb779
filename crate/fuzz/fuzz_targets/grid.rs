#![no_main]

use deltaclose_core::codec::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(g) = parse_grid(s) {
            if !g.is_empty() {
                let last = g.len() - 1;
                assert_eq!(g.flatten(&g.unflatten(last)), last);
            }
        }
    }
});
