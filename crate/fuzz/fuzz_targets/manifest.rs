#![no_main]

use deltaclose_core::codec::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(m) = Manifest::parse(&v) {
            for id in m.ids() {
                m.get(id).expect("listed ids resolve");
            }
        }
    }
});
