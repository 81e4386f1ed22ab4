#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(values) = sgi_core::density::parse_values(data) {
        let _ = sgi_core::density::emit_density(&values, None);
    }
});
