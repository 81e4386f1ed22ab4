#![no_main]
use libfuzzer_sys::fuzz_target;
use sgi_core::smam::compute_smam;

fuzz_target!(|data: &[u8]| {
    if let Ok(tables) = sgi_core::ingest::parse_marital(data, "fuzz.csv", 50.0) {
        for t in tables.values() {
            let _ = compute_smam(&t.male);
            let _ = compute_smam(&t.female);
        }
    }
});
