#![no_main]
use libfuzzer_sys::fuzz_target;
use sgi_core::index::{compute_sgi, effective_fertility};
use sgi_core::model::MarriageTiming;

fuzz_target!(|data: &[u8]| {
    let Ok((records, _)) = sgi_core::ingest::parse_regions(data, "fuzz.csv") else {
        return;
    };
    // accepted rows must carry values the index can be evaluated on
    for r in records {
        if let (Some(m), Some(f)) = (r.male_age, r.female_age) {
            if let Ok(t) = MarriageTiming::new(m, f, r.alpha.unwrap_or(2.0)) {
                let _ = compute_sgi(r.sex_ratio, effective_fertility(&r.fertility), &t);
            }
        }
    }
});
