#![no_main]

use libfuzzer_sys::fuzz_target;
use repairforge::harness::parse_records;

fuzz_target!(|data: &str| {
    if let Ok(records) = parse_records(data) {
        for r in &records {
            let _ = r.fingerprint();
        }
    }
});
