#![no_main]

use libfuzzer_sys::fuzz_target;
use repairforge::report::{aggregate_fixability, parse_fixability_tsv, parse_labels_tsv};

fuzz_target!(|data: &str| {
    if let Ok(entries) = parse_fixability_tsv(data) {
        let _ = aggregate_fixability(&entries);
    }
    let _ = parse_labels_tsv(data);
});
