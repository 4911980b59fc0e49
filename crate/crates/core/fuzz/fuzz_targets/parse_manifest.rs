#![no_main]

use libfuzzer_sys::fuzz_target;
use repairforge::harness::parse_manifest;

fuzz_target!(|data: &str| {
    let _ = parse_manifest(data);
});
