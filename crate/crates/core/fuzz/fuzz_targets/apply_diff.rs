#![no_main]

use libfuzzer_sys::fuzz_target;
use repairforge::lang::apply_diff;

fuzz_target!(|data: &str| {
    // base text, a NUL byte, then the diff
    let (base, diff) = data.split_once('\0').unwrap_or(("", data));
    let _ = apply_diff(base, diff);
});
