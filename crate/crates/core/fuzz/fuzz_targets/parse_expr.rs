#![no_main]

use libfuzzer_sys::fuzz_target;
use repairforge::lang::{parse_expr, print_expr};

fuzz_target!(|data: &str| {
    if let Ok(e) = parse_expr(data) {
        assert_eq!(parse_expr(&print_expr(&e)).expect("reparses"), e);
    }
});
