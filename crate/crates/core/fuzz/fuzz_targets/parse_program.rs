#![no_main]

use libfuzzer_sys::fuzz_target;
use repairforge::lang::{parse, print};

fuzz_target!(|data: &str| {
    // anything that parses must survive a print/parse round trip
    if let Ok(program) = parse(data) {
        let text = print(&program);
        let again = parse(&text).expect("printed program reparses");
        assert_eq!(again, program);
        assert_eq!(print(&again), text);
    }
});
