#![no_main]

use elk_cli::scenario::{parse_scenario, to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(s) = parse_scenario(text) else {
        return;
    };
    let again = parse_scenario(&to_json(&s)).expect("serialized scenario parses");
    assert_eq!(s, again);
    // keep allocations bounded; validation itself must never panic
    if s.domain.cells <= 4096 {
        let _ = s.prepare();
    }
});
