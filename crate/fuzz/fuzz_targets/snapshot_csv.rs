#![no_main]

use elk_cli::snapshot::read_snapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = read_snapshot(data) {
        let _ = s.to_state();
    }
});
