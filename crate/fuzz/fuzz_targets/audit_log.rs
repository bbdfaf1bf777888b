#![no_main]

use elk_cli::auditlog::{read_audit_log, AuditLog};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_audit_log(data) else {
        return;
    };
    let mut buf = Vec::new();
    let mut log = AuditLog::new(&mut buf);
    for r in &records {
        log.append(r).expect("record serializes");
    }
    drop(log);
    let back = read_audit_log(buf.as_slice()).expect("written log parses");
    assert_eq!(back.len(), records.len());
});
