#![no_main]

use libfuzzer_sys::fuzz_target;
use sekit_core::{parse_certificate, write_certificate};

fuzz_target!(|data: &[u8]| {
    let Ok(cert) = parse_certificate(data) else {
        return;
    };
    let canonical = write_certificate(&cert);
    let again = parse_certificate(canonical.as_bytes()).expect("canonical form parses");
    assert_eq!(again, cert);
    assert_eq!(write_certificate(&again), canonical);
    // Verification must not panic on any well-formed certificate.
    let _ = cert.verify();
});
