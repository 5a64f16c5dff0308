#![no_main]

use libfuzzer_sys::fuzz_target;
use sekit_core::{parse_matrix, write_matrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_matrix(text) {
        // Whatever parses must survive a trip through the canonical form.
        let canonical = write_matrix(&m);
        assert_eq!(parse_matrix(&canonical).unwrap(), m);
    }
});
