#![no_main]

use libfuzzer_sys::fuzz_target;
use movsurf::io::{decode_snapshot, encode_snapshot};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((header, values)) = decode_snapshot(text) {
            let again = encode_snapshot(&header, &values).unwrap();
            assert_eq!(decode_snapshot(&again).unwrap(), (header, values));
        }
    }
});
