#![no_main]

use chirostab::smatrix_io::{decode_csv, encode_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(b) = decode_csv(text) {
        let again = decode_csv(&encode_csv(&b)).expect("re-encoded block decodes");
        assert_eq!(again.channels, b.channels);
    }
});
