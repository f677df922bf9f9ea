#![no_main]

use chirostab::smatrix_io::{decode_binary, encode_binary};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(b) = decode_binary(data) {
        let again = decode_binary(&encode_binary(&b)).expect("re-encoded block decodes");
        assert_eq!(again, b);
    }
});
