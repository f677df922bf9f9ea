#![no_main]

use chirostab::datasets::parse_molecule;
use chirostab::rotor::RotorSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_molecule(text) {
        // accepted geometries must give a valid rotor or a clean error
        let _ = RotorSpec::from_molecule(&m);
    }
});
