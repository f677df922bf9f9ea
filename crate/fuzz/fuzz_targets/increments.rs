#![no_main]

use chirostab::datasets::{parse_increments, parse_molecule, DEFAULT_GAS, DEFAULT_MOLECULE};
use chirostab::dispersion::molecule_tensors;
use chirostab::rotor::RotorSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inc) = parse_increments(text) {
        let spec = RotorSpec::from_molecule(&parse_molecule(DEFAULT_MOLECULE).unwrap()).unwrap();
        let gas = chirostab::datasets::parse_gas(DEFAULT_GAS).unwrap();
        let _ = molecule_tensors(&inc, &spec, &gas);
    }
});
