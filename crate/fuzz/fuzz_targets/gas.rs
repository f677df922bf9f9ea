#![no_main]

use chirostab::datasets::parse_gas;
use chirostab::dispersion::gas_polarizability;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_gas(text) {
        let _ = gas_polarizability(&g.lorentzians, 0.5);
    }
});
