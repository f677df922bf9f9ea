#![no_main]

use chirostab::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = RunConfig::parse(text, None) {
        // the canonical form re-parses to the same configuration
        let again = RunConfig::parse(&c.canonical(), None).expect("canonical config parses");
        assert_eq!(again, c);
        let _ = c.scatter_settings();
    }
});
