#![no_main]
use aerosynth::GeneratorConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = GeneratorConfig::from_json(data) {
        let again = GeneratorConfig::from_json(&serde_json::to_vec(&cfg).unwrap()).expect("valid config re-parses");
        assert_eq!(cfg, again);
    }
});
