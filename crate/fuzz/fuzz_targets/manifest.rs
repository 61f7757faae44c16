#![no_main]
use aerosynth::DatasetManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = DatasetManifest::from_json(data) {
        let again = DatasetManifest::from_json(&m.to_json()).expect("valid manifest re-parses");
        assert_eq!(m, again);
    }
});
