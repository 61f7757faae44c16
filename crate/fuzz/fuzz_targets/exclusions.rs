#![no_main]
use aerosynth::ingest::Exclusions;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ex) = Exclusions::from_json(data) {
        let again = Exclusions::from_json(&serde_json::to_vec(&ex).unwrap()).expect("valid exclusions re-parse");
        assert_eq!(ex, again);
        for id in ex.0.iter().filter_map(|e| e.image.as_deref()) {
            assert!(!ex.for_image(id).is_empty());
        }
    }
});
