#![no_main]
use aerosynth::ingest::ClassColorMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = ClassColorMap::from_json(data) {
        let again = ClassColorMap::from_json(&serde_json::to_vec(&map).unwrap()).expect("valid map re-parses");
        assert_eq!(map, again);
    }
});
