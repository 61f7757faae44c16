#![no_main]
use aerosynth::compose::PoolIndex;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(idx) = PoolIndex::from_json(data) {
        let again = PoolIndex::from_json(&serde_json::to_vec(&idx).unwrap()).expect("valid index re-parses");
        assert_eq!(idx, again);
    }
});
