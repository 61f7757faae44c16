#![no_main]
use aerosynth::blueprint::BlueprintMeta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(meta) = BlueprintMeta::from_json(data) {
        let again = BlueprintMeta::from_json(&serde_json::to_vec(&meta).unwrap()).expect("valid sidecar re-parses");
        assert_eq!(meta, again);
    }
});
