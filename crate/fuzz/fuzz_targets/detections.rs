#![no_main]
use aerosynth::eval::{detections_from_json, detections_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dets) = detections_from_json(data) {
        let again = detections_from_json(&detections_to_json(&dets)).expect("written detections re-parse");
        assert_eq!(dets, again);
    }
});
