#![no_main]
use aerosynth::ingest::{extract_class_regions, regions_to_annotations};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(label) = aerosynth::io::decode_rgb(data) else { return };
    if label.width() as u64 * label.height() as u64 > 1 << 18 {
        return;
    }
    let regions = extract_class_regions(&label, [255, 255, 0], 10);
    let total: usize = regions.iter().map(|r| r.area()).sum();
    assert!(total as u64 <= label.width() as u64 * label.height() as u64);
    for a in regions_to_annotations(&regions, 0, 1, &[]) {
        assert!(a.obb.is_valid(), "{a:?}");
        assert!(a.obb.area() > 0.0);
    }
});
