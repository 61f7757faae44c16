#![no_main]
use aerosynth::blueprint::{Blueprint, BlueprintMeta, ColorKey};
use libfuzzer_sys::fuzz_target;

/// A sidecar consistent with the mask's size at a 2.5 cm pitch.
fn sidecar(w: u32, h: u32) -> BlueprintMeta {
    BlueprintMeta {
        id: "fuzz".into(),
        vehicle_label: "car".into(),
        physical_length_m: w.max(h) as f64 * 0.025,
        physical_width_m: w.min(h) as f64 * 0.025,
        color_key: ColorKey::default(),
    }
}

fuzz_target!(|data: &[u8]| {
    // the decoder enforces its own allocation limit; keep iterations fast
    let Ok(img) = aerosynth::io::decode_rgb(data) else { return };
    if img.width() as u64 * img.height() as u64 > 1 << 20 {
        return;
    }
    let meta = sidecar(img.width(), img.height());
    if let Ok(bp) = Blueprint::from_rgb(&img, &meta, 10) {
        assert!(bp.body_fraction() > 0.0);
        assert_eq!(bp.to_rgb(&meta.color_key).dimensions(), img.dimensions());
    }
});
