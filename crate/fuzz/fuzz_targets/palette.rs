#![no_main]
use aerosynth::instance::ColorPalette;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = ColorPalette::from_json(data) {
        assert!(p.validate().is_ok());
    }
});
