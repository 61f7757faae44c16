//! Counter-based random streams.
//!
//! A stream is identified by `(seed, index, slot, purpose)`. The seed keys a
//! ChaCha8 generator and the remaining fields select a 64-bit stream id, so
//! any stream can be opened without replaying the others. Images can then be
//! produced in any order or in parallel with identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Separate purposes keep toggling one pipeline
/// stage from shifting the draws of another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Selection = 0,
    Background = 1,
    Instance = 2,
    Cut = 3,
    Deform = 4,
    Placement = 5,
    Pool = 6,
    Split = 7,
}

const SLOT_BITS: u32 = 16;
const PURPOSE_BITS: u32 = 4;

/// Stream id for an image index, a per-image slot (vehicle number) and a purpose.
pub fn stream_id(index: u64, slot: u32, purpose: Purpose) -> u64 {
    debug_assert!(slot < (1 << SLOT_BITS));
    (index << (SLOT_BITS + PURPOSE_BITS)) | ((slot as u64) << PURPOSE_BITS) | purpose as u64
}

pub fn stream(seed: u64, index: u64, slot: u32, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(index, slot, purpose));
    rng
}
