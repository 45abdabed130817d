// SPDX-License-Identifier: Apache-2.0

//! Deterministic per-pixel, per-trial random streams.
//!
//! A run seed selects the ChaCha key; the (pixel, trial) pair is mixed into
//! the 64-bit stream id. Streams never overlap, so results do not depend on
//! how pixels are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a (pixel, trial) pair. Injective for pixel, trial < 2³².
pub fn stream_id(pixel: u64, trial: u64) -> u64 {
    if pixel < 1 << 32 && trial < 1 << 32 {
        (trial << 32) | pixel
    } else {
        splitmix64(pixel ^ splitmix64(trial))
    }
}

pub fn stream_rng(seed: u64, pixel: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(pixel, trial));
    rng
}
