//! Random substreams.
//!
//! Every simulation draws from its own ChaCha8 stream whose 64-bit seed is
//! `mix(master_seed, stream)`:
//!
//! ```text
//! mix(m, s) = splitmix64(m ^ splitmix64(s + 0x9E3779B97F4A7C15))
//! splitmix64(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                z ^ (z >> 31)
//! ```
//!
//! Stream ids `0..n` belong to simulation indices; [`LAYOUT_STREAM`] is
//! reserved for the shared forest layout and seed placement. Because a
//! stream depends only on `(master_seed, stream)`, results do not depend on
//! how simulations are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream id reserved for the initial condition (forest layout + seeds).
pub const LAYOUT_STREAM: u64 = u64::MAX;

/// Stream id reserved for bootstrap resampling.
pub const BOOTSTRAP_STREAM: u64 = u64::MAX - 1;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(master_seed: u64, stream: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(stream.wrapping_add(GOLDEN_GAMMA)))
}

pub fn substream(master_seed: u64, stream: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(mix(master_seed, stream))
}
