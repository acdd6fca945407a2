//! Seeded random streams.
//!
//! Every stochastic operation in the crate draws from a [`ChaCha8Rng`] created
//! with `ChaCha8Rng::seed_from_u64`. Independent sub-streams are obtained by
//! hashing a master seed together with a path of integers (layer index,
//! repetition index, ...) through the SplitMix64 finalizer:
//!
//! ```text
//! h0 = mix(master ^ 0x4B4E_4F4F_505F_5345)
//! h_{i+1} = mix(h_i ^ mix(path[i] + 0x9E37_79B9_7F4A_7C15))
//! ```
//!
//! A derived seed therefore depends only on the master seed and the path, never
//! on how many other streams were created before it or on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type KnoopRng = ChaCha8Rng;

const DOMAIN: u64 = 0x4B4E_4F4F_505F_5345;
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master ^ DOMAIN), |h, &x| {
        mix(h ^ mix(x.wrapping_add(GOLDEN)))
    })
}

pub fn rng_from_seed(seed: u64) -> KnoopRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit FNV-1a hash, used to key streams by a text label.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
