//! Seeded random streams.
//!
//! Every random stream in the toolkit is a ChaCha8 generator whose seed is
//! derived from a master seed, a purpose tag and an index:
//!
//! ```text
//! tag_hash = FNV-1a-64(purpose)
//! seed     = splitmix64(splitmix64(master ^ tag_hash) ^ index)
//! ```
//!
//! Distinct purposes therefore never share a stream, and adding a new
//! consumer of randomness does not perturb existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// The splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, purpose: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(purpose.as_bytes())) ^ index)
}

pub fn stream(master: u64, purpose: &str, index: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master, purpose, index))
}
