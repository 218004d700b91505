//! Deterministic per-replica random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 output function.
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index`: the `(index + 1)`-th splitmix64 output of a generator
/// whose state starts at `master`.
///
/// Distinct indices below `2^64` never collide: the state advance is injective and
/// the output function is a bijection.
pub fn seed_split(master: u64, index: u64) -> u64 {
    splitmix64_mix(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn replica_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed_split(master, index))
}

/// Runs `f` for every replica in parallel and returns the results in replica order.
pub fn run_replicas<T, F>(master: u64, replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(i, &mut replica_rng(master, i as u64)))
        .collect()
}
