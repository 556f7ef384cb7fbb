//! Deterministic random streams.
//!
//! Every replica owns a [`Stream`] seeded from `mix64(master_seed, index)`.
//! `mix64` is the splitmix64 finalizer applied to
//! `master_seed + (index + 1) * 0x9E37_79B9_7F4A_7C15` with the multipliers
//! `0xBF58_476D_1CE4_E5B9` and `0x94D0_49BB_1331_11EB` and shifts 30, 27, 31.
//! These constants are frozen: changing them changes every output file.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Random stream used throughout the crate.
pub type Stream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

/// Combines a master seed and a replica index into a stream seed.
pub fn mix64(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

pub fn replica_stream(master_seed: u64, index: u64) -> Stream {
    stream(mix64(master_seed, index))
}

/// Runs `work` once per replica on the current rayon pool.
///
/// Results come back in replica-index order and each replica sees only its
/// own stream, so the output does not depend on the thread count.
pub fn replicate<T, F>(replicas: usize, master_seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> T + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_stream(master_seed, i as u64);
            work(i, &mut rng)
        })
        .collect()
}
