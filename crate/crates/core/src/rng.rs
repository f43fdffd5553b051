//! Deterministic seed derivation.
//!
//! Every randomized operation in the crate takes an explicit seed and builds
//! its own ChaCha stream from it, so results are pure functions of
//! `(inputs, seed)` regardless of call order or threading.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep sub-seeds for different purposes disjoint even when the
/// same master seed and index are involved.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    Split,
    Balance,
    Subsample,
    Branch,
    WeightInit,
    Shuffle,
    Dropout,
    Scenario,
    Baseline,
    SubsetShuffle,
    Tree,
    Cell,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Split => 0x5350_4c49,
            Stream::Balance => 0x4241_4c41,
            Stream::Subsample => 0x5355_4253,
            Stream::Branch => 0x4252_4e43,
            Stream::WeightInit => 0x5749_4e49,
            Stream::Shuffle => 0x5348_5546,
            Stream::Dropout => 0x4452_4f50,
            Stream::Scenario => 0x5343_454e,
            Stream::Baseline => 0x4241_5345,
            Stream::SubsetShuffle => 0x5342_5348,
            Stream::Tree => 0x5452_4545,
            Stream::Cell => 0x4345_4c4c,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives a sub-seed from `(master, stream, index)`.
pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ stream.tag()).wrapping_add(index))
}

/// Deterministic RNG for a given seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
