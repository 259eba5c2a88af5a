//! Seeded RNG construction.
//!
//! Every randomised stage derives its generator from a caller-supplied seed
//! plus a fixed per-purpose stream id, so stages sharing one seed draw from
//! decorrelated streams and a (seed, stream) pair always reproduces the same
//! sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_SAMPLE: u64 = 1;
pub(crate) const STREAM_SPLIT: u64 = 2;
pub(crate) const STREAM_INIT: u64 = 3;
pub(crate) const STREAM_SHUFFLE: u64 = 4;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
