//! Seed discipline.
//!
//! Every run derives its randomness from one 64-bit seed. ChaCha is a
//! counter-based generator: the seed fixes the key, the stream id selects an
//! independent keystream, and the block counter advances with the trials a
//! chunk consumes. Chunk `k` of a run always reads stream `k`, so a run is a
//! pure function of `(seed, chunk count)` no matter how chunks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used throughout the crate.
pub type LabRng = ChaCha8Rng;

/// Stream reserved for run-level bookkeeping draws (never used by a chunk).
pub const BOOKKEEPING_STREAM: u64 = u64::MAX;

/// Generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
