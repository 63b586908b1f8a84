//! Reproducible per-replica random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream `replica` of the ChaCha8 generator keyed by `seed`. Results do not
/// depend on how replicas are scheduled across threads.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}
