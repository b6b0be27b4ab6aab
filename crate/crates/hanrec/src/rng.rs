//! Seed-stream derivation. Every randomized stage (init, splits, sampling,
//! dropout, batching) draws from its own ChaCha stream so stages stay
//! decoupled and runs reproduce bit-for-bit from one `u64` seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub enum Stream {
    ParamInit = 1,
    Split = 2,
    TestNegatives = 3,
    TrainNegatives = 4,
    Discovery = 5,
    NeighborCap = 6,
    Batch = 7,
    Dropout = 8,
    Synthetic = 9,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Per-entity substream (e.g. one stream per source node during discovery),
/// independent of iteration order.
pub fn entity_rng(seed: u64, stream: Stream, entity: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream as u64) << 32 | (entity & 0xffff_ffff));
    rng
}
