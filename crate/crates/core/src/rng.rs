//! Counter-based random streams.
//!
//! Every replicate draws from its own ChaCha8 stream keyed by the master
//! seed, so results do not depend on how work is spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream identifier for replicate `replicate` of grid cell `cell`.
pub fn stream_id(cell: u32, replicate: u32) -> u64 {
    ((cell as u64) << 32) | replicate as u64
}

/// Generator for one (master seed, stream) pair.
pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Where a sample's randomness came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedProvenance {
    pub master_seed: u64,
    pub stream: u64,
}

impl SeedProvenance {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        SeedProvenance {
            master_seed,
            stream,
        }
    }

    pub fn rng(&self) -> StreamRng {
        stream_rng(self.master_seed, self.stream)
    }
}
