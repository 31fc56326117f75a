//! Seed derivation for independent, schedule-independent rng streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Rng used for every stochastic step in the workbench.
pub type StreamRng = ChaCha8Rng;

/// Named streams so that derived seeds never collide across purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    QuerySelection = 1,
    PoissonOnce = 2,
    QueryJob = 3,
    Student = 4,
    Partition = 5,
    Teacher = 6,
    Baseline = 7,
    Synthetic = 8,
    SweepCell = 9,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for job `index` of `stream` under `master`.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream as u64)) ^ index)
}

pub fn stream_rng(master: u64, stream: Stream, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, stream, index))
}
