//! Per-record random streams.
//!
//! Every record gets its own generator seeded from `(global seed, record id,
//! stream)`, so results do not depend on which worker handles a record or in
//! which order records are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RecordRng = ChaCha8Rng;

/// Independent sub-streams used by one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Noise = 1,
    Infill = 2,
    Dropout = 3,
    Mlm = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, record_id: u64, stream: Stream) -> u64 {
    let h = splitmix64(seed);
    let h = splitmix64(h ^ record_id);
    splitmix64(h ^ stream as u64)
}

pub fn record_rng(seed: u64, record_id: u64, stream: Stream) -> RecordRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, record_id, stream))
}
