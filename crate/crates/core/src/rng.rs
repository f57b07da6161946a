//! Seeded random substreams.
//!
//! Each consumer of randomness gets its own ChaCha stream derived from the
//! run seed plus a (purpose, round, slot) triple fixed before any job
//! starts, so draws never depend on task scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    FirstCenter = 1,
    Oversample = 2,
    ReduceToK = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn substream(seed: u64, purpose: Purpose, round: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = splitmix64(splitmix64(splitmix64(purpose as u64) ^ round) ^ slot);
    rng.set_stream(stream);
    rng
}
