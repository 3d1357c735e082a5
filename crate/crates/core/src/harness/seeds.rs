//! Independent RNG streams keyed by (master seed, purpose, indices).
//!
//! Every random quantity of a run is drawn from a stream whose key names
//! what it is used for, so traffic seen by the agent, the baseline and the
//! oracle is identical for matching keys regardless of the actions taken.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Train = 1,
    Infer = 2,
    /// Cells held out for the oracle comparison.
    Oracle = 3,
    /// States used to monitor Q-value convergence.
    QProbe = 4,
    Init = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Deployment = 1,
    Traffic = 2,
    Policy = 3,
    Batches = 4,
    Offset = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, key: &[u64]) -> u64 {
    key.iter().fold(splitmix64(master), |acc, k| splitmix64(acc ^ splitmix64(*k)))
}

pub fn stream_rng(master: u64, purpose: Purpose, stream: Stream, indices: &[u64]) -> ChaCha8Rng {
    let mut key = vec![purpose as u64, stream as u64];
    key.extend_from_slice(indices);
    ChaCha8Rng::seed_from_u64(derive_seed(master, &key))
}
