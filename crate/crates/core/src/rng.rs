//! Seed derivation for independent random substreams.
//!
//! Every random quantity in a trial is drawn from its own ChaCha stream keyed
//! by `(trial_seed, purpose)`. Adding a new purpose never shifts the draws of
//! an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. The discriminant is the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Shadowing = 1,
    SmallScale = 2,
    Terrestrial = 3,
    Geometry = 4,
    VtDistances = 5,
    TaskSizes = 6,
    RandomSplit = 7,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one Monte-Carlo trial under a master seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn substream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
