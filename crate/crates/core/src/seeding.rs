//! Seed derivation. Every random stream in an experiment is keyed by
//! `derive(base_seed, index)` so any single trial can be rerun on its own.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `index` under `base`.
pub fn derive(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index))
}

/// Named sub-streams of a single trial.
#[derive(Clone, Copy, Debug)]
pub enum Stream {
    Weights = 1,
    State = 2,
    Leak = 3,
    Coupling = 4,
    Alternate = 5,
}

pub fn stream(trial_seed: u64, which: Stream) -> u64 {
    derive(trial_seed, which as u64)
}
