//! Seed derivation and the sampling RNG.
//!
//! Every measurement record is drawn from its own xoshiro256++ stream. The
//! stream seed is derived from `(master_seed, state_index, basis_index,
//! trial_index)` by chaining the SplitMix64 finalizer, so parallel and serial
//! runs produce identical records without sharing generator state.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SampleRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one record within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RecordKey {
    pub state_index: u64,
    pub basis_index: u64,
    pub trial_index: u64,
}

impl RecordKey {
    pub fn new(state_index: usize, basis_index: usize, trial_index: usize) -> Self {
        Self {
            state_index: state_index as u64,
            basis_index: basis_index as u64,
            trial_index: trial_index as u64,
        }
    }
}

pub fn derive_seed(master_seed: u64, key: RecordKey) -> u64 {
    let mut h = splitmix64(master_seed);
    for part in [key.state_index, key.basis_index, key.trial_index] {
        h = splitmix64(h ^ part);
    }
    h
}

pub fn rng_from_seed(seed: u64) -> SampleRng {
    SampleRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(GOLDEN_GAMMA), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = HashSet::new();
        for s in 0..50 {
            for b in 0..4 {
                for t in 0..50 {
                    assert!(seen.insert(derive_seed(7, RecordKey::new(s, b, t))));
                }
            }
        }
        // Permuting the key components must not collide.
        assert_ne!(
            derive_seed(7, RecordKey::new(1, 2, 3)),
            derive_seed(7, RecordKey::new(3, 2, 1))
        );
    }

    #[test]
    fn derivation_is_stable() {
        let a = derive_seed(42, RecordKey::new(3, 1, 9));
        let b = derive_seed(42, RecordKey::new(3, 1, 9));
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(43, RecordKey::new(3, 1, 9)));
    }
}
