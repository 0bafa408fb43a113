//! Keyed, counter-based Gaussian streams.
//!
//! Every random draw in the crate is addressed by an [`RngKey`]. The
//! `(master_seed, replica_id, branch_generation)` triple is packed verbatim
//! into the 256-bit ChaCha key, and `step_counter` selects a disjoint block
//! window of the keystream. Draws therefore depend on nothing but the key:
//! replicas can be advanced on any thread, in any order, and re-branched
//! without consuming a shared generator.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Keystream words reserved for one step; bounds the draws per key.
const WORDS_PER_STEP: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngKey {
    pub master_seed: u64,
    pub replica_id: u32,
    pub branch_generation: u32,
    pub step_counter: u64,
}

impl RngKey {
    pub fn new(master_seed: u64, replica_id: u32, branch_generation: u32, step_counter: u64) -> Self {
        RngKey { master_seed, replica_id, branch_generation, step_counter }
    }

    pub fn at_step(self, step_counter: u64) -> Self {
        RngKey { step_counter, ..self }
    }

    /// Generator positioned at the start of this key's window.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..12].copy_from_slice(&self.replica_id.to_le_bytes());
        seed[12..16].copy_from_slice(&self.branch_generation.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_word_pos(self.step_counter as u128 * WORDS_PER_STEP);
        rng
    }

    /// Fills `out` with i.i.d. standard normals.
    pub fn fill_normals(&self, out: &mut [f64]) {
        let mut rng = self.generator();
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }

    pub fn normals(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_normals(&mut v);
        v
    }

    /// Uniform index in `0..n`.
    pub fn index(&self, n: usize) -> usize {
        self.generator().random_range(0..n)
    }
}

/// Derives an independent 64-bit seed from a base seed and a label (SplitMix64 finalizer).
pub fn derive_seed(base: u64, label: u64) -> u64 {
    let mut z = base ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
