use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies the random stream of one Monte Carlo trial.
///
/// The generator is a pure function of `(master_seed, trial_index)`, so any
/// trial can be replayed alone and trials may run in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        self.rng_for_attempt(0)
    }

    /// Stream for the `attempt`-th redraw of a rejected realization.
    pub fn rng_for_attempt(&self, attempt: u32) -> ChaCha8Rng {
        let seed = if attempt == 0 {
            self.master_seed
        } else {
            mix64(self.master_seed ^ mix64(u64::from(attempt)))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `[0, 1)` keyed by a node's ALOHA key and an absolute slot
/// index. Counter-based, so a node's decision in a slot does not depend on
/// which other slots were evaluated before it.
pub(crate) fn keyed_uniform(key: u64, slot: u64) -> f64 {
    let bits = mix64(key ^ mix64(slot));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
