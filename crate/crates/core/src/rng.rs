//! Trial-indexed random streams.
//!
//! Every trial gets its own ChaCha8 stream: the 256-bit key is expanded from
//! the root seed (`SeedableRng::seed_from_u64`) and the 64-bit stream id is
//! the trial index. A trial's draws therefore depend only on
//! `(root seed, trial index)`, never on which worker runs it or in what
//! order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Factory for per-trial streams under one root seed.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    root: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(seed: u64) -> Self {
        TrialStreams {
            root: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The stream for trial `trial`, positioned at its first word.
    pub fn stream(&self, trial: u64) -> TrialRng {
        let mut rng = self.root.clone();
        rng.set_stream(trial);
        rng.set_word_pos(0);
        TrialRng(rng)
    }
}

/// Random stream for a single trial.
#[derive(Debug, Clone)]
pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)` from the top 53 bits of one 64-bit word.
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }
}

/// SplitMix64 finalizer, used to derive independent root seeds for the
/// cells of a sweep.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed
        ^ salt
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
