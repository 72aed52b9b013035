//! Reproducible uniform streams.
//!
//! A [`RandomStream`] is addressed by `(seed, stream_id)`. The seed is expanded
//! into a ChaCha8 key and the stream id selects the ChaCha nonce, so any
//! replicate's stream can be opened directly without advancing through the
//! streams before it. The sequence is identical on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    core: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut core = ChaCha8Rng::from_seed(key);
        core.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            core,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Next uniform in `[0, 1)`, using the top 53 bits of one output word.
    ///
    /// The value 1 is never produced, so inverse CDFs with a pole at 1 stay
    /// finite.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.core.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.core.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.core.fill_bytes(dst)
    }
}

/// Derives an independent 64-bit seed from a master seed and a label.
///
/// Used to give every test or sub-experiment its own seed while keeping a
/// single master seed on the command line.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    let mut state = master ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    splitmix64(&mut state);
    splitmix64(&mut state)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
