//! Counter-based random streams.
//!
//! A stream is identified by `(seed, stream)` and positioned by a counter, so
//! any draw can be regenerated without replaying earlier ones. Particle code
//! gives every particle its own block of the stream for the step, which makes
//! results independent of the order in which particles are processed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of 32-bit words reserved for each sub-block (2³²).
const BLOCK_SHIFT: u32 = 32;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
        }
    }

    /// Stream positioned at the start of sub-block `block`.
    pub fn block(seed: u64, stream: u64, block: u64) -> Self {
        let mut rng = Self::new(seed, stream);
        rng.inner.set_word_pos(u128::from(block) << BLOCK_SHIFT);
        rng
    }

    /// Sub-block `block` of this stream, independent of the current position.
    pub fn substream(&self, block: u64) -> Self {
        Self::block(self.seed, self.stream, block)
    }

    /// A different stream under the same seed.
    pub fn derive(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Position in 32-bit words since the start of the stream.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn set_counter(&mut self, counter: u128) {
        self.inner.set_word_pos(counter);
    }
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stream == other.stream && self.counter() == other.counter()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Packs a purpose tag and a time index into a stream id.
pub fn stream_id(purpose: u16, index: u64) -> u64 {
    (u64::from(purpose) << 48) | (index & ((1 << 48) - 1))
}
