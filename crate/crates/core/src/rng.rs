//! Counter-based random draws for stochastic rounding and bit flips.
//!
//! Element `i` of a stream always receives the same draws for a given
//! `(seed, stream)` pair, no matter how an array is split into chunks or how
//! many threads process it. The generator is ChaCha8, whose keystream can be
//! positioned at any word offset in constant time.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform draws carry 53 bits, the resolution of a binary64 in `[0, 1)`.
pub const DRAW_BITS: u32 = 53;
pub(crate) const DRAW_SCALE: f64 = (1u64 << DRAW_BITS) as f64;
pub(crate) const DRAW_HALF: u64 = 1 << (DRAW_BITS - 1);

/// ChaCha words consumed per element (three 64-bit draws).
const WORDS_PER_ELEMENT: u128 = 6;

/// A uniform sample `k / 2^53` stored as the integer `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct Draw(pub u64);

impl Draw {
    /// Converts a sample from `[0, 1)`, truncating to 53 bits.
    pub fn from_unit(u: f64) -> Self {
        let k = (u.clamp(0.0, 1.0) * DRAW_SCALE) as u64;
        Draw(k.min((1u64 << DRAW_BITS) - 1))
    }

    pub fn unit(self) -> f64 {
        self.0 as f64 / DRAW_SCALE
    }
}

/// The random inputs one element may need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ElementDraws {
    /// Drives stochastic rounding.
    pub round: Draw,
    /// Decides whether a bit flip happens.
    pub flip: Draw,
    /// Raw bits used to pick which bit is flipped.
    pub bit: u64,
}

/// A positioned view of the keystream for one `(seed, stream)` pair.
#[derive(Debug, Clone)]
pub struct DrawStream {
    rng: ChaCha8Rng,
}

impl DrawStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self::at(seed, stream, 0)
    }

    /// A stream positioned at element `index`.
    pub fn at(seed: u64, stream: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(index as u128 * WORDS_PER_ELEMENT);
        DrawStream { rng }
    }

    /// Draws for the current element, advancing to the next one.
    pub fn next_element(&mut self) -> ElementDraws {
        let shift = 64 - DRAW_BITS;
        ElementDraws {
            round: Draw(self.rng.next_u64() >> shift),
            flip: Draw(self.rng.next_u64() >> shift),
            bit: self.rng.next_u64(),
        }
    }
}

impl Iterator for DrawStream {
    type Item = ElementDraws;

    fn next(&mut self) -> Option<ElementDraws> {
        Some(self.next_element())
    }
}
