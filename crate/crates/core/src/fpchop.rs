//! Rounding of binary64 values to a reduced floating-point format.
//!
//! Inputs are exact binary64 numbers. Each one is split into an integer
//! significand and a power of two, the significand is cut at the target's
//! quantum with integer arithmetic, and the chosen rounding mode decides
//! whether the truncated value is bumped by one quantum. There is exactly one
//! rounding step, so no double rounding occurs for any target precision.
//!
//! With `explim` on, the quantum never falls below the subnormal spacing
//! `2^(emin + 1 - t)` (or `2^emin` when subnormals are disabled) and results
//! beyond `x_max` overflow according to the mode: nearest modes go to
//! infinity, directed modes only move toward the infinity they round to.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{pow2, scale2, FloatFormat};
use crate::rng::{Draw, DrawStream, ElementDraws, DRAW_BITS, DRAW_HALF};
use crate::rounding::{increments, Discarded, RoundingMode};

/// Emulation policy applied on top of a [`FloatFormat`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChopConfig {
    pub mode: RoundingMode,
    /// Gradual underflow. When off, tiny magnitudes round to `0` or `x_min`.
    pub subnormal: bool,
    /// Apply the format's exponent range. When off only the significand is
    /// rounded.
    pub explim: bool,
    /// Soft-error injection in the rounded significand.
    pub flip: bool,
    /// Probability that an element gets a bit flipped.
    pub p: f64,
    pub seed: u64,
    /// Elements per parallel work unit.
    pub chunk_size: usize,
}

impl Default for ChopConfig {
    fn default() -> Self {
        ChopConfig {
            mode: RoundingMode::NearestEven,
            subnormal: true,
            explim: true,
            flip: false,
            p: 0.5,
            seed: 0,
            chunk_size: 1000,
        }
    }
}

impl ChopConfig {
    pub fn with_mode(mut self, mode: RoundingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_subnormal(mut self, subnormal: bool) -> Self {
        self.subnormal = subnormal;
        self
    }

    pub fn with_explim(mut self, explim: bool) -> Self {
        self.explim = explim;
        self
    }

    pub fn with_flip(mut self, p: f64) -> Self {
        self.flip = true;
        self.p = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidConfig(format!(
                "flip probability must lie in [0, 1], got {}",
                self.p
            )));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether rounding consumes random draws at all.
    pub fn is_random(&self) -> bool {
        self.mode.is_stochastic() || (self.flip && self.p > 0.0)
    }
}

/// `sign * significand * 2^exponent` with the significand in `[1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub sign: i8,
    pub exponent: i64,
    pub significand: f64,
}

/// Splits a finite nonzero value exactly; `None` for zeros, infinities and
/// NaN.
pub fn decompose(x: f64) -> Option<Decomposition> {
    if x == 0.0 || !x.is_finite() {
        return None;
    }
    let (m, e_lsb) = integer_significand(x.abs());
    let exponent = e_lsb + 63 - m.leading_zeros() as i64;
    Some(Decomposition {
        sign: if x < 0.0 { -1 } else { 1 },
        exponent,
        significand: scale2(x.abs(), -exponent),
    })
}

/// `a = m * 2^e` with `m` an integer, for finite positive `a`.
#[inline]
fn integer_significand(a: f64) -> (u64, i64) {
    let bits = a.to_bits();
    let field = (bits >> 52) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), field - 1075)
    }
}

/// A value of the target format, as a magnitude before the sign is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Magnitude {
    /// `q * 2^qe`.
    Finite { q: u64, qe: i64 },
    /// The input itself, already representable.
    Unchanged,
    Infinite,
}

/// The rounding engine for one format and configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chop {
    format: FloatFormat,
    config: ChopConfig,
    x_max: f64,
}

impl Chop {
    pub fn new(format: FloatFormat, config: ChopConfig) -> Result<Self> {
        config.validate()?;
        Ok(Chop {
            format,
            config,
            x_max: format.params().x_max,
        })
    }

    /// Round-to-nearest-even with default settings.
    pub fn nearest(format: FloatFormat) -> Self {
        Self::new(format, ChopConfig::default()).expect("default config is valid")
    }

    pub fn format(&self) -> FloatFormat {
        self.format
    }

    pub fn config(&self) -> &ChopConfig {
        &self.config
    }

    /// Rounds one value using the given draws.
    ///
    /// Deterministic modes without bit flips ignore `draws`.
    pub fn round_with(&self, x: f64, draws: &ElementDraws) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x == 0.0 || x.is_infinite() {
            return x;
        }
        let negative = x < 0.0;
        let a = x.abs();
        let magnitude = self.round_magnitude(a, negative, draws.round);
        let mut r = match magnitude {
            Magnitude::Unchanged => a,
            Magnitude::Finite { q, qe } => scale2(q as f64, qe),
            Magnitude::Infinite => f64::INFINITY,
        };
        if self.config.flip && r != 0.0 && r.is_finite() && self.flips(draws.flip) {
            let bit = (draws.bit % self.format.sig_bits() as u64) as u32;
            r = flip_magnitude(r, &self.format, bit);
        }
        if negative {
            -r
        } else {
            r
        }
    }

    fn flips(&self, draw: Draw) -> bool {
        // p * 2^53 is exact for p in [0, 1]; p = 1 always flips.
        (draw.0 as f64) < self.config.p * (1u64 << DRAW_BITS) as f64
    }

    #[inline]
    fn round_magnitude(&self, a: f64, negative: bool, draw: Draw) -> Magnitude {
        let fmt = &self.format;
        let cfg = &self.config;
        let t = fmt.t() as i64;
        let (m, e_lsb) = integer_significand(a);
        let e = e_lsb + 63 - m.leading_zeros() as i64;

        if cfg.explim && e > fmt.emax() {
            return self.overflow(negative, draw);
        }

        // Exponent of one unit in the last retained place.
        let qe = if cfg.explim && e < fmt.emin() {
            if cfg.subnormal {
                fmt.emin() + 1 - t
            } else {
                fmt.emin()
            }
        } else {
            e + 1 - t
        };
        if qe <= e_lsb {
            return Magnitude::Unchanged;
        }

        let shift = (qe - e_lsb) as u32;
        let (q, rem) = if shift >= 64 {
            (0u64, m)
        } else {
            (m >> shift, m & ((1u64 << shift) - 1))
        };
        let discarded = if rem == 0 {
            Discarded::Exact
        } else if shift > 64 {
            // m < 2^53 <= 2^(shift - 1)
            Discarded::BelowHalf
        } else {
            let half = 1u64 << (shift - 1);
            match rem.cmp(&half) {
                std::cmp::Ordering::Less => Discarded::BelowHalf,
                std::cmp::Ordering::Equal => Discarded::Half,
                std::cmp::Ordering::Greater => Discarded::AboveHalf,
            }
        };
        let up = increments(cfg.mode, negative, q & 1 == 1, discarded, draw, |d| {
            proportional_up(d, rem, shift)
        });
        let q = q + up as u64;
        if q == 0 {
            return Magnitude::Finite { q: 0, qe };
        }
        if cfg.explim && scale2(q as f64, qe) > self.x_max {
            return Magnitude::Infinite;
        }
        Magnitude::Finite { q, qe }
    }

    /// Decision for magnitudes at or above `2^(emax + 1)`.
    fn overflow(&self, negative: bool, draw: Draw) -> Magnitude {
        let to_infinity = match self.config.mode {
            RoundingMode::NearestEven
            | RoundingMode::NearestTiesToZero
            | RoundingMode::NearestTiesAway
            | RoundingMode::StochasticProportional => true,
            RoundingMode::TowardPositive => !negative,
            RoundingMode::TowardNegative => negative,
            RoundingMode::TowardZero | RoundingMode::TowardOdd => false,
            RoundingMode::StochasticUniform => draw.0 < DRAW_HALF,
        };
        if to_infinity {
            Magnitude::Infinite
        } else {
            let t = self.format.t() as i64;
            Magnitude::Finite {
                q: (1u64 << t) - 1,
                qe: self.format.emax() + 1 - t,
            }
        }
    }

    /// Rounds one value, drawing from `stream` when randomness is needed.
    pub fn chop_value(&self, x: f64, stream: &mut DrawStream) -> f64 {
        let draws = if self.config.is_random() {
            stream.next_element()
        } else {
            ElementDraws::default()
        };
        self.round_with(x, &draws)
    }

    /// Rounds one value using the draws of element `index` in stream 0.
    pub fn chop_at(&self, x: f64, index: u64) -> f64 {
        if !self.config.is_random() {
            return self.round_with(x, &ElementDraws::default());
        }
        self.chop_value(x, &mut DrawStream::at(self.config.seed, 0, index))
    }

    /// Shorthand for deterministic use; stochastic modes use element 0.
    pub fn chop(&self, x: f64) -> f64 {
        self.chop_at(x, 0)
    }

    /// Rounds every element; element `i` is keyed on `(seed, 0, i)`.
    pub fn chop_slice<T: Storage>(&self, xs: &[T]) -> Vec<T> {
        self.chop_slice_in_stream(xs, 0)
    }

    /// As [`Chop::chop_slice`] with an explicit stream id, so that
    /// independent rounding passes over the same data get independent draws.
    pub fn chop_slice_in_stream<T: Storage>(&self, xs: &[T], stream: u64) -> Vec<T> {
        let mut out = xs.to_vec();
        self.chop_in_place(&mut out, stream);
        out
    }

    /// Rounds `xs` in place, processing chunks on the current rayon pool.
    pub fn chop_in_place<T: Storage>(&self, xs: &mut [T], stream: u64) {
        let chunk = self.config.chunk_size.max(1);
        let random = self.config.is_random();
        let seed = self.config.seed;
        let work = |(ci, block): (usize, &mut [T])| {
            let mut draws = random.then(|| DrawStream::at(seed, stream, (ci * chunk) as u64));
            for x in block.iter_mut() {
                let d = draws.as_mut().map_or_else(ElementDraws::default, DrawStream::next_element);
                *x = T::from_f64(self.round_with(x.to_f64(), &d));
            }
        };
        if xs.len() <= chunk {
            work((0, xs));
        } else {
            xs.par_chunks_mut(chunk).enumerate().for_each(work);
        }
    }

    /// As [`Chop::chop_slice`] on a dedicated pool of `threads` workers.
    pub fn chop_slice_with_threads<T: Storage>(&self, xs: &[T], threads: usize) -> Result<Vec<T>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start thread pool: {e}")))?;
        Ok(pool.install(|| self.chop_slice(xs)))
    }
}

/// Mode 5: round up iff `draw / 2^53 < rem / 2^shift`, compared exactly.
#[inline]
fn proportional_up(draw: Draw, rem: u64, shift: u32) -> bool {
    let d = draw.0 as u128;
    let rem = rem as u128;
    if shift >= DRAW_BITS {
        let extra = shift - DRAW_BITS;
        if extra >= 74 {
            d == 0 && rem > 0
        } else {
            (d << extra) < rem
        }
    } else {
        d < rem << (DRAW_BITS - shift)
    }
}

/// Toggles stored fraction bit `bit` (0 = least significant) of a positive
/// finite value of `fmt`.
fn flip_magnitude(a: f64, fmt: &FloatFormat, bit: u32) -> f64 {
    let t = fmt.t() as i64;
    let (m, e_lsb) = integer_significand(a);
    let e = e_lsb + 63 - m.leading_zeros() as i64;
    // Values below x_min sit on the subnormal grid.
    let qe = e.max(fmt.emin()) + 1 - t;
    let q = if qe <= e_lsb {
        (m as u128) << (e_lsb - qe)
    } else {
        (m >> (qe - e_lsb)) as u128
    };
    let flipped = q ^ (1u128 << bit);
    scale2(flipped as f64, qe)
}

/// Toggles one stored fraction bit of a value representable in `fmt`.
///
/// Bit `sig_bits - 1` is the most significant fraction bit. The sign and
/// exponent are left alone. Zeros, infinities and NaN are returned unchanged.
pub fn flip_bit(x: f64, fmt: &FloatFormat, bit: u32) -> Result<f64> {
    if bit >= fmt.sig_bits() {
        return Err(Error::InvalidConfig(format!(
            "bit index {bit} out of range for {} stored fraction bits",
            fmt.sig_bits()
        )));
    }
    if x == 0.0 || !x.is_finite() {
        return Ok(x);
    }
    let r = flip_magnitude(x.abs(), fmt, bit);
    Ok(if x < 0.0 { -r } else { r })
}

/// Rounds one value; see [`Chop::round_with`].
pub fn chop_value(x: f64, fmt: FloatFormat, cfg: ChopConfig, stream: &mut DrawStream) -> Result<f64> {
    Ok(Chop::new(fmt, cfg)?.chop_value(x, stream))
}

/// Rounds a slice elementwise; see [`Chop::chop_slice`].
pub fn chop_array<T: Storage>(xs: &[T], fmt: FloatFormat, cfg: ChopConfig) -> Result<Vec<T>> {
    Ok(Chop::new(fmt, cfg)?.chop_slice(xs))
}

/// Storage precisions the engine reads and writes.
///
/// Values are widened exactly to binary64; results are narrowed with the
/// host's round-to-nearest, which is exact whenever the target format fits in
/// the storage type.
pub trait Storage: Copy + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Storage for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

impl Storage for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

/// Spacing of the format's grid around `x`, respecting the subnormal range.
pub fn ulp_at(x: f64, fmt: &FloatFormat) -> f64 {
    let t = fmt.t() as i64;
    match decompose(x) {
        Some(d) => pow2(d.exponent.max(fmt.emin()) + 1 - t),
        None => pow2(fmt.emin() + 1 - t),
    }
}
