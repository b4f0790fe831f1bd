//! Qm.f fixed-point quantization.
//!
//! A value `x` is stored as the integer `I = round(x * 2^f)` and read back as
//! `I * 2^-f`. Signed formats use two's complement over `n = m + f` bits, so
//! `I` lies in `[-2^(n-1), 2^(n-1) - 1]`; unsigned ones use `[0, 2^n - 1]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formats::{pow2, scale2};
use crate::rng::{DrawStream, ElementDraws};
use crate::rounding::{round_integral, RoundingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedFormat {
    ibits: u32,
    fbits: u32,
    signed: bool,
    saturate: bool,
}

impl FixedFormat {
    /// A signed, saturating Qm.f format. `ibits` counts the sign bit.
    pub fn new(ibits: u32, fbits: u32) -> Result<Self> {
        Self::build(ibits, fbits, true, true)
    }

    /// An unsigned, saturating format; `ibits` may be zero.
    pub fn unsigned(ibits: u32, fbits: u32) -> Result<Self> {
        Self::build(ibits, fbits, false, true)
    }

    fn build(ibits: u32, fbits: u32, signed: bool, saturate: bool) -> Result<Self> {
        if signed && ibits < 1 {
            return Err(Error::InvalidFormat(
                "signed fixed-point formats need at least one integer bit".into(),
            ));
        }
        if ibits + fbits < 1 || ibits + fbits > 63 {
            return Err(Error::InvalidFormat(format!(
                "ibits + fbits must lie in 1..=63, got {}",
                ibits + fbits
            )));
        }
        Ok(FixedFormat {
            ibits,
            fbits,
            signed,
            saturate,
        })
    }

    /// Two's-complement wrap-around instead of saturation on overflow.
    pub fn wrapping(mut self) -> Self {
        self.saturate = false;
        self
    }

    pub fn ibits(&self) -> u32 {
        self.ibits
    }

    pub fn fbits(&self) -> u32 {
        self.fbits
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn saturates(&self) -> bool {
        self.saturate
    }

    pub fn total_bits(&self) -> u32 {
        self.ibits + self.fbits
    }

    pub fn min_stored(&self) -> i64 {
        if self.signed {
            -(1i64 << (self.total_bits() - 1))
        } else {
            0
        }
    }

    pub fn max_stored(&self) -> i64 {
        if self.signed {
            (1i64 << (self.total_bits() - 1)) - 1
        } else {
            (1i64 << self.total_bits()) - 1
        }
    }

    /// Spacing between adjacent representable values, `2^-f`.
    pub fn quantum(&self) -> f64 {
        pow2(-(self.fbits as i64))
    }

    /// Smallest and largest representable values.
    pub fn range(&self) -> (f64, f64) {
        (self.dequantize(self.min_stored()), self.dequantize(self.max_stored()))
    }

    /// Scales and rounds `x` to its stored integer.
    pub fn quantize(&self, x: f64, mode: RoundingMode, draws: &ElementDraws) -> Result<i64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let scaled = scale2(x, self.fbits as i64);
        let r = round_integral(scaled, mode, draws.round);
        Ok(if self.saturate { self.saturate_integral(r) } else { self.wrap_integral(r) })
    }

    fn saturate_integral(&self, r: f64) -> i64 {
        // hi + 1 and lo are powers of two (or zero), exact in binary64 even
        // when hi is not.
        if r >= pow2(self.upper_exp()) {
            self.max_stored()
        } else if r < self.min_stored() as f64 {
            self.min_stored()
        } else {
            r as i64
        }
    }

    /// log2 of `max_stored + 1`.
    fn upper_exp(&self) -> i64 {
        if self.signed {
            self.total_bits() as i64 - 1
        } else {
            self.total_bits() as i64
        }
    }

    fn wrap_integral(&self, r: f64) -> i64 {
        let n = self.total_bits() as i64;
        let modulus = pow2(n);
        // fmod of integral binary64 values is exact.
        let m = r.rem_euclid(modulus);
        let m = if m >= modulus { 0.0 } else { m } as u64 as i64;
        if self.signed && m >= 1i64 << (n - 1) {
            m - (1i64 << n)
        } else {
            m
        }
    }

    /// `I * 2^-f`, exact.
    pub fn dequantize(&self, stored: i64) -> f64 {
        scale2(stored as f64, -(self.fbits as i64))
    }

    /// Rounds `x` onto the fixed-point grid.
    pub fn chop(&self, x: f64, mode: RoundingMode, draws: &ElementDraws) -> Result<f64> {
        Ok(self.dequantize(self.quantize(x, mode, draws)?))
    }
}

impl fmt::Display for FixedFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = if self.signed { "q" } else { "uq" };
        write!(f, "{prefix}{}.{}", self.ibits, self.fbits)
    }
}

impl FromStr for FixedFormat {
    type Err = Error;

    /// `qM.F` for signed formats, `uqM.F` for unsigned ones.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let err = || Error::Parse {
            input: s.to_string(),
            reason: "expected qM.F or uqM.F".into(),
        };
        let (signed, rest) = match lower.strip_prefix("uq") {
            Some(rest) => (false, rest),
            None => (true, lower.strip_prefix('q').ok_or_else(err)?),
        };
        let (i, f) = rest.split_once('.').ok_or_else(err)?;
        let ibits = i.parse().map_err(|_| err())?;
        let fbits = f.parse().map_err(|_| err())?;
        if signed {
            Self::new(ibits, fbits)
        } else {
            Self::unsigned(ibits, fbits)
        }
    }
}

/// A fixed-point format bound to a rounding mode and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedQuantizer {
    pub format: FixedFormat,
    pub mode: RoundingMode,
    pub seed: u64,
}

impl FixedQuantizer {
    pub fn new(format: FixedFormat, mode: RoundingMode) -> Self {
        FixedQuantizer { format, mode, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Stored integers for every element; element `i` is keyed on
    /// `(seed, 0, i)`.
    pub fn quantize_slice(&self, xs: &[f64]) -> Result<Vec<i64>> {
        let mut stream = DrawStream::new(self.seed, 0);
        xs.iter()
            .map(|&x| {
                let d = if self.mode.is_stochastic() {
                    stream.next_element()
                } else {
                    ElementDraws::default()
                };
                self.format.quantize(x, self.mode, &d)
            })
            .collect()
    }

    pub fn dequantize_slice(&self, stored: &[i64]) -> Vec<f64> {
        stored.iter().map(|&i| self.format.dequantize(i)).collect()
    }

    pub fn chop_slice(&self, xs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.dequantize_slice(&self.quantize_slice(xs)?))
    }
}
