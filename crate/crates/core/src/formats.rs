//! Floating-point format descriptors.
//!
//! A [`FloatFormat`] describes a binary format with a sign bit, `exp_bits`
//! exponent bits and `sig_bits` stored fraction bits. Values of the format are
//! always held in binary64 by the rest of the crate; the descriptor only says
//! which binary64 values are representable.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Names accepted by [`FloatFormat::builtin`], canonical spelling first.
pub const BUILTIN_NAMES: &[&str] = &[
    "e4m3", "e5m2", "bf16", "fp16", "half", "tf32", "fp32", "single", "fp64", "double",
];

/// A target floating-point format.
///
/// `t` is the precision including the implicit leading bit. `emin` is the
/// exponent of the smallest positive normal number and `emax` that of the
/// largest finite one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatFormat {
    exp_bits: u32,
    sig_bits: u32,
    emax: i64,
    emin: i64,
    bias: i64,
}

/// Derived range and precision parameters of a [`FloatFormat`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormatParams {
    /// Unit roundoff, `2^-t`.
    pub u: f64,
    /// Smallest positive normal number, `2^emin`.
    pub x_min: f64,
    /// Largest finite number, `2^emax * (2 - 2^(1-t))`.
    pub x_max: f64,
    /// Smallest positive subnormal number, `2^emin * 2^(1-t)`.
    pub x_sub_min: f64,
}

impl FloatFormat {
    pub const E4M3: FloatFormat = FloatFormat::from_widths(4, 3);
    pub const E5M2: FloatFormat = FloatFormat::from_widths(5, 2);
    pub const BF16: FloatFormat = FloatFormat::from_widths(8, 7);
    pub const FP16: FloatFormat = FloatFormat::from_widths(5, 10);
    pub const TF32: FloatFormat = FloatFormat::from_widths(8, 10);
    pub const FP32: FloatFormat = FloatFormat::from_widths(8, 23);
    pub const FP64: FloatFormat = FloatFormat::from_widths(11, 52);

    const fn from_widths(exp_bits: u32, sig_bits: u32) -> Self {
        let bias = (1i64 << (exp_bits - 1)) - 1;
        FloatFormat {
            exp_bits,
            sig_bits,
            emax: bias,
            emin: 1 - bias,
            bias,
        }
    }

    /// Builds a format from its exponent and stored-significand widths.
    pub fn new(exp_bits: u32, sig_bits: u32) -> Result<Self> {
        if exp_bits < 2 {
            return Err(Error::InvalidFormat(format!(
                "exp_bits must be at least 2, got {exp_bits}"
            )));
        }
        if sig_bits < 1 {
            return Err(Error::InvalidFormat(format!(
                "sig_bits must be at least 1, got {sig_bits}"
            )));
        }
        if exp_bits as u64 + sig_bits as u64 + 1 > 64 {
            return Err(Error::InvalidFormat(format!(
                "1 + exp_bits + sig_bits must not exceed 64, got {}",
                1 + exp_bits as u64 + sig_bits as u64
            )));
        }
        Ok(Self::from_widths(exp_bits, sig_bits))
    }

    /// Builds a format whose maximum exponent is set directly instead of
    /// being derived from `exp_bits`. The bias follows `emax` and
    /// `emin = 1 - emax`.
    pub fn with_emax(exp_bits: u32, sig_bits: u32, emax: i64) -> Result<Self> {
        let base = Self::new(exp_bits, sig_bits)?;
        if emax < 1 {
            return Err(Error::InvalidFormat(format!(
                "emax must be positive, got {emax}"
            )));
        }
        Ok(FloatFormat {
            emax,
            emin: 1 - emax,
            bias: emax,
            ..base
        })
    }

    /// Looks up one of the built-in formats by name (case-insensitive).
    pub fn builtin(name: &str) -> Result<Self> {
        let fmt = match name.to_ascii_lowercase().as_str() {
            "e4m3" => Self::E4M3,
            "e5m2" => Self::E5M2,
            "bf16" | "bfloat16" => Self::BF16,
            "fp16" | "half" => Self::FP16,
            "tf32" => Self::TF32,
            "fp32" | "single" => Self::FP32,
            "fp64" | "double" => Self::FP64,
            _ => {
                return Err(Error::UnknownFormat {
                    name: name.to_string(),
                    valid: BUILTIN_NAMES.join(", "),
                })
            }
        };
        Ok(fmt)
    }

    pub fn exp_bits(&self) -> u32 {
        self.exp_bits
    }

    pub fn sig_bits(&self) -> u32 {
        self.sig_bits
    }

    /// Precision in bits, including the implicit leading bit.
    pub fn t(&self) -> u32 {
        self.sig_bits + 1
    }

    pub fn emax(&self) -> i64 {
        self.emax
    }

    pub fn emin(&self) -> i64 {
        self.emin
    }

    pub fn bias(&self) -> i64 {
        self.bias
    }

    /// Total storage width in bits.
    pub fn total_bits(&self) -> u32 {
        1 + self.exp_bits + self.sig_bits
    }

    pub fn params(&self) -> FormatParams {
        let t = self.t() as i64;
        FormatParams {
            u: pow2(-t),
            x_min: pow2(self.emin),
            x_max: pow2(self.emax) * (2.0 - pow2(1 - t)),
            x_sub_min: pow2(self.emin + 1 - t),
        }
    }

    /// Decodes a bit pattern laid out as `[sign | exponent | fraction]`.
    ///
    /// The all-ones exponent field encodes infinities and NaNs. Only
    /// meaningful for formats derived from their bit widths.
    pub fn decode(&self, bits: u64) -> f64 {
        let sig_bits = self.sig_bits;
        let frac = bits & ((1u64 << sig_bits) - 1);
        let field = (bits >> sig_bits) & ((1u64 << self.exp_bits) - 1);
        let negative = (bits >> (sig_bits + self.exp_bits)) & 1 == 1;
        let all_ones = (1u64 << self.exp_bits) - 1;
        let magnitude = if field == all_ones {
            if frac == 0 {
                f64::INFINITY
            } else {
                f64::NAN
            }
        } else if field == 0 {
            scale2(frac as f64, self.emin - sig_bits as i64)
        } else {
            let q = frac | (1u64 << sig_bits);
            scale2(q as f64, field as i64 - self.bias - sig_bits as i64)
        };
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Number of finite bit patterns, signed zeros included.
    pub fn finite_count(&self) -> u64 {
        2 * ((1u64 << self.exp_bits) - 1) * (1u64 << self.sig_bits)
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}m{}", self.exp_bits, self.sig_bits)
    }
}

impl FromStr for FloatFormat {
    type Err = Error;

    /// Accepts a built-in name or `eXmY`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Ok(fmt) = Self::builtin(&lower) {
            return Ok(fmt);
        }
        let parse_err = || Error::UnknownFormat {
            name: s.to_string(),
            valid: format!("{} or eXmY", BUILTIN_NAMES.join(", ")),
        };
        let rest = lower.strip_prefix('e').ok_or_else(parse_err)?;
        let (exp, sig) = rest.split_once('m').ok_or_else(parse_err)?;
        let exp_bits = exp.parse().map_err(|_| parse_err())?;
        let sig_bits = sig.parse().map_err(|_| parse_err())?;
        Self::new(exp_bits, sig_bits)
    }
}

/// `2^n` as a binary64, saturating to `0` and `inf` outside its range.
pub fn pow2(n: i64) -> f64 {
    if n > 1023 {
        f64::INFINITY
    } else if n >= -1022 {
        f64::from_bits(((n + 1023) as u64) << 52)
    } else if n >= -1074 {
        f64::from_bits(1u64 << (n + 1074))
    } else {
        0.0
    }
}

/// `x * 2^n` with a single rounding.
pub(crate) fn scale2(x: f64, n: i64) -> f64 {
    libm::scalbn(x, n.clamp(-4000, 4000) as i32)
}
