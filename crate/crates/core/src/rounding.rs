//! Rounding modes and rounding of real numbers to integers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{Draw, DRAW_HALF};

/// The nine rounding modes, numbered as `rmode` 1 through 9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum RoundingMode {
    /// Round to nearest, ties to even.
    #[default]
    NearestEven = 1,
    /// Round toward +infinity.
    TowardPositive = 2,
    /// Round toward -infinity.
    TowardNegative = 3,
    /// Round toward zero.
    TowardZero = 4,
    /// Round up with probability equal to the discarded fraction.
    StochasticProportional = 5,
    /// Round up or down with probability 1/2 whenever inexact.
    StochasticUniform = 6,
    /// Round to nearest, ties toward zero.
    NearestTiesToZero = 7,
    /// Round to nearest, ties away from zero.
    NearestTiesAway = 8,
    /// Round to odd: inexact results get their last retained bit set.
    TowardOdd = 9,
}

impl RoundingMode {
    pub const ALL: [RoundingMode; 9] = [
        RoundingMode::NearestEven,
        RoundingMode::TowardPositive,
        RoundingMode::TowardNegative,
        RoundingMode::TowardZero,
        RoundingMode::StochasticProportional,
        RoundingMode::StochasticUniform,
        RoundingMode::NearestTiesToZero,
        RoundingMode::NearestTiesAway,
        RoundingMode::TowardOdd,
    ];

    pub const DETERMINISTIC: [RoundingMode; 7] = [
        RoundingMode::NearestEven,
        RoundingMode::TowardPositive,
        RoundingMode::TowardNegative,
        RoundingMode::TowardZero,
        RoundingMode::NearestTiesToZero,
        RoundingMode::NearestTiesAway,
        RoundingMode::TowardOdd,
    ];

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get((code as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("rounding mode must be 1-9, got {code}")))
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            RoundingMode::StochasticProportional | RoundingMode::StochasticUniform
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            RoundingMode::NearestEven => "nearest, ties to even",
            RoundingMode::TowardPositive => "toward +inf",
            RoundingMode::TowardNegative => "toward -inf",
            RoundingMode::TowardZero => "toward zero",
            RoundingMode::StochasticProportional => "stochastic (proportional)",
            RoundingMode::StochasticUniform => "stochastic (uniform)",
            RoundingMode::NearestTiesToZero => "nearest, ties to zero",
            RoundingMode::NearestTiesAway => "nearest, ties away",
            RoundingMode::TowardOdd => "toward odd",
        }
    }
}

impl fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.code(), self.name())
    }
}

impl FromStr for RoundingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let code: u8 = s.trim().parse().map_err(|_| Error::Parse {
            input: s.to_string(),
            reason: "rounding mode must be an integer 1-9".into(),
        })?;
        Self::from_code(code)
    }
}

/// Where the discarded part of a magnitude lies relative to half a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Discarded {
    Exact,
    BelowHalf,
    Half,
    AboveHalf,
}

/// Decides whether a truncated magnitude is bumped to the next grid point.
///
/// `lower_odd` is the parity of the truncated magnitude in grid units;
/// `proportional_up` is consulted only for stochastic-proportional rounding.
#[inline]
pub(crate) fn increments(
    mode: RoundingMode,
    negative: bool,
    lower_odd: bool,
    discarded: Discarded,
    draw: Draw,
    proportional_up: impl FnOnce(Draw) -> bool,
) -> bool {
    use Discarded::*;
    if discarded == Exact {
        return false;
    }
    match mode {
        RoundingMode::NearestEven => discarded == AboveHalf || (discarded == Half && lower_odd),
        RoundingMode::TowardPositive => !negative,
        RoundingMode::TowardNegative => negative,
        RoundingMode::TowardZero => false,
        RoundingMode::StochasticProportional => proportional_up(draw),
        RoundingMode::StochasticUniform => draw.0 < DRAW_HALF,
        RoundingMode::NearestTiesToZero => discarded == AboveHalf,
        RoundingMode::NearestTiesAway => discarded != BelowHalf,
        RoundingMode::TowardOdd => !lower_odd,
    }
}

/// Rounds `z` to an integral binary64 under `mode`.
///
/// Magnitudes of `2^52` and above are already integral and returned as is.
pub(crate) fn round_integral(z: f64, mode: RoundingMode, draw: Draw) -> f64 {
    if !z.is_finite() {
        return z;
    }
    let negative = z.is_sign_negative();
    let a = z.abs();
    let floor = a.floor();
    let frac = a - floor;
    let discarded = if frac == 0.0 {
        Discarded::Exact
    } else if frac < 0.5 {
        Discarded::BelowHalf
    } else if frac == 0.5 {
        Discarded::Half
    } else {
        Discarded::AboveHalf
    };
    let lower_odd = floor % 2.0 == 1.0;
    // frac < 1 carries at most 53 significant bits, so frac * 2^53 is exact.
    let up = increments(mode, negative, lower_odd, discarded, draw, |d| {
        (d.0 as f64) < frac * crate::rng::DRAW_SCALE
    });
    let magnitude = if up { floor + 1.0 } else { floor };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Rounds `z` to an integer under `mode`.
///
/// `draw` is a uniform sample from `[0, 1)` used by the two stochastic modes
/// and ignored otherwise. Results outside the `i64` range saturate.
///
/// # Panics
///
/// Panics if `mode` is stochastic and `draw` is `None`, or if `z` is NaN.
pub fn round_integer(z: f64, mode: RoundingMode, draw: Option<f64>) -> i64 {
    assert!(!z.is_nan(), "round_integer: NaN has no integer value");
    let draw = match draw {
        Some(u) => Draw::from_unit(u),
        None => {
            assert!(
                !mode.is_stochastic(),
                "round_integer: stochastic mode {mode} needs a uniform draw"
            );
            Draw::default()
        }
    };
    round_integral(z, mode, draw) as i64
}
