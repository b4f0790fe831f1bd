//! Enumeration oracle for small formats, independent of the rounding engine.

#![allow(dead_code)]

use chopkit::{FloatFormat, RoundingMode};

/// Nonnegative finite values of a format, ascending, with the parity of
/// each value's last stored bit.
pub struct Grid {
    pub values: Vec<f64>,
    odd: Vec<bool>,
    beyond: f64,
}

impl Grid {
    pub fn new(f: &FloatFormat) -> Grid {
        let s = f.sig_bits() as i32;
        let n = 1i64 << s;
        let mut values = vec![0.0];
        let mut odd = vec![false];
        for m in 1..n {
            values.push(m as f64 * 2f64.powi(f.emin() as i32 - s));
            odd.push(m % 2 == 1);
        }
        for e in f.emin()..=f.emax() {
            for m in 0..n {
                values.push((n + m) as f64 * 2f64.powi(e as i32 - s));
                odd.push(m % 2 == 1);
            }
        }
        Grid {
            values,
            odd,
            beyond: 2f64.powi(f.emax() as i32 + 1),
        }
    }

    /// `(lo, hi, lo_odd)` with `lo <= a < hi`; `hi` may be the overflow point.
    pub fn bracket(&self, a: f64) -> (f64, f64, bool) {
        let i = self.values.partition_point(|&v| v <= a);
        let hi = self.values.get(i).copied().unwrap_or(self.beyond);
        (self.values[i - 1], hi, self.odd[i - 1])
    }

    pub fn round(&self, x: f64, mode: RoundingMode) -> f64 {
        if !x.is_finite() {
            return x;
        }
        let neg = x.is_sign_negative();
        let a = x.abs();
        let (lo, hi, lo_odd) = self.bracket(a);
        let mag = if lo == a {
            a
        } else {
            let (dl, dh) = (a - lo, hi - a);
            let up = match mode {
                RoundingMode::NearestEven => dh < dl || (dh == dl && lo_odd),
                RoundingMode::NearestTiesToZero => dh < dl,
                RoundingMode::NearestTiesAway => dh <= dl,
                RoundingMode::TowardZero => false,
                RoundingMode::TowardPositive => !neg,
                RoundingMode::TowardNegative => neg,
                RoundingMode::TowardOdd => !lo_odd,
                m => panic!("no oracle for stochastic mode {m}"),
            };
            match (up, hi == self.beyond) {
                (false, _) => lo,
                (true, true) => f64::INFINITY,
                (true, false) => hi,
            }
        };
        if neg {
            -mag
        } else {
            mag
        }
    }

    /// `y` is `x` itself or one of its two neighbours.
    pub fn faithful(&self, x: f64, y: f64) -> bool {
        let (lo, hi, _) = self.bracket(x.abs());
        let b = y.abs();
        (y == 0.0 || y.is_sign_negative() == x.is_sign_negative())
            && (b == lo || (lo != x.abs() && (b == hi || (hi == self.beyond && b.is_infinite()))))
    }
}

pub fn mirrored(mode: RoundingMode) -> RoundingMode {
    match mode {
        RoundingMode::TowardPositive => RoundingMode::TowardNegative,
        RoundingMode::TowardNegative => RoundingMode::TowardPositive,
        m => m,
    }
}
