//! Rounding by enumeration: list every nonnegative value of a small format
//! and pick neighbours by search. Shares no code with the rounding engine.

use chopkit::{FloatFormat, RoundingMode};

/// All nonnegative finite values of an enumerable format, ascending.
#[derive(Debug, Clone)]
pub struct Grid {
    values: Vec<f64>,
    odd: Vec<bool>,
    x_max: f64,
    /// `2^(emax+1)`, the virtual grid point past `x_max` that stands for
    /// overflow.
    beyond: f64,
}

/// Largest exponent range times significand count a grid is built for.
pub const MAX_GRID: usize = 1 << 22;

impl Grid {
    /// Returns `None` when the format has too many values to list.
    pub fn new(fmt: &FloatFormat, subnormal: bool) -> Option<Grid> {
        let s = fmt.sig_bits() as i32;
        let (emin, emax) = (fmt.emin() as i32, fmt.emax() as i32);
        let per_binade = 1usize.checked_shl(s as u32)?;
        if per_binade.checked_mul((emax - emin + 2) as usize)? > MAX_GRID {
            return None;
        }
        let mut values = vec![0.0];
        let mut odd = vec![false];
        if subnormal {
            for m in 1..per_binade {
                values.push(m as f64 * 2f64.powi(emin - s));
                odd.push(m % 2 == 1);
            }
        }
        for e in emin..=emax {
            for m in 0..per_binade {
                values.push((1.0 + m as f64 / per_binade as f64) * 2f64.powi(e));
                // Without subnormals the gap (0, x_min) has spacing x_min,
                // so x_min is the odd point one step above zero.
                odd.push(if !subnormal && e == emin && m == 0 { true } else { m % 2 == 1 });
            }
        }
        let x_max = *values.last()?;
        Some(Grid {
            values,
            odd,
            x_max,
            beyond: 2f64.powi(emax + 1),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, a: f64) -> bool {
        self.values.binary_search_by(|v| v.total_cmp(&a)).is_ok()
    }

    /// Neighbours `lo <= a < hi` of a nonnegative finite magnitude with the
    /// parity of `lo`. `hi` is `beyond` past `x_max`.
    pub fn neighbours(&self, a: f64) -> (f64, f64, bool) {
        if a >= self.x_max {
            return (self.x_max, self.beyond, true);
        }
        let i = self.values.partition_point(|&v| v <= a) - 1;
        (self.values[i], self.values[i + 1], self.odd[i])
    }

    /// Deterministic rounding of `x`; stochastic modes panic.
    pub fn round(&self, x: f64, mode: RoundingMode) -> f64 {
        if !x.is_finite() {
            return x;
        }
        let neg = x.is_sign_negative();
        let a = x.abs();
        let mag = if self.contains(a) {
            a
        } else {
            let (lo, hi, lo_odd) = self.neighbours(a);
            let (dlo, dhi) = (a - lo, hi - a);
            let up = match mode {
                RoundingMode::NearestEven => dhi < dlo || (dhi == dlo && lo_odd),
                RoundingMode::NearestTiesToZero => dhi < dlo,
                RoundingMode::NearestTiesAway => dhi <= dlo,
                RoundingMode::TowardZero => false,
                RoundingMode::TowardPositive => !neg,
                RoundingMode::TowardNegative => neg,
                RoundingMode::TowardOdd => !lo_odd,
                m => panic!("the grid oracle has no stochastic mode {m}"),
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

    /// Whether `y` is one of the two neighbours of `x` (infinity standing in
    /// for the grid point past `x_max`).
    pub fn is_faithful(&self, x: f64, y: f64) -> bool {
        if !x.is_finite() {
            return x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan());
        }
        if y.is_sign_negative() != x.is_sign_negative() && y != 0.0 {
            return false;
        }
        let (a, b) = (x.abs(), y.abs());
        if self.contains(a) {
            return a == b;
        }
        let (lo, hi, _) = self.neighbours(a);
        b == lo || b == hi || (hi == self.beyond && b == f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid() {
        let g = Grid::new(&FloatFormat::new(3, 2).unwrap(), true).unwrap();
        // zero, 3 subnormals, 6 binades of 4
        assert_eq!(g.values().len(), 28);
        assert_eq!(*g.values().last().unwrap(), 14.0);
        assert_eq!(g.values()[1], 0.0625);
        let flush = Grid::new(&FloatFormat::new(3, 2).unwrap(), false).unwrap();
        assert_eq!(flush.values().len(), 25);
    }

    #[test]
    fn fp16_examples() {
        let g = Grid::new(&FloatFormat::FP16, true).unwrap();
        assert_eq!(g.round(std::f64::consts::PI, RoundingMode::NearestEven), 3.140625);
        assert_eq!(g.round(65519.999, RoundingMode::TowardZero), 65504.0);
        assert_eq!(g.round(65520.0, RoundingMode::NearestEven), f64::INFINITY);
        assert_eq!(g.round(65520.0, RoundingMode::NearestTiesToZero), 65504.0);
        assert_eq!(g.round(-1e6, RoundingMode::TowardPositive), -65504.0);
        assert_eq!(g.round(2.5e-5, RoundingMode::NearestEven), 419.0 * 2f64.powi(-24));
        assert!(Grid::new(&FloatFormat::FP32, true).is_none());
    }
}
