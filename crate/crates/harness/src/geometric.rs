//! Sequential summation of `s * r^k` with and without gradual underflow.

use std::fmt::Write;

use chopkit::{ChopConfig, FloatFormat, MathEmu, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SumTrace {
    pub n: usize,
    pub r: f64,
    pub s: f64,
    /// Partial sums with subnormals enabled.
    pub subnormal_on: Vec<f64>,
    /// Partial sums with subnormals flushed.
    pub subnormal_off: Vec<f64>,
    /// Partial sums in binary64.
    pub exact: Vec<f64>,
}

impl SumTrace {
    /// `s (1 - r^n) / (1 - r)`.
    pub fn closed_form(&self) -> f64 {
        if self.r == 1.0 {
            self.s * self.n as f64
        } else {
            self.s * (1.0 - self.r.powi(self.n as i32)) / (1.0 - self.r)
        }
    }

    /// Rows `step,subnormal_on,subnormal_off,exact`, steps counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,subnormal_on,subnormal_off,exact\n");
        for k in 0..self.n {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                k + 1,
                self.subnormal_on[k],
                self.subnormal_off[k],
                self.exact[k]
            );
        }
        out
    }

    /// Number of trailing steps over which the flushed trace did not move.
    pub fn flushed_stagnation(&self) -> usize {
        let last = match self.subnormal_off.last() {
            Some(&v) => v,
            None => return 0,
        };
        self.subnormal_off.iter().rev().take_while(|&&v| v == last).count()
    }
}

fn emulated_trace(fmt: FloatFormat, subnormal: bool, terms: &[f64]) -> Result<Vec<f64>> {
    let emu = MathEmu::new(fmt, ChopConfig::default().with_subnormal(subnormal))?;
    let terms = emu.round(terms);
    let mut acc = 0.0;
    Ok(terms
        .iter()
        .map(|&t| {
            acc = emu.binary_scalar("add", acc, t).expect("add has no domain restriction");
            acc
        })
        .collect())
}

/// Sums `n` terms `s * r^k`, rounding each term and each addition to `fmt`
/// (round to nearest even), once with and once without subnormals, next to
/// the binary64 reference.
pub fn geometric_sum_demo(fmt: FloatFormat, n: usize, r: f64, s: f64) -> Result<SumTrace> {
    let terms: Vec<f64> = (0..n).map(|k| s * r.powi(k as i32)).collect();
    let mut acc = 0.0;
    let exact = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    Ok(SumTrace {
        n,
        r,
        s,
        subnormal_on: emulated_trace(fmt, true, &terms)?,
        subnormal_off: emulated_trace(fmt, false, &terms)?,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters() {
        let t = geometric_sum_demo(FloatFormat::FP16, 1000, 0.99, 2.5e-6).unwrap();
        assert_eq!(t.subnormal_on.len(), 1000);
        assert!((t.closed_form() - 2.499892071881471e-4).abs() < 1e-15);
        assert!((t.exact[999] - t.closed_form()).abs() < 1e-15);
        assert_eq!(t.subnormal_on[999], 0.0002429485321044922);
        assert!(t.subnormal_off[999] < t.subnormal_on[999]);
        for (on, off) in t.subnormal_on.iter().zip(&t.subnormal_off) {
            assert!(on >= off);
        }
        assert!(t.flushed_stagnation() >= 100);
        assert_eq!(t.to_csv().lines().count(), 1001);
    }

    #[test]
    fn single_term() {
        let t = geometric_sum_demo(FloatFormat::FP16, 5, 0.0, 0.1).unwrap();
        let c = chopkit::Chop::nearest(FloatFormat::FP16).chop(0.1);
        assert!(t.subnormal_on.iter().all(|&v| v == c));
        assert!(t.subnormal_off.iter().all(|&v| v == c));
    }
}
