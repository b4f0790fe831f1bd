//! Every finite value of a small format must survive a chop unchanged.

use chopkit::{Chop, ChopConfig, Error, FloatFormat, Result, RoundingMode};

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub bits: u64,
    pub mode: RoundingMode,
    pub input: f64,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    pub format: FloatFormat,
    /// Finite bit patterns examined.
    pub finite: u64,
    pub modes: Vec<RoundingMode>,
    pub mismatches: Vec<Mismatch>,
}

impl RoundtripReport {
    pub fn summary(&self) -> String {
        format!("{} mismatches / {}", self.mismatches.len(), self.finite)
    }
}

/// Decodes every bit pattern of `fmt` (at most 16 bits wide) and checks that
/// chopping each finite value under every deterministic mode returns the
/// same binary64 bits.
pub fn exhaustive_roundtrip(fmt: FloatFormat) -> Result<RoundtripReport> {
    if fmt.total_bits() > 16 {
        return Err(Error::InvalidConfig(format!(
            "{fmt} has {} bits; exhaustive checks stop at 16",
            fmt.total_bits()
        )));
    }
    let chops = RoundingMode::DETERMINISTIC
        .iter()
        .map(|&m| Chop::new(fmt, ChopConfig::default().with_mode(m)))
        .collect::<Result<Vec<_>>>()?;
    let mut finite = 0;
    let mut mismatches = Vec::new();
    for bits in 0..1u64 << fmt.total_bits() {
        let x = fmt.decode(bits);
        if !x.is_finite() {
            continue;
        }
        finite += 1;
        for c in &chops {
            let y = c.chop(x);
            if y.to_bits() != x.to_bits() {
                mismatches.push(Mismatch {
                    bits,
                    mode: c.config().mode,
                    input: x,
                    output: y,
                });
            }
        }
    }
    Ok(RoundtripReport {
        format: fmt,
        finite,
        modes: RoundingMode::DETERMINISTIC.to_vec(),
        mismatches,
    })
}
