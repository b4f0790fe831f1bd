//! Text notation for quantization targets.
//!
//! ```text
//! fp16 | bf16 | e4m3 | ...     built-in floating-point formats
//! eXmY                          X exponent bits, Y stored fraction bits
//! qM.F | uqM.F                  signed / unsigned fixed point
//! intN[:sym|:asym][:axis=K]     integer quantization
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fixedpoint::FixedFormat;
use crate::formats::FloatFormat;
use crate::intquant::IntQuantConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantSpec {
    Float(FloatFormat),
    Fixed(FixedFormat),
    Int(IntQuantConfig),
}

fn parse_int(s: &str) -> Result<IntQuantConfig> {
    let err = |reason: String| Error::Parse {
        input: s.to_string(),
        reason,
    };
    let mut parts = s.split(':');
    let head = parts.next().unwrap_or_default();
    let bits: u32 = head
        .strip_prefix("int")
        .and_then(|b| b.parse().ok())
        .ok_or_else(|| err("expected intN".into()))?;
    let mut cfg = IntQuantConfig::new(bits);
    for opt in parts {
        match opt {
            "sym" => cfg.symmetric = true,
            "asym" => cfg.symmetric = false,
            _ => {
                let axis = opt
                    .strip_prefix("axis=")
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| err(format!("unknown option `{opt}`; use sym, asym or axis=K")))?;
                cfg.axis = Some(axis);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl FromStr for QuantSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower.starts_with("int") {
            return parse_int(&lower).map(QuantSpec::Int);
        }
        let fixed = lower
            .strip_prefix('u')
            .unwrap_or(&lower)
            .strip_prefix('q')
            .is_some_and(|r| r.starts_with(|c: char| c.is_ascii_digit()));
        if fixed {
            return lower.parse().map(QuantSpec::Fixed);
        }
        lower.parse().map(QuantSpec::Float).map_err(|_| Error::UnknownFormat {
            name: s.to_string(),
            valid: format!(
                "{}, eXmY, qM.F, uqM.F or intN[:sym|:asym][:axis=K]",
                crate::formats::BUILTIN_NAMES.join(", ")
            ),
        })
    }
}

impl fmt::Display for QuantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantSpec::Float(fmt) => write!(f, "{fmt}"),
            QuantSpec::Fixed(fmt) => write!(f, "{fmt}"),
            QuantSpec::Int(cfg) => {
                write!(f, "int{}:{}", cfg.bits, if cfg.symmetric { "sym" } else { "asym" })?;
                match cfg.axis {
                    Some(a) => write!(f, ":axis={a}"),
                    None => Ok(()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_kind() {
        assert_eq!("fp16".parse::<QuantSpec>().unwrap(), QuantSpec::Float(FloatFormat::FP16));
        assert_eq!("E8M23".parse::<QuantSpec>().unwrap(), QuantSpec::Float(FloatFormat::FP32));
        assert_eq!(
            "q4.4".parse::<QuantSpec>().unwrap(),
            QuantSpec::Fixed(FixedFormat::new(4, 4).unwrap())
        );
        assert_eq!(
            "uq0.8".parse::<QuantSpec>().unwrap(),
            QuantSpec::Fixed(FixedFormat::unsigned(0, 8).unwrap())
        );
        assert_eq!(
            "int8:sym".parse::<QuantSpec>().unwrap(),
            QuantSpec::Int(IntQuantConfig::new(8).symmetric(true))
        );
        assert_eq!(
            "int4:axis=1".parse::<QuantSpec>().unwrap(),
            QuantSpec::Int(IntQuantConfig::new(4).per_channel(1))
        );
    }

    #[test]
    fn display_round_trips() {
        for s in ["e5m10", "q8.8", "uq2.6", "int8:sym", "int4:asym:axis=2"] {
            let spec: QuantSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<QuantSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "fp17", "int", "int1", "int8:foo", "q8", "e5", "quux"] {
            assert!(s.parse::<QuantSpec>().is_err(), "{s}");
        }
    }
}
