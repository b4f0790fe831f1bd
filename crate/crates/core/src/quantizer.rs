//! One entry point for every kind of quantization over flat buffers.

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};
use crate::fixedpoint::FixedQuantizer;
use crate::fpchop::{Chop, ChopConfig, Storage};
use crate::intquant::IntQuantizer;
use crate::notation::QuantSpec;
use crate::rounding::RoundingMode;

/// Settings shared by all quantizer kinds. `subnormal`, `explim` and `flip`
/// apply to floating-point targets only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantOptions {
    pub mode: RoundingMode,
    pub subnormal: bool,
    pub explim: bool,
    /// Bit-flip probability, if soft errors are injected.
    pub flip: Option<f64>,
    pub seed: u64,
    pub chunk_size: usize,
}

impl Default for QuantOptions {
    fn default() -> Self {
        let c = ChopConfig::default();
        QuantOptions {
            mode: c.mode,
            subnormal: c.subnormal,
            explim: c.explim,
            flip: None,
            seed: c.seed,
            chunk_size: c.chunk_size,
        }
    }
}

/// A configured quantizer, applied elementwise (float, fixed) or per tensor
/// or channel (int).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantizer {
    Float(Chop),
    Fixed(FixedQuantizer),
    Int(IntQuantizer),
}

impl Quantizer {
    pub fn new(spec: QuantSpec, opts: QuantOptions) -> Result<Self> {
        let float_only = |what: &str| {
            Err(Error::InvalidConfig(format!(
                "{what} applies to floating-point formats only, not {spec}"
            )))
        };
        if !matches!(spec, QuantSpec::Float(_)) {
            if opts.flip.is_some() {
                return float_only("bit flipping");
            }
            if !opts.subnormal {
                return float_only("disabling subnormals");
            }
            if !opts.explim {
                return float_only("disabling the exponent limit");
            }
        }
        Ok(match spec {
            QuantSpec::Float(fmt) => {
                let mut cfg = ChopConfig::default()
                    .with_mode(opts.mode)
                    .with_subnormal(opts.subnormal)
                    .with_explim(opts.explim)
                    .with_seed(opts.seed)
                    .with_chunk_size(opts.chunk_size);
                if let Some(p) = opts.flip {
                    cfg = cfg.with_flip(p);
                }
                Quantizer::Float(Chop::new(fmt, cfg)?)
            }
            QuantSpec::Fixed(fmt) => Quantizer::Fixed(FixedQuantizer::new(fmt, opts.mode).with_seed(opts.seed)),
            QuantSpec::Int(cfg) => {
                cfg.validate()?;
                Quantizer::Int(IntQuantizer::new(cfg).with_mode(opts.mode).with_seed(opts.seed))
            }
        })
    }

    /// Quantizes a row-major buffer of the given shape into a new buffer.
    /// `threads` pins floating-point rounding to a dedicated pool.
    pub fn apply<T: Storage>(&self, data: &[T], shape: &[usize], threads: Option<usize>) -> Result<Vec<T>> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {count} elements, buffer has {}",
                data.len()
            )));
        }
        match self {
            Quantizer::Float(chop) => match threads {
                Some(n) => chop.chop_slice_with_threads(data, n),
                None => Ok(chop.chop_slice(data)),
            },
            Quantizer::Fixed(q) => {
                let wide: Vec<f64> = data.iter().map(|x| x.to_f64()).collect();
                Ok(q.chop_slice(&wide)?.into_iter().map(T::from_f64).collect())
            }
            Quantizer::Int(q) => {
                if data.is_empty() {
                    return Ok(Vec::new());
                }
                let wide = ArrayD::from_shape_vec(IxDyn(shape), data.iter().map(|x| x.to_f64()).collect())
                    .map_err(|e| Error::Shape(e.to_string()))?;
                let out = q.fake_quantize(wide.view())?;
                Ok(out.iter().map(|&x| T::from_f64(x)).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(spec: &str, opts: QuantOptions) -> Quantizer {
        Quantizer::new(spec.parse().unwrap(), opts).unwrap()
    }

    #[test]
    fn float_matches_chop() {
        let xs = [3.14159265, 1.0, 1e-7, -65520.0];
        let out = q("fp16", QuantOptions::default()).apply(&xs, &[4], None).unwrap();
        assert_eq!(out, Chop::nearest(crate::FloatFormat::FP16).chop_slice(&xs));
        assert_eq!(out[0], 3.140625);
        let out32 = q("fp16", QuantOptions::default()).apply(&[3.14159265f32], &[1], Some(2)).unwrap();
        assert_eq!(out32, vec![3.140625f32]);
    }

    #[test]
    fn fixed_and_int() {
        let out = q("q4.4", QuantOptions::default()).apply(&[0.3, 100.0], &[2], None).unwrap();
        assert_eq!(out, vec![0.3125, 7.9375]);
        let out = q("int8:sym", QuantOptions::default()).apply(&[-1.0, 0.0, 1.0], &[3], None).unwrap();
        assert_eq!(out, vec![-1.0, 0.0, 1.0]);
        let per = q("int4:axis=0", QuantOptions::default()).apply(&[0.0, 1.0, 0.0, 10.0], &[2, 2], None).unwrap();
        assert_eq!(per[1], 1.0);
        assert_eq!(per[3], 10.0);
    }

    #[test]
    fn rejects_float_only_options() {
        let opts = QuantOptions {
            flip: Some(0.1),
            ..Default::default()
        };
        assert!(Quantizer::new("q8.8".parse().unwrap(), opts).is_err());
        assert!(Quantizer::new("int8".parse().unwrap(), opts).is_err());
        assert!(Quantizer::new("fp16".parse().unwrap(), opts).is_ok());
        assert!(q("fp16", QuantOptions::default()).apply(&[1.0], &[2], None).is_err());
    }
}
