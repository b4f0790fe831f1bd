//! Uniform integer quantization with per-tensor or per-channel parameters.
//!
//! A real `r` maps to `q = clamp(round(r / scale) + z, qmin, qmax)` and back to
//! `(q - z) * scale`. Symmetric quantization fixes `z = 0` and scales the
//! largest magnitude onto `2^(n-1) - 1`; asymmetric quantization spreads
//! `[min(x, 0), max(x, 0)]` over all `2^n` codes.

use ndarray::{ArrayD, ArrayViewD, Axis, Dimension};

use crate::error::{Error, Result};
use crate::rng::{DrawStream, ElementDraws};
use crate::rounding::{round_integral, RoundingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntQuantConfig {
    pub bits: u32,
    pub symmetric: bool,
    /// Channel axis; `None` means one scale for the whole tensor.
    pub axis: Option<usize>,
}

impl Default for IntQuantConfig {
    fn default() -> Self {
        IntQuantConfig {
            bits: 8,
            symmetric: false,
            axis: None,
        }
    }
}

impl IntQuantConfig {
    pub fn new(bits: u32) -> Self {
        IntQuantConfig {
            bits,
            ..Default::default()
        }
    }

    pub fn symmetric(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    pub fn per_channel(mut self, axis: usize) -> Self {
        self.axis = Some(axis);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=32).contains(&self.bits) {
            return Err(Error::InvalidConfig(format!(
                "integer quantization needs 2-32 bits, got {}",
                self.bits
            )));
        }
        Ok(())
    }

    pub fn qmin(&self) -> i64 {
        -(1i64 << (self.bits - 1))
    }

    pub fn qmax(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }
}

/// Calibrated scales and zero points, one pair per channel (or one in total).
#[derive(Debug, Clone, PartialEq)]
pub struct IntQuantParams {
    pub config: IntQuantConfig,
    pub scale: Vec<f64>,
    pub zero_point: Vec<i64>,
}

impl IntQuantParams {
    /// Per-tensor parameters supplied by the caller.
    pub fn from_scale(config: IntQuantConfig, scale: f64, zero_point: i64) -> Result<Self> {
        config.validate()?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
        }
        if zero_point < config.qmin() || zero_point > config.qmax() || (config.symmetric && zero_point != 0) {
            return Err(Error::InvalidConfig(format!("zero point {zero_point} out of range")));
        }
        Ok(IntQuantParams {
            config: IntQuantConfig { axis: None, ..config },
            scale: vec![scale],
            zero_point: vec![zero_point],
        })
    }

    pub fn qmin(&self) -> i64 {
        self.config.qmin()
    }

    pub fn qmax(&self) -> i64 {
        self.config.qmax()
    }

    fn channel_of(&self, idx: &[usize]) -> usize {
        self.config.axis.map_or(0, |a| idx[a])
    }

    fn check_shape(&self, shape: &[usize]) -> Result<()> {
        match self.config.axis {
            None => Ok(()),
            Some(a) if a < shape.len() && shape[a] == self.scale.len() => Ok(()),
            Some(a) => Err(Error::Shape(format!(
                "parameters hold {} channels along axis {a}, tensor shape is {shape:?}",
                self.scale.len()
            ))),
        }
    }

    pub fn quantize_value(&self, x: f64, channel: usize, mode: RoundingMode, draws: &ElementDraws) -> Result<i64> {
        if x.is_nan() {
            return Err(Error::NonFinite(x));
        }
        let r = round_integral(x / self.scale[channel], mode, draws.round) + self.zero_point[channel] as f64;
        Ok(r.clamp(self.qmin() as f64, self.qmax() as f64) as i64)
    }

    pub fn dequantize_value(&self, q: i64, channel: usize) -> f64 {
        (q - self.zero_point[channel]) as f64 * self.scale[channel]
    }

    /// Quantizes every element. Stochastic draws are keyed on the element's
    /// row-major index in `(seed, 0)`.
    pub fn quantize(&self, xs: ArrayViewD<'_, f64>, mode: RoundingMode, seed: u64) -> Result<ArrayD<i64>> {
        self.check_shape(xs.shape())?;
        let mut stream = DrawStream::new(seed, 0);
        let mut out = ArrayD::zeros(xs.raw_dim());
        for ((idx, &x), q) in xs.indexed_iter().zip(out.iter_mut()) {
            let draws = if mode.is_stochastic() {
                stream.next_element()
            } else {
                ElementDraws::default()
            };
            *q = self.quantize_value(x, self.channel_of(idx.as_array_view().as_slice().unwrap()), mode, &draws)?;
        }
        Ok(out)
    }

    pub fn dequantize(&self, qs: ArrayViewD<'_, i64>) -> Result<ArrayD<f64>> {
        self.check_shape(qs.shape())?;
        let mut out = ArrayD::zeros(qs.raw_dim());
        for ((idx, &q), r) in qs.indexed_iter().zip(out.iter_mut()) {
            *r = self.dequantize_value(q, self.channel_of(idx.as_array_view().as_slice().unwrap()));
        }
        Ok(out)
    }

    /// Quantize then dequantize.
    pub fn fake_quantize(&self, xs: ArrayViewD<'_, f64>, mode: RoundingMode, seed: u64) -> Result<ArrayD<f64>> {
        self.dequantize(self.quantize(xs, mode, seed)?.view())
    }
}

/// Scale and zero point for one channel.
fn channel_params<'a>(xs: impl Iterator<Item = &'a f64>, cfg: &IntQuantConfig) -> Result<(f64, i64)> {
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for &x in xs {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo == hi {
        return Ok((1.0, 0));
    }
    if cfg.symmetric {
        let omega = hi.max(-lo);
        return Ok((omega / cfg.qmax() as f64, 0));
    }
    let levels = ((1u64 << cfg.bits) - 1) as f64;
    let scale = (hi - lo) / levels;
    let shift = round_integral(-lo / scale, RoundingMode::NearestEven, Default::default()) as i64;
    Ok((scale, (cfg.qmin() + shift).clamp(cfg.qmin(), cfg.qmax())))
}

/// Derives scales and zero points from data.
pub fn calibrate(xs: ArrayViewD<'_, f64>, cfg: IntQuantConfig) -> Result<IntQuantParams> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(Error::EmptyInput { function: "calibrate" });
    }
    let pairs = match cfg.axis {
        None => vec![channel_params(xs.iter(), &cfg)?],
        Some(a) if a < xs.ndim() => xs
            .axis_iter(Axis(a))
            .map(|slice| channel_params(slice.iter(), &cfg))
            .collect::<Result<Vec<_>>>()?,
        Some(a) => {
            return Err(Error::Shape(format!(
                "axis {a} out of range for a tensor of rank {}",
                xs.ndim()
            )))
        }
    };
    let (scale, zero_point) = pairs.into_iter().unzip();
    Ok(IntQuantParams {
        config: cfg,
        scale,
        zero_point,
    })
}

/// Integer quantization bound to a configuration, rounding mode and seed.
/// Each call recalibrates on its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntQuantizer {
    pub config: IntQuantConfig,
    pub mode: RoundingMode,
    pub seed: u64,
}

impl IntQuantizer {
    pub fn new(config: IntQuantConfig) -> Self {
        IntQuantizer {
            config,
            mode: RoundingMode::NearestEven,
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: RoundingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn quantize(&self, xs: ArrayViewD<'_, f64>) -> Result<(ArrayD<i64>, IntQuantParams)> {
        let params = calibrate(xs.view(), self.config)?;
        Ok((params.quantize(xs, self.mode, self.seed)?, params))
    }

    pub fn fake_quantize(&self, xs: ArrayViewD<'_, f64>) -> Result<ArrayD<f64>> {
        let (q, params) = self.quantize(xs)?;
        params.dequantize(q.view())
    }
}
