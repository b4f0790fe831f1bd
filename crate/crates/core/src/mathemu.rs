//! Elementary functions and reductions evaluated under a target format.
//!
//! Inputs are rounded to the target format, the function runs in binary64,
//! and the result is rounded again: `chop(f(chop(x)))`. Reductions and scans
//! round their inputs and their outputs only; the accumulation itself runs
//! entirely in binary64 in sequential order.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, ArrayD, ArrayView2, ArrayViewD, Axis};

use crate::error::{Error, Result};
use crate::formats::FloatFormat;
use crate::fpchop::{Chop, ChopConfig};

type UnaryFn = fn(f64) -> f64;
type BinaryFn = fn(f64, f64) -> f64;
type Predicate = fn(f64) -> bool;

/// How a registered function consumes its arguments.
#[derive(Clone, Copy)]
pub enum Kind {
    /// Elementwise; the predicate accepts inputs inside the domain.
    Unary { eval: UnaryFn, domain: Option<Predicate> },
    Binary { eval: BinaryFn, domain: BinaryDomain },
    /// Collapses an array (or one axis of it) to a value.
    Reduction,
    /// Produces one output per input position.
    Scan,
    /// Per-function contract: frexp, modf, clip, round with decimals and the
    /// complex helpers.
    Misc,
}

/// Input restrictions of a binary function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryDomain {
    Any,
    NonzeroDivisor,
    /// Both operands must be integer-valued.
    Integers,
    /// The second operand must be integer-valued.
    IntegerExponent,
}

#[derive(Clone, Copy)]
pub struct FunctionEntry {
    pub name: &'static str,
    pub kind: Kind,
    /// Input restriction, as documented for users.
    pub domain: &'static str,
}

impl FunctionEntry {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Unary { .. } => "unary",
            Kind::Binary { .. } => "binary",
            Kind::Reduction => "reduction",
            Kind::Scan => "scan",
            Kind::Misc => "misc",
        }
    }
}

impl std::fmt::Debug for FunctionEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionEntry")
            .field("name", &self.name)
            .field("kind", &self.kind_name())
            .field("domain", &self.domain)
            .finish()
    }
}

const fn unary(name: &'static str, eval: UnaryFn, domain: &'static str) -> FunctionEntry {
    FunctionEntry {
        name,
        kind: Kind::Unary { eval, domain: None },
        domain,
    }
}

const fn restricted(name: &'static str, eval: UnaryFn, check: Predicate, domain: &'static str) -> FunctionEntry {
    FunctionEntry {
        name,
        kind: Kind::Unary {
            eval,
            domain: Some(check),
        },
        domain,
    }
}

const fn binary(name: &'static str, eval: BinaryFn, check: BinaryDomain, domain: &'static str) -> FunctionEntry {
    FunctionEntry {
        name,
        kind: Kind::Binary { eval, domain: check },
        domain,
    }
}

const fn other(name: &'static str, kind: Kind, domain: &'static str) -> FunctionEntry {
    FunctionEntry { name, kind, domain }
}

// Domain predicates are written so that NaN passes and propagates.
fn unit_closed(x: f64) -> bool {
    !(x.abs() > 1.0)
}
fn unit_open(x: f64) -> bool {
    !(x.abs() >= 1.0)
}
fn at_least_one(x: f64) -> bool {
    !(x < 1.0)
}
fn positive(x: f64) -> bool {
    !(x <= 0.0)
}
fn non_negative(x: f64) -> bool {
    !(x < 0.0)
}
fn above_minus_one(x: f64) -> bool {
    !(x <= -1.0)
}
fn nonzero(x: f64) -> bool {
    x != 0.0
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        x
    }
}

/// Remainder with the sign of the divisor.
fn floored_mod(x: f64, y: f64) -> f64 {
    let r = x % y;
    if r != 0.0 && (r < 0.0) != (y < 0.0) {
        r + y
    } else {
        r
    }
}

/// Floor division consistent with [`floored_mod`].
fn floor_divide(x: f64, y: f64) -> f64 {
    let m = floored_mod(x, y);
    let div = (x - m) / y;
    if div == 0.0 {
        return 0.0f64.copysign(x / y);
    }
    let f = div.floor();
    if div - f > 0.5 {
        f + 1.0
    } else {
        f
    }
}

fn logaddexp(x: f64, y: f64) -> f64 {
    if x == y {
        // Covers equal infinities, where x - y is NaN.
        return x + std::f64::consts::LN_2;
    }
    let hi = x.max(y);
    hi + (-(x - y).abs()).exp().ln_1p()
}

fn nan_max(x: f64, y: f64) -> f64 {
    if x.is_nan() || y.is_nan() {
        f64::NAN
    } else {
        x.max(y)
    }
}

fn nan_min(x: f64, y: f64) -> f64 {
    if x.is_nan() || y.is_nan() {
        f64::NAN
    } else {
        x.min(y)
    }
}

fn ldexp(x: f64, e: f64) -> f64 {
    libm::scalbn(x, e.clamp(i32::MIN as f64, i32::MAX as f64) as i32)
}

fn bitwise(x: f64, y: f64, op: fn(i64, i64) -> i64) -> f64 {
    op(x as i64, y as i64) as f64
}

static REGISTRY: &[FunctionEntry] = &[
    unary("sin", f64::sin, "radians"),
    unary("cos", f64::cos, "radians"),
    unary("tan", f64::tan, "radians; poles at pi/2 + k*pi"),
    restricted("arcsin", f64::asin, unit_closed, "[-1, 1]"),
    restricted("arccos", f64::acos, unit_closed, "[-1, 1]"),
    unary("arctan", f64::atan, "any"),
    unary("sinh", f64::sinh, "any"),
    unary("cosh", f64::cosh, "any"),
    unary("tanh", f64::tanh, "any"),
    unary("arcsinh", f64::asinh, "any"),
    restricted("arccosh", f64::acosh, at_least_one, ">= 1"),
    restricted("arctanh", f64::atanh, unit_open, "(-1, 1)"),
    unary("exp", f64::exp, "any"),
    unary("expm1", f64::exp_m1, "any"),
    restricted("log", f64::ln, positive, "> 0"),
    restricted("log10", f64::log10, positive, "> 0"),
    restricted("log2", f64::log2, positive, "> 0"),
    restricted("log1p", f64::ln_1p, above_minus_one, "> -1"),
    restricted("sqrt", f64::sqrt, non_negative, ">= 0"),
    unary("cbrt", f64::cbrt, "any"),
    unary("erf", libm::erf, "any"),
    unary("erfc", libm::erfc, "any"),
    unary("gamma", libm::tgamma, "any; poles at non-positive integers"),
    unary("fabs", f64::abs, "any"),
    unary("abs", f64::abs, "any"),
    unary("degrees", f64::to_degrees, "radians"),
    unary("radians", f64::to_radians, "degrees"),
    unary("floor", f64::floor, "any"),
    unary("ceil", f64::ceil, "any"),
    unary("round", f64::round_ties_even, "any"),
    unary("sign", sign, "any"),
    restricted("reciprocal", f64::recip, nonzero, "!= 0"),
    unary("square", |x| x * x, "any"),
    binary("add", |x, y| x + y, BinaryDomain::Any, "any"),
    binary("subtract", |x, y| x - y, BinaryDomain::Any, "any"),
    binary("multiply", |x, y| x * y, BinaryDomain::Any, "any"),
    binary("divide", |x, y| x / y, BinaryDomain::NonzeroDivisor, "divisor != 0"),
    binary("mod", floored_mod, BinaryDomain::NonzeroDivisor, "divisor != 0"),
    binary("floor_divide", floor_divide, BinaryDomain::NonzeroDivisor, "divisor != 0"),
    binary("power", f64::powf, BinaryDomain::Any, "any"),
    binary("hypot", f64::hypot, BinaryDomain::Any, "any"),
    binary("logaddexp", logaddexp, BinaryDomain::Any, "any"),
    binary("maximum", nan_max, BinaryDomain::Any, "any"),
    binary("minimum", nan_min, BinaryDomain::Any, "any"),
    binary("ldexp", ldexp, BinaryDomain::IntegerExponent, "integer exponent"),
    binary("bitwise_and", |x, y| bitwise(x, y, |a, b| a & b), BinaryDomain::Integers, "integers"),
    binary("bitwise_or", |x, y| bitwise(x, y, |a, b| a | b), BinaryDomain::Integers, "integers"),
    binary("bitwise_xor", |x, y| bitwise(x, y, |a, b| a ^ b), BinaryDomain::Integers, "integers"),
    other("sum", Kind::Reduction, "any"),
    other("prod", Kind::Reduction, "any"),
    other("mean", Kind::Reduction, "nonempty"),
    other("std", Kind::Reduction, "nonempty"),
    other("var", Kind::Reduction, "nonempty"),
    other("dot", Kind::Reduction, "equal lengths"),
    other("matmul", Kind::Reduction, "conforming shapes"),
    other("cumsum", Kind::Scan, "any"),
    other("cumprod", Kind::Scan, "any"),
    other("diff", Kind::Scan, "any"),
    other("frexp", Kind::Misc, "any"),
    other("modf", Kind::Misc, "any"),
    other("clip", Kind::Misc, "a_min <= a_max"),
    other("round_decimals", Kind::Misc, "any"),
    other("angle", Kind::Misc, "complex as (re, im)"),
    other("real", Kind::Misc, "complex as (re, im)"),
    other("imag", Kind::Misc, "complex as (re, im)"),
    other("conj", Kind::Misc, "complex as (re, im)"),
];

/// Every supported function.
pub fn registry() -> &'static [FunctionEntry] {
    REGISTRY
}

pub fn lookup(name: &str) -> Result<&'static FunctionEntry> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownFunction(name.to_string()))
}

fn is_integer(x: f64) -> bool {
    x.is_finite() && x.fract() == 0.0
}

fn check_binary(entry: &FunctionEntry, check: BinaryDomain, x: f64, y: f64) -> Result<()> {
    let bad = |value| Error::Domain {
        function: entry.name,
        value,
    };
    match check {
        BinaryDomain::Any => Ok(()),
        BinaryDomain::NonzeroDivisor if y == 0.0 => Err(Error::DivisionByZero { function: entry.name }),
        BinaryDomain::NonzeroDivisor => Ok(()),
        BinaryDomain::Integers if !is_integer(x) => Err(bad(x)),
        BinaryDomain::Integers | BinaryDomain::IntegerExponent if !is_integer(y) => Err(bad(y)),
        BinaryDomain::Integers | BinaryDomain::IntegerExponent => Ok(()),
    }
}

/// Evaluates registered functions under one format and configuration.
///
/// Each rounding pass draws from a fresh stream, so stochastic rounding of
/// an input and of the matching output are independent.
#[derive(Debug)]
pub struct MathEmu {
    chop: Chop,
    quiet: bool,
    next_stream: AtomicU64,
}

impl MathEmu {
    pub fn new(format: FloatFormat, config: ChopConfig) -> Result<Self> {
        Ok(MathEmu {
            chop: Chop::new(format, config)?,
            quiet: false,
            next_stream: AtomicU64::new(0),
        })
    }

    pub fn from_chop(chop: Chop) -> Self {
        MathEmu {
            chop,
            quiet: false,
            next_stream: AtomicU64::new(0),
        }
    }

    /// In quiet mode, domain violations and zero divisors evaluate with
    /// IEEE semantics (NaN or infinity) instead of returning an error.
    pub fn quiet(mut self, quiet: bool) -> Self {
        self.quiet = quiet;
        self
    }

    pub fn chopper(&self) -> &Chop {
        &self.chop
    }

    /// Rounds values to the target format.
    pub fn round(&self, xs: &[f64]) -> Vec<f64> {
        let mut v = xs.to_vec();
        self.round_in_place(&mut v);
        v
    }

    fn round_in_place(&self, xs: &mut [f64]) {
        let stream = self.next_stream.fetch_add(1, Ordering::Relaxed);
        self.chop.chop_in_place(xs, stream);
    }

    fn round_one(&self, x: f64) -> f64 {
        let mut v = [x];
        self.round_in_place(&mut v);
        v[0]
    }

    pub fn unary(&self, name: &str, xs: &[f64]) -> Result<Vec<f64>> {
        let entry = lookup(name)?;
        let Kind::Unary { eval, domain } = entry.kind else {
            return Err(Error::WrongArity {
                name: name.to_string(),
                expected: "unary",
            });
        };
        let mut v = self.round(xs);
        for x in v.iter_mut() {
            if let (Some(ok), false) = (domain, self.quiet) {
                if !ok(*x) {
                    return Err(if name == "reciprocal" {
                        Error::DivisionByZero { function: entry.name }
                    } else {
                        Error::Domain {
                            function: entry.name,
                            value: *x,
                        }
                    });
                }
            }
            *x = eval(*x);
        }
        self.round_in_place(&mut v);
        Ok(v)
    }

    pub fn unary_scalar(&self, name: &str, x: f64) -> Result<f64> {
        Ok(self.unary(name, &[x])?[0])
    }

    /// Elementwise binary function. A length-1 operand broadcasts.
    pub fn binary(&self, name: &str, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        let entry = lookup(name)?;
        let Kind::Binary { eval, domain } = entry.kind else {
            return Err(Error::WrongArity {
                name: name.to_string(),
                expected: "binary",
            });
        };
        let n = broadcast_len(xs.len(), ys.len())?;
        let a = self.round(xs);
        let b = self.round(ys);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let x = a[if a.len() == 1 { 0 } else { i }];
            let y = b[if b.len() == 1 { 0 } else { i }];
            if !self.quiet {
                check_binary(entry, domain, x, y)?;
            }
            out.push(eval(x, y));
        }
        self.round_in_place(&mut out);
        Ok(out)
    }

    pub fn binary_scalar(&self, name: &str, x: f64, y: f64) -> Result<f64> {
        Ok(self.binary(name, &[x], &[y])?[0])
    }

    /// Reduction of a whole array: sum, prod, mean, std or var (population
    /// divisor; see [`MathEmu::std`] and [`MathEmu::var`] for others).
    pub fn reduce(&self, name: &str, xs: &[f64]) -> Result<f64> {
        let entry = lookup(name)?;
        let v = self.round(xs);
        let r = reduce_exact(entry.name, &v, 0)?;
        Ok(self.round_one(r))
    }

    pub fn sum(&self, xs: &[f64]) -> Result<f64> {
        self.reduce("sum", xs)
    }

    pub fn mean(&self, xs: &[f64]) -> Result<f64> {
        self.reduce("mean", xs)
    }

    /// Standard deviation with divisor `N - ddof`.
    pub fn std(&self, xs: &[f64], ddof: usize) -> Result<f64> {
        let r = reduce_exact("std", &self.round(xs), ddof)?;
        Ok(self.round_one(r))
    }

    /// Variance with divisor `N - ddof`.
    pub fn var(&self, xs: &[f64], ddof: usize) -> Result<f64> {
        let r = reduce_exact("var", &self.round(xs), ddof)?;
        Ok(self.round_one(r))
    }

    /// Reduction along one axis of an n-dimensional array.
    pub fn reduce_axis(&self, name: &str, xs: ArrayViewD<'_, f64>, axis: usize, ddof: usize) -> Result<ArrayD<f64>> {
        let entry = lookup(name)?;
        if axis >= xs.ndim() {
            return Err(Error::Shape(format!("axis {axis} out of range for rank {}", xs.ndim())));
        }
        let rounded = ArrayD::from_shape_vec(xs.shape(), self.round(&xs.iter().copied().collect::<Vec<_>>()))
            .map_err(|e| Error::Shape(e.to_string()))?;
        let mut out = Vec::new();
        for lane in rounded.lanes(Axis(axis)) {
            let lane: Vec<f64> = lane.iter().copied().collect();
            out.push(reduce_exact(entry.name, &lane, ddof)?);
        }
        self.round_in_place(&mut out);
        let mut shape = xs.shape().to_vec();
        shape.remove(axis);
        ArrayD::from_shape_vec(shape, out).map_err(|e| Error::Shape(e.to_string()))
    }

    pub fn dot(&self, xs: &[f64], ys: &[f64]) -> Result<f64> {
        if xs.len() != ys.len() {
            return Err(Error::Shape(format!("dot of lengths {} and {}", xs.len(), ys.len())));
        }
        let a = self.round(xs);
        let b = self.round(ys);
        let s = a.iter().zip(&b).fold(0.0, |acc, (x, y)| acc + x * y);
        Ok(self.round_one(s))
    }

    pub fn matmul(&self, a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (n, k) = a.dim();
        let (k2, m) = b.dim();
        if k != k2 {
            return Err(Error::Shape(format!("matmul of {n}x{k} and {k2}x{m}")));
        }
        let ra = Array2::from_shape_vec((n, k), self.round(&a.iter().copied().collect::<Vec<_>>()))
            .map_err(|e| Error::Shape(e.to_string()))?;
        let rb = Array2::from_shape_vec((k, m), self.round(&b.iter().copied().collect::<Vec<_>>()))
            .map_err(|e| Error::Shape(e.to_string()))?;
        let mut out = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                out.push((0..k).fold(0.0, |acc, l| acc + ra[[i, l]] * rb[[l, j]]));
            }
        }
        self.round_in_place(&mut out);
        Array2::from_shape_vec((n, m), out).map_err(|e| Error::Shape(e.to_string()))
    }

    /// cumsum, cumprod or diff (first difference) of a 1-d array.
    pub fn scan(&self, name: &str, xs: &[f64]) -> Result<Vec<f64>> {
        let entry = lookup(name)?;
        if !matches!(entry.kind, Kind::Scan) {
            return Err(Error::WrongArity {
                name: name.to_string(),
                expected: "scan",
            });
        }
        let v = self.round(xs);
        let mut out: Vec<f64> = match name {
            "cumsum" => v
                .iter()
                .scan(0.0, |acc, &x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect(),
            "cumprod" => v
                .iter()
                .scan(1.0, |acc, &x| {
                    *acc *= x;
                    Some(*acc)
                })
                .collect(),
            _ => v.windows(2).map(|w| w[1] - w[0]).collect(),
        };
        self.round_in_place(&mut out);
        Ok(out)
    }

    /// Significand in `[0.5, 1)` (rounded) and integer exponent.
    pub fn frexp(&self, xs: &[f64]) -> (Vec<f64>, Vec<i32>) {
        let (mut m, e): (Vec<f64>, Vec<i32>) = self.round(xs).into_iter().map(libm::frexp).unzip();
        self.round_in_place(&mut m);
        (m, e)
    }

    /// Fractional part (rounded) and integral part.
    pub fn modf(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut f, i): (Vec<f64>, Vec<f64>) = self
            .round(xs)
            .into_iter()
            .map(|x| {
                let t = x.trunc();
                let frac = if x.is_infinite() { 0.0f64.copysign(x) } else { x - t };
                (frac, t)
            })
            .unzip();
        self.round_in_place(&mut f);
        (f, i)
    }

    pub fn clip(&self, xs: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
        if lo > hi {
            return Err(Error::InvalidConfig(format!("clip bounds {lo} > {hi}")));
        }
        let (lo, hi) = (self.round_one(lo), self.round_one(hi));
        let mut v = self.round(xs);
        for x in v.iter_mut() {
            if !x.is_nan() {
                *x = x.clamp(lo, hi);
            }
        }
        self.round_in_place(&mut v);
        Ok(v)
    }

    /// Rounds to `decimals` decimal places, halves to even, as
    /// `rint(x * 10^d) / 10^d`.
    pub fn round_decimals(&self, xs: &[f64], decimals: i32) -> Vec<f64> {
        let mut v = self.round(xs);
        let scale = 10f64.powi(decimals.abs());
        for x in v.iter_mut() {
            *x = if decimals >= 0 {
                (*x * scale).round_ties_even() / scale
            } else {
                (*x / scale).round_ties_even() * scale
            };
        }
        self.round_in_place(&mut v);
        v
    }

    /// Phase of `re + i*im`.
    pub fn angle(&self, re: &[f64], im: &[f64]) -> Result<Vec<f64>> {
        if re.len() != im.len() {
            return Err(Error::Shape("real and imaginary parts differ in length".into()));
        }
        let (a, b) = (self.round(re), self.round(im));
        let mut out: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y.atan2(*x)).collect();
        self.round_in_place(&mut out);
        Ok(out)
    }

    pub fn real(&self, re: &[f64], _im: &[f64]) -> Vec<f64> {
        self.round(re)
    }

    pub fn imag(&self, _re: &[f64], im: &[f64]) -> Vec<f64> {
        self.round(im)
    }

    pub fn conj(&self, re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.round(re), self.round(im).into_iter().map(|y| -y).collect())
    }
}

fn broadcast_len(a: usize, b: usize) -> Result<usize> {
    match (a, b) {
        _ if a == b => Ok(a),
        (1, n) | (n, 1) => Ok(n),
        _ => Err(Error::Shape(format!("cannot broadcast lengths {a} and {b}"))),
    }
}

/// Binary64 reduction in sequential order.
fn reduce_exact(name: &'static str, xs: &[f64], ddof: usize) -> Result<f64> {
    let n = xs.len();
    match name {
        "sum" => Ok(xs.iter().fold(0.0, |a, x| a + x)),
        "prod" => Ok(xs.iter().fold(1.0, |a, x| a * x)),
        "mean" | "std" | "var" => {
            if n == 0 {
                return Err(Error::EmptyInput { function: name });
            }
            let mean = xs.iter().fold(0.0, |a, x| a + x) / n as f64;
            if name == "mean" {
                return Ok(mean);
            }
            if ddof >= n {
                return Err(Error::InvalidConfig(format!("{name}: ddof {ddof} needs more than {n} elements")));
            }
            let ss = xs.iter().fold(0.0, |a, x| a + (x - mean) * (x - mean));
            let var = ss / (n - ddof) as f64;
            Ok(if name == "std" { var.sqrt() } else { var })
        }
        _ => Err(Error::WrongArity {
            name: name.to_string(),
            expected: "reduction over one array",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rounding::RoundingMode;
    use ndarray::array;

    fn fp16() -> MathEmu {
        MathEmu::new(FloatFormat::FP16, ChopConfig::default()).unwrap()
    }

    #[test]
    fn registry_names_unique() {
        let mut names: Vec<_> = registry().iter().map(|e| e.name).collect();
        names.sort();
        let n = names.len();
        names.dedup();
        assert_eq!(names.len(), n);
        assert!(lookup("nope").is_err());
    }

    #[test]
    fn unary_examples() {
        let m = fp16();
        assert_eq!(m.unary_scalar("sin", 0.0).unwrap(), 0.0);
        assert_eq!(m.unary_scalar("exp", 1.0).unwrap(), 2.71875);
        let bf = MathEmu::new(FloatFormat::BF16, ChopConfig::default().with_mode(RoundingMode::TowardZero)).unwrap();
        assert_eq!(bf.unary_scalar("sqrt", 2.0).unwrap(), 1.4140625);
        assert_eq!(m.unary_scalar("sign", -3.0).unwrap(), -1.0);
        assert_eq!(m.unary_scalar("round", 2.5).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors() {
        let m = fp16();
        assert!(matches!(m.unary_scalar("sqrt", -1.0), Err(Error::Domain { function: "sqrt", .. })));
        assert!(matches!(m.unary_scalar("log", 0.0), Err(Error::Domain { .. })));
        assert!(matches!(m.unary_scalar("arcsin", 1.5), Err(Error::Domain { .. })));
        assert!(matches!(m.unary_scalar("arctanh", 1.0), Err(Error::Domain { .. })));
        assert!(matches!(m.unary_scalar("reciprocal", 0.0), Err(Error::DivisionByZero { .. })));
        assert!(matches!(m.binary_scalar("divide", 1.0, 0.0), Err(Error::DivisionByZero { .. })));
        assert!(matches!(m.binary_scalar("bitwise_and", 1.5, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(m.unary_scalar("add", 1.0), Err(Error::WrongArity { .. })));
        // 1.00001 rounds to 1 in fp16, so arcsin accepts it.
        assert_eq!(m.unary_scalar("arcsin", 1.00001).unwrap(), m.round(&[std::f64::consts::FRAC_PI_2])[0]);
        let quiet = fp16().quiet(true);
        assert!(quiet.unary_scalar("sqrt", -1.0).unwrap().is_nan());
        assert_eq!(quiet.binary_scalar("divide", 1.0, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn binary_examples() {
        let m = fp16();
        assert_eq!(m.binary_scalar("add", 1.0, 2f64.powi(-12)).unwrap(), 1.0);
        assert_eq!(m.binary_scalar("hypot", 3.0, 4.0).unwrap(), 5.0);
        assert_eq!(m.binary_scalar("multiply", 0.1, 1.0).unwrap(), m.round(&[0.1])[0]);
        assert_eq!(m.binary_scalar("mod", -7.0, 3.0).unwrap(), 2.0);
        assert_eq!(m.binary_scalar("mod", 7.0, -3.0).unwrap(), -2.0);
        assert_eq!(m.binary_scalar("floor_divide", -7.0, 3.0).unwrap(), -3.0);
        assert_eq!(m.binary_scalar("floor_divide", 7.0, 2.0).unwrap(), 3.0);
        assert_eq!(m.binary_scalar("bitwise_xor", 6.0, 3.0).unwrap(), 5.0);
        assert_eq!(m.binary_scalar("ldexp", 0.75, 3.0).unwrap(), 6.0);
        assert_eq!(m.binary_scalar("logaddexp", 0.0, 0.0).unwrap(), m.round(&[std::f64::consts::LN_2])[0]);
        assert!(m.binary_scalar("maximum", f64::NAN, 1.0).unwrap().is_nan());
        assert_eq!(m.binary("add", &[1.0, 2.0], &[1.0]).unwrap(), vec![2.0, 3.0]);
        assert!(m.binary("add", &[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn reductions() {
        let m = fp16();
        assert_eq!(m.sum(&[1.0; 1000]).unwrap(), 1000.0);
        assert_eq!(m.dot(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(m.var(&[1.0, 2.0, 3.0, 4.0], 0).unwrap(), 1.25);
        assert_eq!(m.var(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), m.round(&[5.0 / 3.0])[0]);
        assert_eq!(m.std(&[2.0, 2.0], 0).unwrap(), 0.0);
        assert!(matches!(m.mean(&[]), Err(Error::EmptyInput { .. })));
        assert_eq!(m.reduce("prod", &[]).unwrap(), 1.0);
        // Only the final sum is rounded: 2048 + 1 + 1 is exact in binary64.
        assert_eq!(m.sum(&[2048.0, 1.0, 1.0]).unwrap(), 2050.0);
    }

    #[test]
    fn axis_reduction() {
        let m = fp16();
        let a = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]].into_dyn();
        assert_eq!(m.reduce_axis("sum", a.view(), 0, 0).unwrap().into_raw_vec_and_offset().0, vec![5.0, 7.0, 9.0]);
        assert_eq!(m.reduce_axis("mean", a.view(), 1, 0).unwrap().into_raw_vec_and_offset().0, vec![2.0, 5.0]);
        assert!(m.reduce_axis("sum", a.view(), 2, 0).is_err());
    }

    #[test]
    fn matmul_identity() {
        let m = fp16();
        let id = array![[1.0, 0.0], [0.0, 1.0]];
        let x = array![[0.1, 0.2], [0.3, 3.14159]];
        let r = m.matmul(id.view(), x.view()).unwrap();
        assert_eq!(r.iter().copied().collect::<Vec<_>>(), m.round(&[0.1, 0.2, 0.3, 3.14159]));
        assert!(m.matmul(id.view(), array![[1.0, 2.0, 3.0]].view()).is_err());
    }

    #[test]
    fn scans() {
        let m = fp16();
        assert_eq!(m.scan("cumsum", &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 3.0, 6.0]);
        assert_eq!(m.scan("cumprod", &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 6.0]);
        assert_eq!(m.scan("diff", &[1.0, 4.0, 9.0]).unwrap(), vec![3.0, 5.0]);
        assert!(m.scan("sum", &[1.0]).is_err());
    }

    #[test]
    fn misc() {
        let m = fp16();
        assert_eq!(m.frexp(&[6.0]), (vec![0.75], vec![3]));
        assert_eq!(m.modf(&[2.75]), (vec![0.75], vec![2.0]));
        assert_eq!(m.modf(&[-2.75]), (vec![-0.75], vec![-2.0]));
        assert_eq!(m.clip(&[-1.0, 0.5, 2.0], 0.0, 1.0).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(m.round_decimals(&[2.5, 1.25], 0), vec![2.0, 1.0]);
        assert_eq!(m.round_decimals(&[1250.0], -2), vec![1200.0]);
        assert_eq!(m.angle(&[0.0], &[1.0]).unwrap(), m.round(&[std::f64::consts::FRAC_PI_2]));
        assert_eq!(m.conj(&[1.0], &[2.0]), (vec![1.0], vec![-2.0]));
        assert_eq!(m.real(&[1.0], &[2.0]), vec![1.0]);
        assert_eq!(m.imag(&[1.0], &[2.0]), vec![2.0]);
    }

    #[test]
    fn scheme_is_round_eval_round() {
        let m = fp16();
        let c = Chop::nearest(FloatFormat::FP16);
        for x in [0.1, 0.7, 1.3, 2.9, 10.01] {
            for e in registry() {
                if let Kind::Unary { eval, .. } = e.kind {
                    if let Ok(y) = m.unary_scalar(e.name, x) {
                        let expected = c.chop(eval(c.chop(x)));
                        assert!(y == expected || (y.is_nan() && expected.is_nan()), "{} {x}", e.name);
                    }
                }
            }
        }
    }
}
