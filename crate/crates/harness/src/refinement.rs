//! Iterative refinement in single precision, native and emulated.
//!
//! Both runs execute the same LU factorization and residual-correction loop.
//! The native run uses `f32` arithmetic; the emulated run stores `f64` and
//! rounds to the target format after every scalar operation. For the
//! binary32 layout `e8m23` the two agree bit for bit, since a binary64 result
//! of one binary32 operation rounds to the same binary32 value the hardware
//! produces.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use chopkit::{Chop, ChopConfig, Error, FloatFormat, Result, RoundingMode};

/// Scalar arithmetic with one rounding per operation.
pub trait Arith {
    type T: Copy;
    fn lift(&self, x: f64) -> Self::T;
    fn lower(&self, x: Self::T) -> f64;
    fn add(&self, a: Self::T, b: Self::T) -> Self::T;
    fn sub(&self, a: Self::T, b: Self::T) -> Self::T;
    fn mul(&self, a: Self::T, b: Self::T) -> Self::T;
    fn div(&self, a: Self::T, b: Self::T) -> Self::T;
}

/// Hardware binary32.
#[derive(Debug, Clone, Copy, Default)]
pub struct Native32;

impl Arith for Native32 {
    type T = f32;
    fn lift(&self, x: f64) -> f32 {
        x as f32
    }
    fn lower(&self, x: f32) -> f64 {
        x as f64
    }
    fn add(&self, a: f32, b: f32) -> f32 {
        a + b
    }
    fn sub(&self, a: f32, b: f32) -> f32 {
        a - b
    }
    fn mul(&self, a: f32, b: f32) -> f32 {
        a * b
    }
    fn div(&self, a: f32, b: f32) -> f32 {
        a / b
    }
}

/// Hardware binary64.
#[derive(Debug, Clone, Copy, Default)]
pub struct Native64;

impl Arith for Native64 {
    type T = f64;
    fn lift(&self, x: f64) -> f64 {
        x
    }
    fn lower(&self, x: f64) -> f64 {
        x
    }
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn div(&self, a: f64, b: f64) -> f64 {
        a / b
    }
}

/// Binary64 operations each followed by a chop.
#[derive(Debug, Clone, Copy)]
pub struct Emulated(pub Chop);

impl Arith for Emulated {
    type T = f64;
    fn lift(&self, x: f64) -> f64 {
        self.0.chop(x)
    }
    fn lower(&self, x: f64) -> f64 {
        x
    }
    fn add(&self, a: f64, b: f64) -> f64 {
        self.0.chop(a + b)
    }
    fn sub(&self, a: f64, b: f64) -> f64 {
        self.0.chop(a - b)
    }
    fn mul(&self, a: f64, b: f64) -> f64 {
        self.0.chop(a * b)
    }
    fn div(&self, a: f64, b: f64) -> f64 {
        self.0.chop(a / b)
    }
}

/// Row-major LU factors with partial pivoting.
struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

fn factor<A: Arith>(ar: &A, a: &DMatrix<f64>) -> Result<Lu<A::T>> {
    let n = a.nrows();
    let mut lu: Vec<A::T> = (0..n * n).map(|k| ar.lift(a[(k / n, k % n)])).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| ar.lower(lu[i * n + k]).abs().total_cmp(&ar.lower(lu[j * n + k]).abs()))
            .expect("nonempty range");
        if ar.lower(lu[p * n + k]) == 0.0 {
            return Err(Error::InvalidConfig(format!("matrix is singular at column {k}")));
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let l = ar.div(lu[i * n + k], pivot);
            lu[i * n + k] = l;
            for j in k + 1..n {
                lu[i * n + j] = ar.sub(lu[i * n + j], ar.mul(l, lu[k * n + j]));
            }
        }
    }
    Ok(Lu { n, lu, perm })
}

fn solve<A: Arith>(ar: &A, f: &Lu<A::T>, b: &[A::T]) -> Vec<A::T> {
    let n = f.n;
    let mut y: Vec<A::T> = f.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            y[i] = ar.sub(y[i], ar.mul(f.lu[i * n + j], y[j]));
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            y[i] = ar.sub(y[i], ar.mul(f.lu[i * n + j], y[j]));
        }
        y[i] = ar.div(y[i], f.lu[i * n + i]);
    }
    y
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineRun {
    pub x: Vec<f64>,
    /// Relative residual `||b - A x|| / ||b||` after each solve, measured in
    /// binary64 from the stored iterate.
    pub residuals: Vec<f64>,
    /// Solves performed, counting the initial one.
    pub iterations: usize,
    pub converged: bool,
}

/// Stops on `residual <= tol`, after `max_iter` solves, or once a
/// correction fails to halve the residual.
pub fn refine<A: Arith>(ar: &A, a: &DMatrix<f64>, b: &[f64], tol: f64, max_iter: usize) -> Result<RefineRun> {
    let n = a.nrows();
    if n != a.ncols() || n != b.len() {
        return Err(Error::Shape(format!("system is {}x{} with {} right-hand sides", n, a.ncols(), b.len())));
    }
    let f = factor(ar, a)?;
    let al: Vec<A::T> = (0..n * n).map(|k| ar.lift(a[(k / n, k % n)])).collect();
    let bl: Vec<A::T> = b.iter().map(|&v| ar.lift(v)).collect();
    let bnorm = norm(bl.iter().map(|&v| ar.lower(v)));
    let mut x = solve(ar, &f, &bl);
    let mut residuals = Vec::new();
    let mut iterations = 1;
    loop {
        let r: Vec<A::T> = (0..n)
            .map(|i| {
                let ax = (0..n).fold(ar.lift(0.0), |acc, j| ar.add(acc, ar.mul(al[i * n + j], x[j])));
                ar.sub(bl[i], ax)
            })
            .collect();
        let rel = norm(r.iter().map(|&v| ar.lower(v))) / bnorm;
        let stalled = residuals.last().is_some_and(|&prev| rel > 0.5 * prev);
        residuals.push(rel);
        if rel <= tol || stalled || iterations >= max_iter {
            return Ok(RefineRun {
                x: x.iter().map(|&v| ar.lower(v)).collect(),
                residuals,
                iterations,
                converged: rel <= tol,
            });
        }
        let d = solve(ar, &f, &r);
        for (xi, di) in x.iter_mut().zip(d) {
            *xi = ar.add(*xi, di);
        }
        iterations += 1;
    }
}

/// `Q diag(logspace(0, -log10(cond))) Q^T + S` with `Q` orthogonal and `S`
/// a small skew-symmetric part. The symmetric part is positive definite, so
/// `A` is nonsymmetric positive definite with 2-norm condition close to
/// `cond`.
pub fn test_matrix(n: usize, cond: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |_: usize, _: usize| -> f64 { StandardNormal.sample(&mut rng) };
    let q = DMatrix::from_fn(n, n, &mut gauss).qr().q();
    let decades = cond.log10();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            10f64.powf(-decades * frac)
        } else {
            0.0
        }
    });
    let g = DMatrix::from_fn(n, n, &mut gauss);
    let skew = (&g - g.transpose()) * (1e-3 / (cond * (n as f64).sqrt()));
    &q * d * q.transpose() + skew
}

/// 2-norm condition number from the singular values.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    sv.max() / sv.min()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrReport {
    pub n: usize,
    pub condition: f64,
    pub native: RefineRun,
    pub emulated: RefineRun,
    /// `||x_native - x_emulated|| / ||x_native||`.
    pub relative_difference: f64,
}

impl IrReport {
    pub fn iterations(&self) -> (usize, usize) {
        (self.native.iterations, self.emulated.iterations)
    }
}

/// Solves the same system natively in binary32 and under emulation of
/// `fmt` with `mode`, and compares the solutions.
pub fn iterative_refinement(
    n: usize,
    cond: f64,
    fmt: FloatFormat,
    mode: RoundingMode,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<IrReport> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("refinement needs n >= 2, got {n}")));
    }
    let a = test_matrix(n, cond, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let x_true: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * x_true[j]).sum()).collect();
    let emu = Emulated(Chop::new(fmt, ChopConfig::default().with_mode(mode).with_seed(seed))?);
    let native = refine(&Native32, &a, &b, tol, max_iter)?;
    let emulated = refine(&emu, &a, &b, tol, max_iter)?;
    let diff = norm(native.x.iter().zip(&emulated.x).map(|(p, q)| p - q));
    Ok(IrReport {
        n,
        condition: condition_number(&a),
        relative_difference: diff / norm(native.x.iter().copied()),
        native,
        emulated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_at_once() {
        let a = DMatrix::identity(4, 4);
        let b = [1.0, -2.0, 0.5, 3.0];
        let run = refine(&Native32, &a, &b, 1e-8, 50).unwrap();
        assert_eq!(run.iterations, 1);
        assert_eq!(run.x, b.to_vec());
        let emu = refine(&Emulated(Chop::nearest(FloatFormat::FP32)), &a, &b, 1e-8, 50).unwrap();
        assert_eq!(emu, run);
    }

    #[test]
    fn emulated_fp64_is_native_fp64() {
        let a = test_matrix(20, 1e4, 3);
        let b: Vec<f64> = (0..20).map(|i| i as f64 - 7.5).collect();
        let native = refine(&Native64, &a, &b, 1e-14, 50).unwrap();
        let emu = refine(&Emulated(Chop::nearest(FloatFormat::FP64)), &a, &b, 1e-14, 50).unwrap();
        assert_eq!(native, emu);
    }

    #[test]
    fn matrix_has_requested_condition() {
        let a = test_matrix(30, 1e4, 9);
        let k = condition_number(&a);
        assert!((0.9e4..1.1e4).contains(&k), "{k}");
        assert_ne!(a, a.transpose());
        // x^T A x > 0 for a few directions
        for s in 0..5 {
            let x = DMatrix::from_fn(30, 1, |i, _| ((i * 7 + s) % 11) as f64 - 5.0);
            assert!((x.transpose() * &a * &x)[(0, 0)] > 0.0);
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = DMatrix::zeros(3, 3);
        assert!(refine(&Native32, &a, &[1.0, 1.0, 1.0], 1e-8, 5).is_err());
        assert!(iterative_refinement(1, 1e4, FloatFormat::FP32, RoundingMode::NearestEven, 50, 1e-8, 0).is_err());
    }

    #[test]
    fn small_system_agrees() {
        let r = iterative_refinement(40, 1e4, FloatFormat::FP32, RoundingMode::NearestEven, 50, 1e-8, 1).unwrap();
        assert!(r.relative_difference <= 1e-8);
        assert_eq!(r.native.residuals, r.emulated.residuals);
    }
}
