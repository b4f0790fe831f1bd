//! Throughput of array rounding.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chopkit::{Chop, ChopConfig, Error, FloatFormat, Result, RoundingMode};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub size: usize,
    pub format: FloatFormat,
    pub mode: RoundingMode,
    pub threads: usize,
    /// Timed runs after the discarded warm-up run.
    pub runs: usize,
    pub mean_seconds: f64,
    pub elements_per_second: f64,
    /// Order-dependent hash of the output bits.
    pub checksum: u64,
}

impl BenchReport {
    pub fn line(&self) -> String {
        format!(
            "size={} format={} rmode={} threads={} runs={} warmup=1 (discarded) mean_s={:.6} elements_per_s={:.4e} checksum={:016x}",
            self.size,
            self.format,
            self.mode.code(),
            self.threads,
            self.runs,
            self.mean_seconds,
            self.elements_per_second,
            self.checksum
        )
    }
}

/// FNV-1a over the output bit patterns.
pub fn checksum(xs: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in xs {
        for byte in x.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Seeded inputs spread over several binades, in `[-1e3, 1e3]`.
pub fn bench_input(size: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let m: f64 = rng.random_range(-1.0..1.0);
            m * 10f64.powi(rng.random_range(-4..=3))
        })
        .collect()
}

/// Times `runs + 1` passes of [`Chop::chop_slice_with_threads`] over a
/// seeded input, discarding the first.
pub fn bench(size: usize, fmt: FloatFormat, mode: RoundingMode, threads: usize, runs: usize, seed: u64) -> Result<BenchReport> {
    if size == 0 {
        return Err(Error::InvalidConfig("bench size must be at least 1".into()));
    }
    let runs = runs.max(1);
    let chop = Chop::new(fmt, ChopConfig::default().with_mode(mode).with_seed(seed))?;
    let xs = bench_input(size, seed);
    let mut out = chop.chop_slice_with_threads(&xs, threads)?;
    let mut total = 0.0;
    for _ in 0..runs {
        let start = Instant::now();
        out = chop.chop_slice_with_threads(&xs, threads)?;
        total += start.elapsed().as_secs_f64();
    }
    let mean = total / runs as f64;
    Ok(BenchReport {
        size,
        format: fmt,
        mode,
        threads,
        runs,
        mean_seconds: mean,
        elements_per_second: size as f64 / mean,
        checksum: checksum(&out),
    })
}
