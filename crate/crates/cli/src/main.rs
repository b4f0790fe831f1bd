mod arrayfile;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use arrayfile::{ArrayFile, Data};
use chopkit::{FloatFormat, QuantOptions, QuantSpec, Quantizer, RoundingMode};
use chopkit_harness::{bench, exhaustive_roundtrip, geometric_sum_demo, iterative_refinement};

/// Reduced-precision arithmetic emulation.
#[derive(Parser)]
#[command(name = "chopkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show the parameters of a format (fp16, e5m10, q8.8, int8:sym, ...).
    Info { spec: String },
    /// Quantize an array file (CHOPKIT1 binary or CSV) into a file of the
    /// same kind.
    Quantize {
        input: PathBuf,
        output: PathBuf,
        /// Target: a float format, qM.F / uqM.F, or intN[:sym|:asym][:axis=K].
        #[arg(short, long)]
        format: String,
        /// Rounding mode 1-9.
        #[arg(long, default_value_t = 1)]
        rmode: u8,
        /// Flush values below the normal range.
        #[arg(long)]
        no_subnormal: bool,
        /// Round only the significand, ignoring the exponent range.
        #[arg(long)]
        no_explim: bool,
        /// Inject random bit flips into rounded significands.
        #[arg(long)]
        flip: bool,
        /// Per-element flip probability.
        #[arg(long, default_value_t = 0.5, requires = "flip")]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "CHOPKIT_THREADS")]
        threads: Option<usize>,
    },
    /// Run one of the numerical demonstrations.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
    /// Measure rounding throughput.
    Bench {
        #[arg(long, default_value_t = 1_000_000)]
        size: usize,
        #[arg(long, default_value = "bf16")]
        format: String,
        #[arg(long, default_value_t = 1)]
        rmode: u8,
        #[arg(long, env = "CHOPKIT_THREADS", default_value_t = 1)]
        threads: usize,
        /// Timed runs after the discarded warm-up.
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Geometric series summed with and without subnormals; CSV on stdout.
    SubnormalSum {
        #[arg(long, default_value = "fp16")]
        format: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.99)]
        r: f64,
        #[arg(long, default_value_t = 2.5e-6)]
        s: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Single-precision iterative refinement, native against emulated.
    IterativeRefinement {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 1e4)]
        cond: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long, default_value_t = 1)]
        rmode: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Chop every finite value of a format of at most 16 bits.
    Roundtrip {
        #[arg(long, default_value = "fp16")]
        format: String,
    },
}

enum Failure {
    Usage(String),
    Io(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<chopkit::Error> for Failure {
    fn from(e: chopkit::Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn float_format(s: &str) -> Result<FloatFormat, Failure> {
    Ok(s.parse()?)
}

fn mode(code: u8) -> Result<RoundingMode, Failure> {
    Ok(RoundingMode::from_code(code)?)
}

fn info(spec: &str) -> Result<String, Failure> {
    let spec: QuantSpec = spec.parse()?;
    let mut rows: Vec<(&str, String)> = vec![("format", spec.to_string())];
    match spec {
        QuantSpec::Float(f) => {
            let p = f.params();
            rows.extend([
                ("exp_bits", f.exp_bits().to_string()),
                ("sig_bits", f.sig_bits().to_string()),
                ("t", f.t().to_string()),
                ("emin", f.emin().to_string()),
                ("emax", f.emax().to_string()),
                ("u", format!("{:.2e} ({})", p.u, p.u)),
                ("x_min", format!("{:.2e} ({})", p.x_min, p.x_min)),
                ("x_max", format!("{:.2e} ({})", p.x_max, p.x_max)),
                ("x_sub_min", format!("{:.2e} ({})", p.x_sub_min, p.x_sub_min)),
            ]);
        }
        QuantSpec::Fixed(f) => {
            let (lo, hi) = f.range();
            rows.extend([
                ("signed", f.is_signed().to_string()),
                ("bits", f.total_bits().to_string()),
                ("range", format!("[{lo}, {hi}]")),
                ("quantum", f.quantum().to_string()),
            ]);
        }
        QuantSpec::Int(c) => {
            rows.extend([
                ("bits", c.bits.to_string()),
                ("symmetric", c.symmetric.to_string()),
                ("qmin", c.qmin().to_string()),
                ("qmax", c.qmax().to_string()),
                ("axis", c.axis.map_or("none".to_string(), |a| a.to_string())),
            ]);
        }
    }
    Ok(rows.iter().map(|(k, v)| format!("{k:<10} {v}\n")).collect())
}

#[allow(clippy::too_many_arguments)]
fn quantize(
    input: &PathBuf,
    output: &PathBuf,
    format: &str,
    rmode: u8,
    no_subnormal: bool,
    no_explim: bool,
    flip: Option<f64>,
    seed: u64,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let spec: QuantSpec = format.parse()?;
    let opts = QuantOptions {
        mode: mode(rmode)?,
        subnormal: !no_subnormal,
        explim: !no_explim,
        flip,
        seed,
        ..Default::default()
    };
    let q = Quantizer::new(spec, opts)?;
    let bytes = fs::read(input).map_err(|e| Failure::Io(format!("cannot read {}: {e}", input.display())))?;
    let mut file = ArrayFile::parse(&bytes).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
    file.data = match &file.data {
        Data::F32(v) => Data::F32(q.apply(v, &file.shape, threads)?),
        Data::F64(v) => Data::F64(q.apply(v, &file.shape, threads)?),
    };
    fs::write(output, file.to_bytes()).map_err(|e| Failure::Io(format!("cannot write {}: {e}", output.display())))
}

fn demo(d: Demo) -> Result<String, Failure> {
    match d {
        Demo::SubnormalSum { format, n, r, s, output } => {
            let t = geometric_sum_demo(float_format(&format)?, n, r, s)?;
            eprintln!(
                "final sums: subnormal on {:e}, subnormal off {:e}, binary64 {:e}, closed form {:e}",
                t.subnormal_on.last().copied().unwrap_or(0.0),
                t.subnormal_off.last().copied().unwrap_or(0.0),
                t.exact.last().copied().unwrap_or(0.0),
                t.closed_form()
            );
            match output {
                Some(path) => {
                    fs::write(&path, t.to_csv())
                        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
                    Ok(String::new())
                }
                None => Ok(t.to_csv()),
            }
        }
        Demo::IterativeRefinement {
            n,
            cond,
            tol,
            max_iter,
            rmode,
            seed,
        } => {
            let r = iterative_refinement(n, cond, FloatFormat::FP32, mode(rmode)?, max_iter, tol, seed)?;
            let (ni, ei) = r.iterations();
            Ok(format!(
                "n {}\ncondition {:e}\niterations native {ni} emulated {ei}\n\
                 final relative residual native {:e} emulated {:e}\nrelative difference {:e}\n",
                r.n,
                r.condition,
                r.native.residuals.last().unwrap_or(&f64::NAN),
                r.emulated.residuals.last().unwrap_or(&f64::NAN),
                r.relative_difference
            ))
        }
        Demo::Roundtrip { format } => {
            let r = exhaustive_roundtrip(float_format(&format)?)?;
            let mut out = format!("{}: {}\n", r.format, r.summary());
            for m in r.mismatches.iter().take(20) {
                out.push_str(&format!(
                    "  bits {:#06x} mode {}: {} -> {}\n",
                    m.bits,
                    m.mode.code(),
                    m.input,
                    m.output
                ));
            }
            if r.mismatches.is_empty() {
                Ok(out)
            } else {
                Err(Failure::Numeric(out))
            }
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Info { spec } => info(&spec),
        Command::Quantize {
            input,
            output,
            format,
            rmode,
            no_subnormal,
            no_explim,
            flip,
            p,
            seed,
            threads,
        } => {
            quantize(
                &input,
                &output,
                &format,
                rmode,
                no_subnormal,
                no_explim,
                flip.then_some(p),
                seed,
                threads,
            )?;
            Ok(String::new())
        }
        Command::Demo { demo: d } => demo(d),
        Command::Bench {
            size,
            format,
            rmode,
            threads,
            runs,
            seed,
        } => Ok(bench(size, float_format(&format)?, mode(rmode)?, threads, runs, seed)?.line() + "\n"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("chopkit: {}", f.message().trim_end());
            ExitCode::from(f.code())
        }
    }
}
