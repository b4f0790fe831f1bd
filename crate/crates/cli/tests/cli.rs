use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chopkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chopkit"))
        .args(args)
        .env_remove("CHOPKIT_THREADS")
        .output()
        .expect("run chopkit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn info_float_fixed_int() {
    let o = chopkit(&["info", "fp16"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("t          11"), "{s}");
    assert!(s.contains("6.55e4 (65504)"), "{s}");
    assert!(s.contains("5.96e-8"), "{s}");

    let s = stdout(&chopkit(&["info", "e8m23"]));
    assert!(s.contains("emin       -126"), "{s}");
    assert!(s.contains("emax       127"), "{s}");

    let s = stdout(&chopkit(&["info", "q4.4"]));
    assert!(s.contains("range      [-8, 7.9375]"), "{s}");
    assert!(s.contains("quantum    0.0625"), "{s}");

    let s = stdout(&chopkit(&["info", "int8:sym"]));
    assert!(s.contains("qmin       -128"), "{s}");

    assert_eq!(chopkit(&["info", "fp17"]).status.code(), Some(1));
}

#[test]
fn help_and_usage_codes() {
    assert_eq!(chopkit(&["--help"]).status.code(), Some(0));
    assert_eq!(chopkit(&["--version"]).status.code(), Some(0));
    assert_eq!(chopkit(&[]).status.code(), Some(1));
    assert_eq!(chopkit(&["quantize", "a"]).status.code(), Some(1));
    assert_eq!(chopkit(&["bench", "--rmode", "12", "--size", "10"]).status.code(), Some(1));
}

#[test]
fn quantize_csv_to_fp16() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let output = dir.path().join("out.csv");
    fs::write(&input, "1.0,3.14159265\n-65520,1e-9\n").unwrap();
    let o = chopkit(&["quantize", path(&input), path(&output), "--format", "fp16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&output).unwrap(), "1,3.140625\n-inf,0\n");
}

#[test]
fn stochastic_runs_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let rows: String = (0..500).map(|i| format!("{}\n", 0.1 + i as f64 * 1e-3)).collect();
    fs::write(&input, rows).unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = chopkit(&[
            "quantize",
            path(&input),
            path(&out),
            "--format",
            "bf16",
            "--rmode",
            "5",
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv", "7");
    assert_eq!(a, run("b.csv", "7"));
    assert_ne!(a, run("c.csv", "8"));
}

#[test]
fn quantize_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let once = dir.path().join("once.csv");
    let twice = dir.path().join("twice.csv");
    fs::write(&input, "0.1,0.2,0.3\n1e5,-7.77,2.5e-3\n").unwrap();
    for spec in ["e4m3", "q4.4", "int4:axis=1"] {
        assert!(chopkit(&["quantize", path(&input), path(&once), "-f", spec]).status.success());
        assert!(chopkit(&["quantize", path(&once), path(&twice), "-f", spec]).status.success());
        assert_eq!(fs::read(&once).unwrap(), fs::read(&twice).unwrap(), "{spec}");
    }
}

#[test]
fn binary_container_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let output = dir.path().join("out.bin");
    let values = [3.14159265f32, -1.0, 1e-3, 70000.0, 0.5, 2.0];
    let mut bytes = b"CHOPKIT1 dtype=f32 shape=2,3\n".to_vec();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&input, &bytes).unwrap();
    let o = chopkit(&["quantize", path(&input), path(&output), "--format", "fp16", "--threads", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = fs::read(&output).unwrap();
    let header = b"CHOPKIT1 dtype=f32 shape=2,3\n";
    assert_eq!(&out[..header.len()], header);
    let got: Vec<f32> = out[header.len()..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let want: Vec<f32> = values.iter().map(|&v| f32::from(half_round(v))).collect();
    assert_eq!(got, want);
}

// Hardware-free reference: round to 11 significant bits, saturating to inf.
fn half_round(v: f32) -> f32 {
    if v.abs() >= 65520.0 {
        return f32::INFINITY.copysign(v);
    }
    let e = v.abs().log2().floor() as i32;
    let q = 2f64.powi(e - 10);
    let r = (v as f64 / q).round_ties_even() * q;
    r as f32
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let output = dir.path().join("out.csv");
    fs::write(&input, "1.0\nnan\n").unwrap();

    let o = chopkit(&["quantize", path(&input), path(&output), "-f", "q8.8", "--flip"]);
    assert_eq!(o.status.code(), Some(1));

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        chopkit(&["quantize", path(&missing), path(&output), "-f", "fp16"]).status.code(),
        Some(2)
    );

    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2\n3\n").unwrap();
    assert_eq!(
        chopkit(&["quantize", path(&ragged), path(&output), "-f", "fp16"]).status.code(),
        Some(2)
    );

    let o = chopkit(&["quantize", path(&input), path(&output), "-f", "q8.8"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn demo_roundtrip() {
    let o = chopkit(&["demo", "roundtrip"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0 mismatches / 63488"), "{}", stdout(&o));
    assert_eq!(chopkit(&["demo", "roundtrip", "--format", "fp32"]).status.code(), Some(1));
}

#[test]
fn demo_subnormal_sum() {
    let o = chopkit(&["demo", "subnormal-sum"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 1001);
    assert_eq!(lines[0], "step,subnormal_on,subnormal_off,exact");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sum.csv");
    let o = chopkit(&["demo", "subnormal-sum", "--n", "10", "--output", path(&out)]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 11);
}

#[test]
fn demo_iterative_refinement() {
    let o = chopkit(&["demo", "iterative-refinement", "--n", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("relative difference 0e0"), "{s}");
}

#[test]
fn bench_checksum_independent_of_threads() {
    let checksum = |threads: &str| {
        let o = chopkit(&["bench", "--size", "100000", "--rmode", "5", "--runs", "1", "--threads", threads]);
        assert!(o.status.success());
        let s = stdout(&o);
        s.split_whitespace()
            .find(|w| w.starts_with("checksum="))
            .unwrap_or_else(|| panic!("no checksum in {s}"))
            .to_string()
    };
    assert_eq!(checksum("1"), checksum("8"));
}
