use chopkit::mathemu::Kind;
use chopkit::{registry, Chop, ChopConfig, FloatFormat, MathEmu, RoundingMode};
use proptest::prelude::*;

const TABLE_NAMES: &[&str] = &[
    "sin", "cos", "tan", "arcsin", "arccos", "arctan", "sinh", "cosh", "tanh", "arcsinh", "arccosh", "arctanh", "exp",
    "expm1", "log", "log10", "log2", "log1p", "sqrt", "cbrt", "sum", "prod", "mean", "std", "var", "dot", "matmul",
    "erf", "erfc", "gamma", "fabs", "logaddexp", "cumsum", "cumprod", "degrees", "radians", "floor", "ceil", "round",
    "sign", "clip", "abs", "reciprocal", "square", "frexp", "hypot", "diff", "power", "modf", "ldexp", "angle", "real",
    "imag", "conj", "maximum", "minimum", "multiply", "mod", "divide", "add", "subtract", "floor_divide", "bitwise_and",
    "bitwise_or", "bitwise_xor",
];

#[test]
fn registry_covers_the_function_tables() {
    for name in TABLE_NAMES {
        assert_eq!(registry().iter().filter(|e| e.name == *name).count(), 1, "{name}");
    }
}

fn formats() -> Vec<FloatFormat> {
    vec![FloatFormat::FP16, FloatFormat::BF16, FloatFormat::E4M3, FloatFormat::TF32]
}

fn unary_names() -> Vec<&'static str> {
    registry()
        .iter()
        .filter(|e| matches!(e.kind, Kind::Unary { .. }))
        .map(|e| e.name)
        .collect()
}

fn binary_names() -> Vec<&'static str> {
    registry()
        .iter()
        .filter(|e| matches!(e.kind, Kind::Binary { .. }))
        .map(|e| e.name)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn unary_is_round_eval_round(
        name in prop::sample::select(unary_names()),
        fi in 0usize..4,
        mode in prop::sample::select(RoundingMode::DETERMINISTIC.to_vec()),
        x in -20.0f64..20.0,
    ) {
        let f = formats()[fi];
        let cfg = ChopConfig::default().with_mode(mode);
        let emu = MathEmu::new(f, cfg).unwrap();
        let c = Chop::new(f, cfg).unwrap();
        let Kind::Unary { eval, .. } = chopkit::lookup(name).unwrap().kind else { unreachable!() };
        if let Ok(y) = emu.unary_scalar(name, x) {
            let expected = c.chop(eval(c.chop(x)));
            prop_assert!(y.to_bits() == expected.to_bits() || (y.is_nan() && expected.is_nan()));
            if y.is_finite() {
                prop_assert_eq!(c.chop(y), y);
            }
        }
    }

    #[test]
    fn binary_is_round_eval_round(
        name in prop::sample::select(binary_names()),
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
    ) {
        let emu = MathEmu::new(FloatFormat::BF16, ChopConfig::default()).unwrap();
        let c = Chop::nearest(FloatFormat::BF16);
        let Kind::Binary { eval, .. } = chopkit::lookup(name).unwrap().kind else { unreachable!() };
        if let Ok(z) = emu.binary_scalar(name, x, y) {
            let expected = c.chop(eval(c.chop(x), c.chop(y)));
            prop_assert!(z.to_bits() == expected.to_bits() || (z.is_nan() && expected.is_nan()));
        }
    }

    #[test]
    fn bounded_outputs(u in -1.0f64..1.0, fi in 0usize..4) {
        let f = formats()[fi];
        let x = u * f.params().x_max;
        let emu = MathEmu::new(f, ChopConfig::default()).unwrap();
        for name in ["sin", "cos", "tanh", "erf"] {
            prop_assert!(emu.unary_scalar(name, x).unwrap().abs() <= 1.0);
        }
        prop_assert!(emu.unary_scalar("erfc", x).unwrap() >= 0.0);
        let clipped = emu.clip(&[x], 0.0, 1.0).unwrap()[0];
        prop_assert!((0.0..=1.0).contains(&clipped));
    }

    #[test]
    fn reductions_round_once(v in prop::collection::vec(-100.0f64..100.0, 1..64)) {
        let emu = MathEmu::new(FloatFormat::FP16, ChopConfig::default()).unwrap();
        let c = Chop::nearest(FloatFormat::FP16);
        let r: Vec<f64> = v.iter().map(|&x| c.chop(x)).collect();
        let sum: f64 = r.iter().fold(0.0, |a, x| a + x);
        prop_assert_eq!(emu.sum(&v).unwrap(), c.chop(sum));
        let mean = sum / r.len() as f64;
        prop_assert_eq!(emu.mean(&v).unwrap(), c.chop(mean));
        let var = r.iter().fold(0.0, |a, x| a + (x - mean) * (x - mean)) / r.len() as f64;
        prop_assert_eq!(emu.var(&v, 0).unwrap(), c.chop(var));
    }
}

#[test]
fn stochastic_passes_use_fresh_draws() {
    let cfg = ChopConfig::default().with_mode(RoundingMode::StochasticProportional).with_seed(1);
    let emu = MathEmu::new(FloatFormat::FP16, cfg).unwrap();
    let x = 1.0 + 2f64.powi(-11);
    let outcomes: std::collections::HashSet<u64> = (0..64).map(|_| emu.round(&[x])[0].to_bits()).collect();
    assert_eq!(outcomes.len(), 2);
}
