use proptest::prelude::*;
use roundprob::density::{add, mul};
use roundprob::{
    analyze, interpret_term, parse_term, AnalysisSpec, Density, ErrorMode, FloatFormat, ProbContext,
};

fn spec(term: &str, inputs: &str, extra: &str) -> AnalysisSpec {
    let body = format!(
        r#"{{"term": "{term}", "inputs": {{{inputs}}},
            "format": {{"exponent_bits": 5, "mantissa_bits": 10}}{extra}}}"#
    );
    AnalysisSpec::from_json(&body).unwrap()
}

// Triangular CDF of U(0,1) + U(0,1).
fn triangle_cdf(t: f64) -> f64 {
    match t {
        t if t <= 0.0 => 0.0,
        t if t <= 1.0 => t * t / 2.0,
        t if t <= 2.0 => 1.0 - (2.0 - t) * (2.0 - t) / 2.0,
        _ => 1.0,
    }
}

#[test]
fn unrounded_sum_matches_triangle() {
    let t = parse_term("x + y").unwrap();
    let ctx = ProbContext::new(ErrorMode::None)
        .bind("x", Density::uniform(0.0, 1.0).unwrap())
        .bind("y", Density::uniform(0.0, 1.0).unwrap());
    let out = interpret_term(&t, &ctx, &FloatFormat::half()).unwrap();
    let d = out.density().unwrap();
    for i in 0..=40 {
        let x = i as f64 * 0.05;
        assert!((d.cdf(x) - triangle_cdf(x)).abs() < 1e-10, "{x}");
    }
    assert!((d.quantile(0.5) - 1.0).abs() < 1e-9);
}

#[test]
fn rounded_support_widens_by_unit_roundoff() {
    let t = parse_term("x * y").unwrap();
    let fmt = FloatFormat::half();
    let u = fmt.unit_roundoff();
    for mode in [ErrorMode::Typical, ErrorMode::Exact] {
        let ctx = ProbContext::new(mode)
            .bind("x", Density::uniform(1.0, 2.0).unwrap())
            .bind("y", Density::uniform(1.0, 3.0).unwrap());
        let out = interpret_term(&t, &ctx, &fmt).unwrap();
        let (lo, hi) = out.density().unwrap().support();
        assert!(lo >= 1.0 - u - 1e-15 && lo < 1.0, "{mode:?} {lo}");
        assert!(hi <= 6.0 * (1.0 + u) + 1e-12 && hi > 6.0, "{mode:?} {hi}");
        assert!((out.density().unwrap().total_mass() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sampled_range_lies_in_support() {
    let s = spec(
        "x0 + x1 * x2",
        r#""x0": {"kind": "uniform", "a": -1, "b": 1},
           "x1": {"kind": "uniform", "a": 2, "b": 3},
           "x2": {"kind": "normal", "mu": 0, "sigma": 1}"#,
        r#", "confidence": [0.99], "mc": {"n": 50000, "seed": 7}"#,
    );
    let r = analyze(&s).unwrap().report;
    let (lo, hi) = r.support;
    let (mlo, mhi) = r.mc.as_ref().unwrap().empirical_range.unwrap();
    assert!(lo <= mlo && mhi <= hi);
    let c = r.confidence(0.99).unwrap();
    assert!(lo < c.lo && c.hi < hi);
}

#[test]
fn constant_inputs_fold_into_the_term() {
    let with_const = spec(
        "x * c",
        r#""x": {"kind": "uniform", "a": 1, "b": 2}, "c": {"kind": "constant", "value": 4}"#,
        r#", "error_mode": "none", "mc": {"enabled": false}"#,
    );
    let r = analyze(&with_const).unwrap().report;
    assert_eq!(r.support, (4.0, 8.0));
    assert!(r.rounding_events.is_empty() || r.overflow_probability == 0.0);
}

#[test]
fn reports_are_reproducible() {
    let s = spec(
        "x / y",
        r#""x": {"kind": "uniform", "a": 1, "b": 2}, "y": {"kind": "uniform", "a": 3, "b": 4}"#,
        r#", "mc": {"n": 20000, "seed": 99}"#,
    );
    let a = analyze(&s).unwrap().report.to_json().unwrap();
    let b = analyze(&s).unwrap().report.to_json().unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sum_of_uniforms_keeps_mass_and_mean(a in -5.0f64..5.0, w1 in 0.1f64..4.0, c in -5.0f64..5.0, w2 in 0.1f64..4.0) {
        let x = Density::uniform(a, a + w1).unwrap();
        let y = Density::uniform(c, c + w2).unwrap();
        let s = add(&x, &y).unwrap();
        prop_assert!((s.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!((s.mean() - (a + c + (w1 + w2) / 2.0)).abs() < 1e-8);
        let (lo, hi) = s.support();
        prop_assert!((lo - (a + c)).abs() < 1e-12 && (hi - (a + c + w1 + w2)).abs() < 1e-12);
    }

    #[test]
    fn product_mean_is_product_of_means(a in 0.5f64..3.0, w1 in 0.1f64..2.0, c in 0.5f64..3.0, w2 in 0.1f64..2.0) {
        let x = Density::uniform(a, a + w1).unwrap();
        let y = Density::uniform(c, c + w2).unwrap();
        let p = mul(&x, &y).unwrap();
        let expect = (a + w1 / 2.0) * (c + w2 / 2.0);
        prop_assert!((p.mean() - expect).abs() < 1e-8 * expect);
        prop_assert!((p.total_mass() - 1.0).abs() < 1e-9);
    }
}
