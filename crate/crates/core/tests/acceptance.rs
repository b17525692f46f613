//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so every line is printed; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use roundprob::analysis::error_mc;
use roundprob::density::{div, mul};
use roundprob::errordist::{
    exact_error_density, sup_distance, t_range, typical_density, unclipped_t_min,
};
use roundprob::{analyze, Analysis, AnalysisSpec, Density, FloatFormat, OverflowRule};

const DIV_OVERFLOW: &str = include_str!("../../../fixtures/div_overflow.json");
const SUM8LESS: &str = include_str!("../../../fixtures/sum8less.json");
const MUL8LESS: &str = include_str!("../../../fixtures/mul8less.json");

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(text: &str) -> AnalysisSpec {
    AnalysisSpec::from_json(text).expect("fixture parses")
}

fn cached(cell: &'static OnceLock<Analysis>, text: &str) -> &'static Analysis {
    cell.get_or_init(|| analyze(&fixture(text)).expect("fixture analyzes"))
}

static DIV_RUN: OnceLock<Analysis> = OnceLock::new();
static SUM_RUN: OnceLock<Analysis> = OnceLock::new();
static MUL_RUN: OnceLock<Analysis> = OnceLock::new();

fn typical_normalization() -> Outcome {
    let start = Instant::now();
    let d = typical_density().unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mass = d.density.total_mass();
    // 3/4 + 2 ∫_{1/2}^{1} ((1/t - 1)/2 + (1/t - 1)^2/4) dt, term by term.
    let ln2 = std::f64::consts::LN_2;
    let closed = 0.75 + 2.0 * ((ln2 - 0.5) / 2.0 + (1.5 - 2.0 * ln2) / 4.0);
    let ok = (mass - 1.0).abs() <= 1e-9 && (closed - 1.0).abs() <= 1e-15 && secs < 1.0;
    (ok, format!("mass {mass:.12} in {secs:.3} s"))
}

fn exact_vs_typical() -> Outcome {
    let typical = typical_density().unwrap().density;
    let inputs = [
        ("uniform(-10,10)", Density::uniform(-10.0, 10.0).unwrap()),
        ("uniform(0,1)", Density::uniform(0.0, 1.0).unwrap()),
        ("normal(0,2)", Density::normal(0.0, 2.0).unwrap()),
        ("normal(2,10)", Density::normal(2.0, 10.0).unwrap()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, x) in &inputs {
        let start = Instant::now();
        let e = exact_error_density(x, &FloatFormat::half()).unwrap();
        let d = sup_distance(&e.density, &typical, 20_001);
        ok &= d <= 0.05;
        parts.push(format!(
            "{name} {d:.4} ({:.1} s)",
            start.elapsed().as_secs_f64()
        ));
    }
    (ok, format!("sup distances {}", parts.join(", ")))
}

fn exact_vs_mc() -> Outcome {
    let x = Density::uniform(0.0, 1.0).unwrap();
    let (mc, _) = error_mc(&x, &FloatFormat::half(), 1_000_000, 2019).unwrap();
    (
        mc.max_bin_z <= 4.0 && mc.histogram.bins() == 256,
        format!("max bin deviation {:.2} sigma over 256 bins", mc.max_bin_z),
    )
}

/// Probability that the emulated `Round(Round(x0) / Round(x1))` overflows,
/// summed over the rounding intervals of both inputs.
fn emulated_overflow_probability(spec: &AnalysisSpec) -> f64 {
    let fmt = spec.format.to_format().unwrap();
    let cells = |a: f64, b: f64| -> Vec<(f64, f64)> {
        fmt.enumerate_finite()
            .unwrap()
            .into_iter()
            .filter_map(|z| {
                let iv = fmt.rounding_interval(z).unwrap();
                let w = iv.hi.min(b) - iv.lo.max(a);
                (w > 0.0).then(|| (z.to_f64(&fmt), w / (b - a)))
            })
            .collect()
    };
    let x0 = cells(10.0, 15.5);
    let x1 = cells(0.97, 2.0);
    let mut p = 0.0;
    for &(a, pa) in &x0 {
        for &(b, pb) in &x1 {
            if fmt.round_value(a / b).is_infinite() {
                p += pa * pb;
            }
        }
    }
    p
}

fn overflow_benchmark() -> Outcome {
    let spec = fixture(DIV_OVERFLOW);
    let a = cached(&DIV_RUN, DIV_OVERFLOW);
    let analytic = a.report.overflow_probability;
    let mc = a.report.mc.as_ref().unwrap();
    let n = mc.n_samples as f64;
    let p = emulated_overflow_probability(&spec);
    let expected = n * p;
    let band = 4.0 * (n * p * (1.0 - p)).sqrt();
    let count = mc.overflow_count as f64;
    let ok = (analytic - 7.75e-4).abs() <= 5e-5 && (count - expected).abs() <= band;
    (
        ok,
        format!(
            "analytic {analytic:.4e}; MC {} of {} overflow, expected {expected:.1} +- {band:.1}",
            mc.overflow_count, mc.n_samples
        ),
    )
}

fn within(inner: (f64, f64), outer: (f64, f64)) -> bool {
    inner.0 >= outer.0 && inner.1 <= outer.1
}

/// `outer` widened by a few ulps, for bounds computed in a different order.
fn widened(outer: (f64, f64)) -> (f64, f64) {
    let eps = 4.0 * f64::EPSILON;
    (outer.0 - eps * outer.0.abs(), outer.1 + eps * outer.1.abs())
}

fn sum8less() -> Outcome {
    let a = cached(&SUM_RUN, SUM8LESS);
    let u = FloatFormat::half().unit_roundoff();
    let bound = widened((8.0 * (1.0 - u).powi(7), 16.0 * (1.0 + u).powi(7)));
    let r = a.report.confidence(0.9999).unwrap();
    let mc = a.report.mc.as_ref().unwrap().empirical_range.unwrap();
    let ok = within(a.report.support, bound)
        && (r.lo - 9.0).abs() <= 0.25
        && (r.hi - 15.0).abs() <= 0.25
        && within(mc, a.report.support);
    (
        ok,
        format!(
            "support [{:.4}, {:.4}] in [{:.4}, {:.4}]; 99.99% [{:.4}, {:.4}]; MC [{:.4}, {:.4}]",
            a.report.support.0, a.report.support.1, bound.0, bound.1, r.lo, r.hi, mc.0, mc.1
        ),
    )
}

fn mul8less() -> Outcome {
    let a = cached(&MUL_RUN, MUL8LESS);
    let u = FloatFormat::half().unit_roundoff();
    let m = 6561.0 * (1.0 + u).powi(7);
    let bound = widened((-m, m));
    let r = a.report.confidence(0.9999).unwrap();
    let mc = a.report.mc.as_ref().unwrap().empirical_range.unwrap();
    let mag = r.lo.abs().max(r.hi.abs());
    let ok = within(a.report.support, bound)
        && (150.0..=260.0).contains(&mag)
        && within(mc, a.report.support);
    (
        ok,
        format!(
            "support [{:.3}, {:.3}] in +-{m:.3}; 99.99% magnitude {mag:.2} (target [150, 260]); MC [{:.1}, {:.1}]",
            a.report.support.0, a.report.support.1, mc.0, mc.1
        ),
    )
}

fn sup_on(d: &Density, f: impl Fn(f64) -> f64, xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(|x| (d.eval(x) - f(x)).abs()).fold(0.0, f64::max)
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

fn irwin_hall(n: i32, x: f64) -> f64 {
    if x <= 0.0 || x >= n as f64 {
        return 0.0;
    }
    let mut fact = 1.0;
    for j in 1..n {
        fact *= j as f64;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..=(x.floor() as i32) {
        sum += if k % 2 == 0 { binom } else { -binom } * (x - k as f64).powi(n - 1);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    sum / fact
}

fn arithmetic_oracles() -> Outcome {
    let start = Instant::now();
    let u01 = Density::uniform(0.0, 1.0).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    let mut s = u01.clone();
    for n in 2..=4 {
        s = roundprob::density::add(&s, &u01).unwrap();
        let e = sup_on(&s, |x| irwin_hall(n, x), linspace(0.0, n as f64, 4000));
        ok &= e <= 1e-6;
        parts.push(format!("sum of {n} {e:.1e}"));
    }
    // The log singularity at 0 is excluded: points down to 1e-9.
    let p = mul(&u01, &u01).unwrap();
    let xs = (0..4000).map(|i| 10f64.powf(-9.0 + 9.0 * i as f64 / 3999.0));
    let e = sup_on(&p, |t| -t.ln(), xs.chain(linspace(0.0, 1.0, 2000)));
    ok &= e <= 1e-6;
    parts.push(format!("product {e:.1e}"));
    let u12 = Density::uniform(1.0, 2.0).unwrap();
    let q = div(&u12, &u12).unwrap();
    let ratio = |t: f64| {
        let lo = 1f64.max(1.0 / t);
        let hi = 2f64.min(2.0 / t);
        if hi > lo {
            0.5 * (hi * hi - lo * lo)
        } else {
            0.0
        }
    };
    let e = sup_on(&q, ratio, linspace(0.5, 2.0, 4000));
    ok &= e <= 1e-6;
    parts.push(format!("ratio {e:.1e}"));
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    (ok, format!("{} in {secs:.2} s", parts.join(", ")))
}

/// Boundary between the values rounding to `inside` and those that do not,
/// found by bisection towards `outside`.
fn boundary(fmt: &FloatFormat, inside: f64, outside: f64) -> f64 {
    let z = fmt.round_nearest(inside).unwrap();
    let (mut a, mut b) = (inside, outside);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if fmt.round_nearest(m).unwrap() == z {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

fn appendix_identities() -> Outcome {
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for p in [1u32, 3, 5] {
        for rule in [OverflowRule::TopFloat, OverflowRule::Binade] {
            let fmt = FloatFormat::new(p, -4, 4).unwrap().with_overflow(rule);
            let u = fmt.unit_roundoff();
            let values = fmt.enumerate_finite().unwrap();
            for (i, &z) in values.iter().enumerate() {
                let v = z.to_f64(&fmt);
                if v < 0.0 {
                    continue;
                }
                let below = if i > 0 && values[i - 1].to_f64(&fmt) > 0.0 {
                    values[i - 1].to_f64(&fmt)
                } else {
                    0.0
                };
                let above = values
                    .get(i + 1)
                    .map_or(4.0 * fmt.max_finite(), |n| n.to_f64(&fmt));
                let lo = boundary(&fmt, v, below);
                let hi = boundary(&fmt, v, above);
                let r = t_range(z, &fmt).unwrap();
                let t_min = unclipped_t_min(z, &fmt).unwrap();
                let lhs = (hi - lo) / v;
                let rhs = u * (r.t_max - t_min) / ((1.0 - r.t_max * u) * (1.0 - t_min * u));
                worst = worst.max((lhs - rhs).abs() / lhs);
                // The t-range is the rounding interval in t = (1 - z/x)/u.
                let clip = |t: f64| t.clamp(-1.0, 1.0);
                worst = worst.max((clip((1.0 - v / lo) / u) - r.t_min).abs());
                worst = worst.max((clip((1.0 - v / hi) / u) - r.t_max).abs());
                let neg = t_range(z.negate(), &fmt).unwrap();
                worst = worst.max((neg.t_min - r.t_min).abs() + (neg.t_max - r.t_max).abs());
                checked += 1;
            }
        }
    }
    (
        worst <= 1e-9,
        format!("{checked} values, worst deviation {worst:.1e}"),
    )
}

fn determinism() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, text, cell) in [
        ("div_overflow", DIV_OVERFLOW, &DIV_RUN),
        ("sum8less", SUM8LESS, &SUM_RUN),
        ("mul8less", MUL8LESS, &MUL_RUN),
    ] {
        let first = cached(cell, text).report.to_json().unwrap();
        let second = analyze(&fixture(text)).unwrap().report.to_json().unwrap();
        let same = first == second;
        ok &= same;
        parts.push(format!(
            "{name} {}",
            if same { "identical" } else { "differs" }
        ));
    }
    (ok, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("typical density normalization", typical_normalization),
        ("exact vs typical error densities", exact_vs_typical),
        ("exact error density vs Monte-Carlo", exact_vs_mc),
        ("overflow benchmark", overflow_benchmark),
        ("sum8less", sum8less),
        ("mul8less", mul8less),
        ("density arithmetic oracles", arithmetic_oracles),
        ("rounding interval identities", appendix_identities),
        ("benchmark determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} [{:.1} s] {detail}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
