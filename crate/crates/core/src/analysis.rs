//! Range analysis of output densities and Monte-Carlo validation by
//! re-executing terms in the emulated format.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::Density;
use crate::error::{invalid, Error, Result};
use crate::errordist::{exact_error_density, ErrorDistribution, ErrorMode};
use crate::json::{f17, f17_opt_pair, f17_pair};
use crate::lang::{interpret_term, parse_term, ProbContext, RoundingEvent, Term, TermKind};
use crate::minifloat::{FloatFormat, OverflowRule};
use crate::spec::{AnalysisSpec, DistributionSpec, FormatSpec};

/// Samples per Monte-Carlo block. Each block has its own random stream.
pub const MC_BLOCK: u64 = 65_536;
pub const DEFAULT_BINS: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceRange {
    #[serde(serialize_with = "f17")]
    pub level: f64,
    #[serde(serialize_with = "f17")]
    pub lo: f64,
    #[serde(serialize_with = "f17")]
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RangeSummary {
    #[serde(serialize_with = "f17_pair")]
    pub support: (f64, f64),
    pub confidence_ranges: Vec<ConfidenceRange>,
    /// Output mass beyond the overflow threshold of the format.
    #[serde(serialize_with = "f17")]
    pub output_tail_mass: f64,
}

/// Largest magnitude that does not round to infinity.
pub fn overflow_window(fmt: &FloatFormat) -> f64 {
    match fmt.overflow_rule() {
        OverflowRule::TopFloat => fmt.max_finite(),
        OverflowRule::Binade => fmt.overflow_threshold(),
    }
}

/// Support, equal-tail confidence ranges (ascending in level and nested)
/// and the output mass outside the finite range of `fmt`.
pub fn range_report(d: &Density, fmt: &FloatFormat, levels: &[f64]) -> RangeSummary {
    let support = d.support();
    let mut sorted: Vec<f64> = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut ranges: Vec<ConfidenceRange> = Vec::with_capacity(sorted.len());
    for level in sorted {
        let (mut lo, mut hi) = if level >= 1.0 {
            support
        } else {
            let a = 0.5 * (1.0 - level);
            (d.quantile(a), d.quantile(1.0 - a))
        };
        if let Some(prev) = ranges.last() {
            lo = lo.min(prev.lo);
            hi = hi.max(prev.hi);
        }
        ranges.push(ConfidenceRange { level, lo, hi });
    }
    let w = overflow_window(fmt);
    RangeSummary {
        support,
        confidence_ranges: ranges,
        output_tail_mass: d.mass_outside(-w, w),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    #[serde(serialize_with = "f17")]
    pub lo: f64,
    #[serde(serialize_with = "f17")]
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i == self.counts.len() {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * i as f64 / self.counts.len() as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bin_lo,bin_hi,count` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{c}\n",
                self.edge(i),
                self.edge(i + 1)
            ));
        }
        s
    }

    fn index(&self, v: f64) -> Option<usize> {
        if !(v >= self.lo && v <= self.hi) {
            return None;
        }
        let n = self.counts.len();
        let i = ((v - self.lo) / (self.hi - self.lo) * n as f64) as usize;
        Some(i.min(n - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport {
    pub n_samples: u64,
    pub seed: u64,
    #[serde(serialize_with = "f17_opt_pair")]
    pub empirical_range: Option<(f64, f64)>,
    pub overflow_count: u64,
    #[serde(serialize_with = "f17")]
    pub overflow_rate: f64,
    /// Samples without a value to bin: results rounding to zero in error
    /// sampling, or finite results outside the histogram range.
    pub excluded_count: u64,
    pub histogram: Histogram,
    /// Largest difference between the normalized histogram and the analytic
    /// bin-averaged density.
    #[serde(serialize_with = "f17")]
    pub sup_discrepancy: f64,
    /// Largest per-bin deviation in binomial standard deviations. Rounded
    /// results lie on the grid of the format, so for term outputs bins that
    /// hold one grid point more than their neighbours stand out here.
    #[serde(serialize_with = "f17")]
    pub max_bin_z: f64,
}

enum Outcome {
    Value(f64),
    Overflow,
    Excluded,
}

struct Tally {
    counts: Vec<u64>,
    overflow: u64,
    excluded: u64,
    min: f64,
    max: f64,
}

fn run_blocks<F>(n: u64, seed: u64, hist: &Histogram, sample: F) -> Tally
where
    F: Fn(&mut ChaCha8Rng) -> Outcome + Sync,
{
    let blocks = n.div_ceil(MC_BLOCK);
    let partial: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = MC_BLOCK.min(n - b * MC_BLOCK);
            let mut t = Tally {
                counts: vec![0; hist.bins()],
                overflow: 0,
                excluded: 0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            };
            for _ in 0..count {
                match sample(&mut rng) {
                    Outcome::Overflow => t.overflow += 1,
                    Outcome::Excluded => t.excluded += 1,
                    Outcome::Value(v) => {
                        t.min = t.min.min(v);
                        t.max = t.max.max(v);
                        match hist.index(v) {
                            Some(i) => t.counts[i] += 1,
                            None => t.excluded += 1,
                        }
                    }
                }
            }
            t
        })
        .collect();
    let mut total = Tally {
        counts: vec![0; hist.bins()],
        overflow: 0,
        excluded: 0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for t in partial {
        for (a, b) in total.counts.iter_mut().zip(&t.counts) {
            *a += b;
        }
        total.overflow += t.overflow;
        total.excluded += t.excluded;
        total.min = total.min.min(t.min);
        total.max = total.max.max(t.max);
    }
    total
}

/// Sup-norm and per-bin z-score discrepancies between histogram counts and
/// the bin masses of `d`.
fn discrepancy(hist: &Histogram, d: &Density) -> (f64, f64) {
    let total = hist.total() as f64;
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let masses: Vec<f64> = (0..hist.bins())
        .map(|i| (d.mass_below(hist.edge(i + 1)) - d.mass_below(hist.edge(i))).max(0.0))
        .collect();
    let inside: f64 = masses.iter().sum();
    let (mut sup, mut zmax) = (0.0f64, 0.0f64);
    for (i, (&c, &m)) in hist.counts.iter().zip(&masses).enumerate() {
        let w = hist.edge(i + 1) - hist.edge(i);
        let p = if inside > 0.0 { m / inside } else { 0.0 };
        let c = c as f64;
        sup = sup.max((c / (total * w) - p / w).abs());
        let var = (total * p * (1.0 - p)).max(1.0);
        zmax = zmax.max((c - total * p).abs() / var.sqrt());
    }
    (sup, zmax)
}

fn finish(n: u64, seed: u64, mut hist: Histogram, t: Tally, analytic: &Density) -> McReport {
    hist.counts = t.counts;
    let (sup, z) = discrepancy(&hist, analytic);
    McReport {
        n_samples: n,
        seed,
        empirical_range: (t.min <= t.max).then_some((t.min, t.max)),
        overflow_count: t.overflow,
        overflow_rate: t.overflow as f64 / n as f64,
        excluded_count: t.excluded,
        histogram: hist,
        sup_discrepancy: sup,
        max_bin_z: z,
    }
}

/// Evaluate `term` once in the emulated format. `overflow` is set when any
/// rounding step produces an infinity.
fn emulate(
    term: &Term,
    vals: &BTreeMap<&str, f64>,
    fmt: &FloatFormat,
    quantize: bool,
    overflow: &mut bool,
) -> f64 {
    match &term.kind {
        TermKind::Literal(v) => *v,
        TermKind::Var(name) => {
            let x = vals[name.as_str()];
            if !quantize {
                return x;
            }
            let r = fmt.round_value(x);
            *overflow |= r.is_infinite();
            r
        }
        TermKind::BinOp { op, left, right } => {
            let a = emulate(left, vals, fmt, quantize, overflow);
            let b = emulate(right, vals, fmt, quantize, overflow);
            let exact = op.apply(a, b);
            if term.vars.is_empty() {
                // Constant subterms are folded without rounding.
                return exact;
            }
            let r = fmt.round_value(exact);
            *overflow |= !r.is_finite();
            r
        }
    }
}

/// Re-execute `term` on `n` sampled inputs, rounding after every operation
/// (and every input when `quantize_inputs` is set), and compare the finite
/// results with `analytic` over a 256-bin histogram spanning its support.
pub fn monte_carlo(
    term: &Term,
    ctx: &ProbContext,
    fmt: &FloatFormat,
    n: u64,
    seed: u64,
    analytic: &Density,
) -> Result<McReport> {
    if n == 0 {
        return invalid("Monte-Carlo needs at least one sample");
    }
    crate::lang::check_tree(term)?;
    let names: Vec<&str> = term.vars.iter().map(String::as_str).collect();
    let mut dens = Vec::with_capacity(names.len());
    for name in &names {
        dens.push(
            ctx.inputs
                .get(*name)
                .ok_or_else(|| Error::UnboundVariable(name.to_string()))?,
        );
    }
    let quantize = ctx.quantize_inputs;
    let (lo, hi) = analytic.support();
    let hist = Histogram {
        lo,
        hi,
        counts: vec![0; DEFAULT_BINS],
    };
    let t = run_blocks(n, seed, &hist, |rng| {
        let vals: BTreeMap<&str, f64> = names
            .iter()
            .zip(&dens)
            .map(|(name, d)| (*name, d.quantile(rng.random::<f64>())))
            .collect();
        let mut overflow = false;
        let r = emulate(term, &vals, fmt, quantize, &mut overflow);
        if overflow {
            Outcome::Overflow
        } else {
            Outcome::Value(r)
        }
    });
    Ok(finish(n, seed, hist, t, analytic))
}

/// Sample `x ~ input`, round it, and histogram `t = (x - Round(x)) / (x u)`
/// on `[-1, 1]` against the exact error density. Inputs that round to zero
/// or have `|t| > 1` are excluded; infinities count as overflow.
pub fn error_mc(
    input: &Density,
    fmt: &FloatFormat,
    n: u64,
    seed: u64,
) -> Result<(McReport, ErrorDistribution)> {
    if n == 0 {
        return invalid("Monte-Carlo needs at least one sample");
    }
    let analytic = exact_error_density(input, fmt)?;
    let u = fmt.unit_roundoff();
    let hist = Histogram {
        lo: -1.0,
        hi: 1.0,
        counts: vec![0; DEFAULT_BINS],
    };
    let t = run_blocks(n, seed, &hist, |rng| {
        let x = input.quantile(rng.random::<f64>());
        let z = fmt.round_value(x);
        if z.is_infinite() {
            return Outcome::Overflow;
        }
        if z == 0.0 {
            return Outcome::Excluded;
        }
        let t = (x - z) / (x * u);
        if t.abs() > 1.0 {
            Outcome::Excluded
        } else {
            Outcome::Value(t)
        }
    });
    Ok((finish(n, seed, hist, t, &analytic.density), analytic))
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub term: String,
    pub format: FormatSpec,
    pub error_mode: ErrorMode,
    pub quantize_inputs: bool,
    #[serde(serialize_with = "f17_pair")]
    pub support: (f64, f64),
    pub confidence_ranges: Vec<ConfidenceRange>,
    /// Probability that some rounding step overflows; without rounding,
    /// the output mass beyond the overflow threshold.
    #[serde(serialize_with = "f17")]
    pub overflow_probability: f64,
    /// Probability that some rounding step underflows to zero or beyond
    /// the relative error bound.
    #[serde(serialize_with = "f17")]
    pub excluded_mass: f64,
    #[serde(serialize_with = "f17")]
    pub output_tail_mass: f64,
    pub rounding_events: Vec<RoundingEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McReport>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn confidence(&self, level: f64) -> Option<&ConfidenceRange> {
        self.confidence_ranges.iter().find(|r| r.level == level)
    }
}

/// An analysis report together with the output density it summarizes.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub density: Density,
}

/// Term with constant inputs substituted, and the context of the others.
pub fn prepare(spec: &AnalysisSpec) -> Result<(Term, ProbContext, FloatFormat)> {
    spec.validate()?;
    let fmt = spec.format.to_format()?;
    let mut term = parse_term(&spec.term)?;
    let mut ctx = ProbContext::new(spec.error_mode);
    ctx.quantize_inputs = spec.quantize_inputs;
    for (name, d) in &spec.inputs {
        if !term.vars.contains(name) {
            log::warn!("input `{name}` does not occur in the term");
            continue;
        }
        match d {
            DistributionSpec::Constant { value } => term = term.substitute(name, *value),
            _ => {
                ctx.inputs.insert(name.clone(), Density::from_spec(d)?);
            }
        }
    }
    Ok((term, ctx, fmt))
}

/// Run the full pipeline of `spec`: interpretation, range analysis and
/// (when enabled) Monte-Carlo validation. A missing seed is drawn at random
/// and recorded in the report.
pub fn analyze(spec: &AnalysisSpec) -> Result<Analysis> {
    let (term, ctx, fmt) = prepare(spec)?;
    let interp = interpret_term(&term, &ctx, &fmt)?;
    let density = match interp.density() {
        Some(d) => d.clone(),
        None => return invalid(format!("term `{term}` is constant")),
    };
    let range = range_report(&density, &fmt, &spec.confidence);
    let overflow_probability = if interp.events.is_empty() {
        range.output_tail_mass
    } else {
        interp.overflow_probability()
    };
    let mc = if spec.mc.enabled {
        let seed = spec.mc.seed.unwrap_or_else(rand::random);
        Some(monte_carlo(&term, &ctx, &fmt, spec.mc.n, seed, &density)?)
    } else {
        None
    };
    let report = AnalysisReport {
        name: spec.name.clone(),
        term: term.to_string(),
        format: FormatSpec::from_format(&fmt),
        error_mode: spec.error_mode,
        quantize_inputs: spec.quantize_inputs,
        support: range.support,
        confidence_ranges: range.confidence_ranges,
        overflow_probability,
        excluded_mass: interp.underflow_probability(),
        output_tail_mass: range.output_tail_mass,
        rounding_events: interp.events,
        mc,
    };
    Ok(Analysis { report, density })
}
