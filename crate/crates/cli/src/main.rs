use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roundprob::analysis::{error_mc, McReport};
use roundprob::errordist::{error_distribution, sup_distance, typical_density};
use roundprob::{analyze, AnalysisReport, AnalysisSpec, Density, Error, ErrorMode, FormatSpec};
use serde_json::json;

const BENCHMARKS: [(&str, &str); 3] = [
    (
        "div_overflow",
        include_str!("../../../fixtures/div_overflow.json"),
    ),
    ("sum8less", include_str!("../../../fixtures/sum8less.json")),
    ("mul8less", include_str!("../../../fixtures/mul8less.json")),
];

/// Points per exported density curve.
const CURVE_POINTS: usize = 2001;

#[derive(Parser)]
#[command(
    name = "roundprob",
    version,
    about = "Probabilistic range and rounding-error analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a term: output density, confidence ranges, overflow probability.
    Analyze {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Relative error density of the single input of a spec.
    ErrorDist {
        spec: PathBuf,
        /// Also report the sup-norm distance to the typical density.
        #[arg(long)]
        compare_typical: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Analysis with Monte-Carlo validation always enabled.
    Mc {
        spec: PathBuf,
        /// Sample rounding errors of the single input instead of the term.
        #[arg(long)]
        errors: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a bundled benchmark and write a comparison table.
    Bench {
        #[arg(value_parser = ["div_overflow", "sum8less", "mul8less"])]
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Exponent and mantissa bits, e.g. `5,10` for half precision.
    #[arg(long, value_name = "E,M", conflicts_with_all = ["emin", "emax", "p"])]
    format: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["emax", "p"])]
    emin: Option<i32>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["emin", "p"])]
    emax: Option<i32>,
    /// Mantissa bits.
    #[arg(long, requires_all = ["emin", "emax"])]
    p: Option<u32>,
    /// exact, typical, typical-finite-p or none.
    #[arg(long)]
    mode: Option<ErrorMode>,
    /// Comma-separated confidence levels.
    #[arg(long, value_delimiter = ',')]
    confidence: Option<Vec<f64>>,
    #[arg(long)]
    mc_n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn apply(&self, spec: &mut AnalysisSpec) -> Result<(), Error> {
        if let Some(f) = &self.format {
            let parts: Vec<&str> = f.split(',').map(str::trim).collect();
            let bits: Vec<u32> = parts.iter().filter_map(|s| s.parse().ok()).collect();
            if parts.len() != 2 || bits.len() != 2 {
                return Err(Error::InvalidArgument(format!(
                    "--format expects `exponent_bits,mantissa_bits`, got `{f}`"
                )));
            }
            spec.format = FormatSpec {
                exponent_bits: Some(bits[0]),
                e_min: None,
                e_max: None,
                mantissa_bits: bits[1],
                overflow: spec.format.overflow,
            };
        }
        if let (Some(lo), Some(hi), Some(p)) = (self.emin, self.emax, self.p) {
            spec.format = FormatSpec {
                exponent_bits: None,
                e_min: Some(lo),
                e_max: Some(hi),
                mantissa_bits: p,
                overflow: spec.format.overflow,
            };
        }
        if let Some(m) = self.mode {
            spec.error_mode = m;
        }
        if let Some(c) = &self.confidence {
            spec.confidence = c.clone();
        }
        if let Some(n) = self.mc_n {
            spec.mc.n = n;
        }
        if let Some(s) = self.seed {
            spec.mc.seed = Some(s);
        }
        spec.validate()
    }
}

/// Exit status of a failed command.
enum Failure {
    /// The spec could not be read, parsed or validated.
    Spec(Error),
    /// The spec is fine but the analysis is impossible.
    Analysis(Error),
    Output(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularDivision { .. } | Error::Feasibility(_) => Failure::Analysis(e),
            e => Failure::Spec(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Output(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { spec, common } => cmd_analyze(&spec, &common, false),
        Command::Mc {
            spec,
            errors: false,
            common,
        } => cmd_analyze(&spec, &common, true),
        Command::Mc {
            spec,
            errors: true,
            common,
        } => cmd_error_mc(&spec, &common),
        Command::ErrorDist {
            spec,
            compare_typical,
            common,
        } => cmd_error_dist(&spec, &common, compare_typical),
        Command::Bench { name, common } => cmd_bench(&name, &common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Spec(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Analysis(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Output(e)) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_spec(path: &Path, common: &Common) -> Result<AnalysisSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Spec(Error::InvalidArgument(format!(
            "cannot read {}: {e}",
            path.display()
        )))
    })?;
    let mut spec = AnalysisSpec::from_json(&text).map_err(Failure::Spec)?;
    common.apply(&mut spec).map_err(Failure::Spec)?;
    Ok(spec)
}

fn curve_csv(d: &Density, lo: f64, hi: f64, header: &str) -> String {
    let mut s = format!("{header}\n");
    for i in 0..CURVE_POINTS {
        let x = lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64;
        let _ = writeln!(s, "{x:.16e},{:.16e}", d.eval(x));
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn run_analysis(spec: &AnalysisSpec, out: &Path) -> Result<AnalysisReport, Failure> {
    let a = analyze(spec)?;
    let (lo, hi) = a.density.support();
    write(out, "report.json", &(a.report.to_json()? + "\n"))?;
    write(
        out,
        "output_density.csv",
        &curve_csv(&a.density, lo, hi, "x,density"),
    )?;
    if let Some(mc) = &a.report.mc {
        write(out, "mc_histogram.csv", &mc.histogram.to_csv())?;
    }
    Ok(a.report)
}

fn print_summary(r: &AnalysisReport) {
    println!("term: {}", r.term);
    println!("support: [{:.6}, {:.6}]", r.support.0, r.support.1);
    for c in &r.confidence_ranges {
        println!("{}% range: [{:.6}, {:.6}]", c.level * 100.0, c.lo, c.hi);
    }
    println!("overflow probability: {:.4e}", r.overflow_probability);
    if let Some(mc) = &r.mc {
        print_mc(mc);
    }
}

fn print_mc(mc: &McReport) {
    println!(
        "monte carlo: n={} seed={} overflow rate {:.4e} max bin z {:.2}",
        mc.n_samples, mc.seed, mc.overflow_rate, mc.max_bin_z
    );
    if let Some((lo, hi)) = mc.empirical_range {
        println!("empirical range: [{lo:.6}, {hi:.6}]");
    }
}

fn cmd_analyze(path: &Path, common: &Common, force_mc: bool) -> Result<(), Failure> {
    let mut spec = load_spec(path, common)?;
    if force_mc {
        spec.mc.enabled = true;
    }
    let report = run_analysis(&spec, &common.out)?;
    print_summary(&report);
    Ok(())
}

/// The single input distribution of an error-density spec.
fn single_input(spec: &AnalysisSpec) -> Result<Density, Failure> {
    let mut it = spec.inputs.iter();
    match (it.next(), it.next()) {
        (Some((_, d)), None) => Ok(Density::from_spec(d)?),
        _ => Err(Failure::Spec(Error::InvalidArgument(format!(
            "error densities need exactly one input, the spec has {}",
            spec.inputs.len()
        )))),
    }
}

fn cmd_error_dist(path: &Path, common: &Common, compare_typical: bool) -> Result<(), Failure> {
    let spec = load_spec(path, common)?;
    let input = single_input(&spec)?;
    let fmt = spec.format.to_format()?;
    let dist = error_distribution(&input, &fmt, spec.error_mode)?;
    let distance = if compare_typical {
        Some(sup_distance(
            &dist.density,
            &typical_density()?.density,
            4001,
        ))
    } else {
        None
    };
    let header = json!({
        "mode": dist.mode,
        "format": FormatSpec::from_format(&fmt),
        "input": spec.inputs.values().next(),
        "continuous_mass": dist.continuous_mass,
        "excluded": dist.excluded,
        "assumption_mass": dist.assumption_mass,
        "density_at_zero": dist.density.eval(0.0),
        "sup_distance_to_typical": distance,
    });
    let out = &common.out;
    write(
        out,
        "error_density.json",
        &(serde_json::to_string_pretty(&header).map_err(Error::from)? + "\n"),
    )?;
    write(
        out,
        "error_density.csv",
        &curve_csv(&dist.density, -1.0, 1.0, "t,density"),
    )?;
    println!("mode: {}", dist.mode);
    println!("density at 0: {:.6}", dist.density.eval(0.0));
    if let Some(d) = distance {
        println!("sup distance to typical: {d:.6}");
    }
    Ok(())
}

fn cmd_error_mc(path: &Path, common: &Common) -> Result<(), Failure> {
    let spec = load_spec(path, common)?;
    let input = single_input(&spec)?;
    let fmt = spec.format.to_format()?;
    let seed = spec.mc.seed.unwrap_or_else(rand::random);
    let (mc, dist) = error_mc(&input, &fmt, spec.mc.n, seed)?;
    let out = &common.out;
    write(
        out,
        "error_mc.json",
        &(serde_json::to_string_pretty(&mc).map_err(Error::from)? + "\n"),
    )?;
    write(out, "mc_histogram.csv", &mc.histogram.to_csv())?;
    write(
        out,
        "error_density.csv",
        &curve_csv(&dist.density, -1.0, 1.0, "t,density"),
    )?;
    print_mc(&mc);
    Ok(())
}

fn fmt_range(r: Option<(f64, f64)>) -> String {
    match r {
        Some((lo, hi)) => format!("[{lo:.6}, {hi:.6}]"),
        None => "-".into(),
    }
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

fn reference_range(spec: &AnalysisSpec, key: &str) -> Option<(f64, f64)> {
    let v = spec.reference.get(key)?.as_array()?;
    Some((v.first()?.as_f64()?, v.get(1)?.as_f64()?))
}

fn reference_value(spec: &AnalysisSpec, key: &str) -> Option<f64> {
    spec.reference.get(key)?.as_f64()
}

/// Rows of `quantity,analytic,monte_carlo,reference`.
fn comparison(spec: &AnalysisSpec, r: &AnalysisReport) -> Vec<[String; 4]> {
    let mc = r.mc.as_ref();
    let mut rows = vec![[
        "support".to_string(),
        fmt_range(Some(r.support)),
        fmt_range(mc.and_then(|m| m.empirical_range)),
        fmt_range(reference_range(spec, "exact_range")),
    ]];
    for c in &r.confidence_ranges {
        rows.push([
            format!("confidence {}", c.level),
            fmt_range(Some((c.lo, c.hi))),
            "-".into(),
            fmt_range(reference_range(spec, &format!("confidence_{}", c.level))),
        ]);
    }
    rows.push([
        "overflow probability".into(),
        fmt_value(Some(r.overflow_probability)),
        fmt_value(mc.map(|m| m.overflow_rate)),
        fmt_value(reference_value(spec, "overflow_probability")),
    ]);
    if let Some(v) = reference_value(spec, "mc_overflow_rate") {
        rows.push([
            "recorded overflow rate".into(),
            "-".into(),
            fmt_value(mc.map(|m| m.overflow_rate)),
            fmt_value(Some(v)),
        ]);
    }
    rows
}

fn cmd_bench(name: &str, common: &Common) -> Result<(), Failure> {
    let text = BENCHMARKS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .expect("clap restricts benchmark names");
    let mut spec = AnalysisSpec::from_json(text).map_err(Failure::Spec)?;
    common.apply(&mut spec).map_err(Failure::Spec)?;
    let report = run_analysis(&spec, &common.out)?;
    let rows = comparison(&spec, &report);
    let mut csv = String::from("quantity,analytic,monte_carlo,reference\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{}",
            r.iter()
                .map(|c| format!("\"{c}\""))
                .collect::<Vec<_>>()
                .join(",")
        );
    }
    write(&common.out, "comparison.csv", &csv)?;
    let w: Vec<usize> = (0..4)
        .map(|i| {
            rows.iter()
                .map(|r| r[i].len())
                .chain([12])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let header = ["quantity", "analytic", "monte carlo", "reference"].map(String::from);
    for r in std::iter::once(&header).chain(&rows) {
        println!(
            "{:<w0$}  {:<w1$}  {:<w2$}  {}",
            r[0],
            r[1],
            r[2],
            r[3],
            w0 = w[0],
            w1 = w[1],
            w2 = w[2]
        );
    }
    Ok(())
}
