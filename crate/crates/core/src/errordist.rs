//! Distribution of the relative rounding error `t = (x - Round(x)) / (x u)`,
//! measured in units of the unit roundoff so that `t ∈ [-1, 1]`.
//!
//! Three models are available: the exact density induced by an input density
//! and a format, obtained by summing over every representable value; the
//! closed-form typical density (the large-precision limit); and the typical
//! density at a finite precision.

use serde::{Deserialize, Serialize};

use crate::cheb;
use crate::density::{ApproxOptions, Density};
use crate::error::{invalid, Error, Result};
use crate::minifloat::{pow2, FloatFormat, MiniFloat, OverflowRule};

/// Mass of the input that rounds to representables where the assumptions
/// behind the typical density are weakest (the lowest and highest binades).
pub const ASSUMPTION_WARN_MASS: f64 = 1e-3;

/// Breakpoints of an error density closer than this are merged.
const BREAK_MERGE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    Exact,
    Typical,
    TypicalFiniteP,
    /// No rounding at all: infinite-precision semantics.
    None,
}

impl std::fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErrorMode::Exact => "exact",
            ErrorMode::Typical => "typical",
            ErrorMode::TypicalFiniteP => "typical_finite_p",
            ErrorMode::None => "none",
        })
    }
}

impl std::str::FromStr for ErrorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<ErrorMode> {
        match s {
            "exact" => Ok(ErrorMode::Exact),
            "typical" => Ok(ErrorMode::Typical),
            "typical_finite_p" | "typical-finite-p" => Ok(ErrorMode::TypicalFiniteP),
            "none" => Ok(ErrorMode::None),
            _ => invalid(format!("unknown error mode `{s}`")),
        }
    }
}

/// Probability that the input rounds to zero or to an infinity. These
/// events carry no relative-error density.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExcludedMass {
    /// `P(|X| < 2^e_min / (1 + u))`: rounds to zero, or to the smallest
    /// positive value with a relative error beyond `u`.
    pub underflow: f64,
    /// `P(X rounds to ±∞)`.
    pub overflow: f64,
}

impl ExcludedMass {
    pub fn total(&self) -> f64 {
        self.underflow + self.overflow
    }
}

/// A normalized density of `t` on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct ErrorDistribution {
    pub density: Density,
    pub mode: ErrorMode,
    pub format: Option<FloatFormat>,
    pub excluded: ExcludedMass,
    /// Mass of the error density before renormalization.
    pub continuous_mass: f64,
    /// Input mass in the lowest and highest binades.
    pub assumption_mass: f64,
}

/// The values of `t` for which `z / (1 - t u)` rounds to `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TRange {
    pub owner: MiniFloat,
    pub t_min: f64,
    pub t_max: f64,
}

fn parts(z: MiniFloat, fmt: &FloatFormat) -> Result<(i32, u64)> {
    match z {
        MiniFloat::Finite {
            exponent, mantissa, ..
        } => {
            fmt.value(false, exponent, mantissa)?;
            Ok((exponent, mantissa))
        }
        _ => invalid(format!("{z} has no t-range")),
    }
}

/// `[t_min, t_max]` for a positive or negative representable; the sign does
/// not change the range.
pub fn t_range(z: MiniFloat, fmt: &FloatFormat) -> Result<TRange> {
    let (e, k) = parts(z, fmt)?;
    let (t_min, t_max) = t_bounds(fmt, e, k);
    Ok(TRange {
        owner: z,
        t_min,
        t_max,
    })
}

pub(crate) fn t_bounds(fmt: &FloatFormat, e: i32, k: u64) -> (f64, f64) {
    let q = pow2(fmt.precision() as i32 + 1);
    let kf = k as f64;
    let top = e == fmt.e_max() && k == fmt.mantissas() - 1;
    if top {
        let lo = -q / (2.0 * q - 3.0);
        return match fmt.overflow_rule() {
            OverflowRule::TopFloat => (lo, 0.0),
            OverflowRule::Binade => (lo, 1.0),
        };
    }
    if k == 0 {
        let hi = q / (q + 1.0);
        if e == fmt.e_min() {
            return (-1.0, hi);
        }
        return (-q / (2.0 * q - 1.0), hi);
    }
    (-q / (q + 2.0 * kf - 1.0), q / (q + 2.0 * kf + 1.0))
}

/// Lower end of the t-range before clipping to `[-1, 1]`. It differs from
/// [`t_range`] only for the smallest positive value, where it is `-2^(p+1)`.
pub fn unclipped_t_min(z: MiniFloat, fmt: &FloatFormat) -> Result<f64> {
    let (e, k) = parts(z, fmt)?;
    if e == fmt.e_min() && k == 0 {
        return Ok(-pow2(fmt.precision() as i32 + 1));
    }
    Ok(t_bounds(fmt, e, k).0)
}

/// `C(e, k) = |z| u / (⌈z⌉ - ⌊z⌋)`, the weight of `z` in the error density
/// of a locally flat input.
pub fn coefficient_c(e: i32, k: u64, fmt: &FloatFormat) -> Result<f64> {
    fmt.value(false, e, k)?;
    let p = fmt.precision() as i32;
    let two_p = pow2(p);
    let top = e == fmt.e_max() && k == fmt.mantissas() - 1;
    Ok(if top {
        match fmt.overflow_rule() {
            OverflowRule::TopFloat => (2.0 * two_p - 1.0) / two_p,
            OverflowRule::Binade => (2.0 * two_p - 1.0) / (3.0 * two_p),
        }
    } else if k == 0 && e == fmt.e_min() {
        1.0 / (two_p + 1.0)
    } else if k == 0 {
        2.0 / 3.0
    } else {
        (two_p + k as f64) / (2.0 * two_p)
    })
}

/// Largest mantissa `k` with `k ≤ 2^p (1/|t| - 1) - 1/2`, clamped to
/// `[-1, 2^p - 1]`; every mantissa qualifies when `|t| ≤ 1/2`.
pub fn mantissa_cutoff(t: f64, fmt: &FloatFormat) -> i64 {
    let top = fmt.mantissas() as i64 - 1;
    let a = t.abs();
    if a <= 0.5 {
        return top;
    }
    let v = (pow2(fmt.precision() as i32) * (1.0 / a - 1.0) - 0.5).floor();
    (v as i64).clamp(-1, top)
}

/// Largest generic mantissa (`k ≥ 1`) whose t-range contains `t`.
fn admissible_k(t: f64, p: i32) -> f64 {
    if t == 0.0 {
        return f64::INFINITY;
    }
    let two_p = pow2(p);
    if t > 0.0 {
        (two_p * (1.0 / t - 1.0) - 0.5).floor()
    } else {
        (two_p * (1.0 / -t - 1.0) + 0.5).floor()
    }
}

/// Endpoints of every t-range of the format, clipped to `[-1, 1]`.
fn range_breakpoints(fmt: &FloatFormat) -> Vec<f64> {
    let mut b = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
    let e_mid = if fmt.e_min() < fmt.e_max() - 1 {
        fmt.e_min() + 1
    } else {
        fmt.e_max()
    };
    for k in 0..fmt.mantissas() {
        let (lo, hi) = t_bounds(fmt, e_mid, k);
        b.push(lo);
        b.push(hi);
    }
    for (e, k) in [(fmt.e_min(), 0), (fmt.e_max(), fmt.mantissas() - 1)] {
        let (lo, hi) = t_bounds(fmt, e, k);
        b.push(lo);
        b.push(hi);
    }
    b.retain(|t| (-1.0..=1.0).contains(t));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

fn excluded_mass(f: &Density, fmt: &FloatFormat) -> ExcludedMass {
    let u = fmt.unit_roundoff();
    let small = fmt.min_positive() / (1.0 + u);
    let underflow = (f.mass_below(small) - f.mass_below(-small)).max(0.0);
    let overflow = match fmt.overflow_rule() {
        OverflowRule::TopFloat => {
            let m = fmt.max_finite();
            f.mass_above(m) + f.mass_below(-m)
        }
        OverflowRule::Binade => {
            let m = fmt.overflow_threshold();
            f.mass_above(m) + f.mass_below(-m)
        }
    };
    ExcludedMass {
        underflow,
        overflow: overflow.max(0.0),
    }
}

/// Input mass in the binades `e_min` and `e_max`, where rounding sees the
/// ends of the exponent range.
pub fn assumption_mass(f: &Density, fmt: &FloatFormat) -> f64 {
    let lo = pow2(fmt.e_min() + 1);
    let hi = pow2(fmt.e_max());
    let low_band = (f.mass_below(lo) - f.mass_below(-lo)).max(0.0);
    (low_band + f.mass_above(hi) + f.mass_below(-hi)).min(1.0)
}

/// Exact density of the relative error of `Round(X)` for `X ~ f`:
///
/// `d(t) = Σ_z 1[t ∈ T(z)] f(z / (1 - t u)) u |z| / (1 - t u)²`
///
/// over every finite non-zero representable `z`. The mass of inputs that
/// round to zero or overflow is reported in [`ExcludedMass`] and the
/// remaining density is renormalized.
pub fn exact_error_density(f: &Density, fmt: &FloatFormat) -> Result<ErrorDistribution> {
    fmt.check_enumerable()?;
    let excluded = excluded_mass(f, fmt);
    let total = f.total_mass();
    if !(total - excluded.total() > 1e-14 * total) {
        return Err(Error::InvalidArgument(
            "input has no mass in the finite range of the format".into(),
        ));
    }
    let assumption = assumption_mass(f, fmt);
    if assumption > ASSUMPTION_WARN_MASS {
        log::warn!(
            "{:.3e} of the input mass lies in the extreme binades of {fmt}; \
             the typical error model may not apply",
            assumption
        );
    }

    let u = fmt.unit_roundoff();
    let p = fmt.precision() as i32;

    let mut breaks = range_breakpoints(fmt);
    for b in f.breakpoints() {
        if b == 0.0 {
            continue;
        }
        if let MiniFloat::Finite { .. } = fmt.round_unchecked(b) {
            let z = fmt.round_value(b);
            let t = (1.0 - z / b) / u;
            if t > -1.0 && t < 1.0 {
                breaks.push(t);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|later, earlier| *later - *earlier < BREAK_MERGE);

    let grid = GridSums::new(f, fmt);
    let d = |t: f64| -> f64 {
        let w = 1.0 - t * u;
        let kadm = admissible_k(t, p);
        grid.eval(f, fmt, t, w, kadm) * u / (w * w)
    };

    let opts = ApproxOptions {
        max_pieces: ApproxOptions::default().max_pieces.max(2 * breaks.len()),
        ..ApproxOptions::fine_grained()
    };
    let raw = Density::from_fn(d, &breaks, &opts)?;
    let continuous_mass = raw.total_mass();
    let density = raw.normalize()?;
    Ok(ErrorDistribution {
        density,
        mode: ErrorMode::Exact,
        format: Some(*fmt),
        excluded,
        continuous_mass,
        assumption_mass: assumption,
    })
}

/// A representable value `z` whose preimages `±z/w` carry input mass.
struct GridPoint {
    e: i32,
    k: u64,
    /// Signed value `±z`.
    z: f64,
}

/// The sum `Σ f(z/w)·|z|` over the grid, split by how each point enters.
///
/// As `t` runs over `[-1, 1]`, the preimage `z/w` stays in
/// `[z/(1+u), z/(1-u)]`. When that interval lies inside one piece of `f`,
/// the term is a polynomial in `δ = tu/w`, since `z/w = z(1 + δ)`. Such
/// terms are summed once as Chebyshev series in `δ`. The general mantissas
/// are kept as prefix sums over `k`, because a general value is admissible
/// exactly when `k` is at most [`admissible_k`]. The rest are evaluated
/// directly.
struct GridSums {
    dlo: f64,
    dhi: f64,
    /// `general[j]`: sum over general points with `1 <= k <= j`.
    general: Vec<Vec<f64>>,
    /// Smallest positive value; the other leading mantissas; the top float.
    first: Vec<f64>,
    leading: Vec<f64>,
    top: Vec<f64>,
    direct: Vec<GridPoint>,
}

impl GridSums {
    fn new(f: &Density, fmt: &FloatFormat) -> GridSums {
        let u = fmt.unit_roundoff();
        let two_p = pow2(fmt.precision() as i32);
        let top_k = fmt.mantissas() - 1;
        let (dlo, dhi) = (-u / (1.0 + u), u / (1.0 - u));
        let n = f
            .pieces()
            .iter()
            .map(|p| p.coeffs().len())
            .max()
            .unwrap_or(1);
        let nodes: Vec<f64> = cheb::points(n)
            .iter()
            .map(|&s| cheb::from_unit(s, dlo, dhi))
            .collect();
        let zero = vec![0.0; n];
        let mut rows = vec![zero.clone(); top_k as usize + 1];
        let (mut first, mut leading, mut top) = (zero.clone(), zero.clone(), zero);
        let mut direct = Vec::new();
        let (flo, fhi) = f.support();
        let pieces = f.pieces();
        for e in fmt.e_min()..=fmt.e_max() {
            let scale = pow2(e);
            for negative in [false, true] {
                let sign = if negative { -1.0 } else { 1.0 };
                // Only mantissas whose preimage interval can meet the support.
                let (mlo, mhi) = if negative { (-fhi, -flo) } else { (flo, fhi) };
                let kmin = ((mlo * (1.0 - u) / scale - 1.0) * two_p).floor().max(0.0);
                let kmax = ((mhi * (1.0 + u) / scale - 1.0) * two_p)
                    .ceil()
                    .min(top_k as f64);
                if kmin > kmax {
                    continue;
                }
                for k in kmin as u64..=kmax as u64 {
                    let mag = scale * (1.0 + k as f64 / two_p);
                    let z = sign * mag;
                    let (a, b) = sorted_pair(z / (1.0 + u), z / (1.0 - u));
                    if b < flo || a > fhi {
                        continue;
                    }
                    let piece = match (f.locate(a), f.locate(b)) {
                        (Some(i), Some(j)) if i == j => &pieces[i],
                        _ => {
                            direct.push(GridPoint { e, k, z });
                            continue;
                        }
                    };
                    let values: Vec<f64> = nodes
                        .iter()
                        .map(|&d| piece.eval(z * (1.0 + d)) * mag)
                        .collect();
                    let c = cheb::coeffs(&values);
                    let acc = if e == fmt.e_max() && k == top_k {
                        &mut top
                    } else if k == 0 && e == fmt.e_min() {
                        &mut first
                    } else if k == 0 {
                        &mut leading
                    } else {
                        &mut rows[k as usize]
                    };
                    for (x, y) in acc.iter_mut().zip(&c) {
                        *x += y;
                    }
                }
            }
        }
        for j in 1..rows.len() {
            let (done, rest) = rows.split_at_mut(j);
            for (x, y) in rest[0].iter_mut().zip(&done[j - 1]) {
                *x += y;
            }
        }
        GridSums {
            dlo,
            dhi,
            general: rows,
            first,
            leading,
            top,
            direct,
        }
    }

    fn eval(&self, f: &Density, fmt: &FloatFormat, t: f64, w: f64, kadm: f64) -> f64 {
        let u = fmt.unit_roundoff();
        let top_k = fmt.mantissas() - 1;
        let inside = |e: i32, k: u64| {
            let (lo, hi) = t_bounds(fmt, e, k);
            t >= lo && t <= hi
        };
        let admissible = |e: i32, k: u64| {
            if k == 0 || (e == fmt.e_max() && k == top_k) {
                inside(e, k)
            } else {
                k as f64 <= kadm
            }
        };
        let s = cheb::to_unit(t * u / w, self.dlo, self.dhi);
        let mut sum = 0.0;
        if kadm >= 1.0 {
            let j = kadm.min(top_k as f64) as usize;
            sum += cheb::clenshaw(&self.general[j], s);
        }
        if inside(fmt.e_min(), 0) {
            sum += cheb::clenshaw(&self.first, s);
        }
        if fmt.e_min() < fmt.e_max() && inside(fmt.e_min() + 1, 0) {
            sum += cheb::clenshaw(&self.leading, s);
        }
        if inside(fmt.e_max(), top_k) {
            sum += cheb::clenshaw(&self.top, s);
        }
        for g in &self.direct {
            if admissible(g.e, g.k) {
                sum += f.eval(g.z / w) * g.z.abs();
            }
        }
        sum
    }
}

fn sorted_pair(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The typical density, even in `t`:
/// `3/4` for `|t| ≤ 1/2` and `(1/|t| - 1)/2 + (1/|t| - 1)²/4` otherwise.
pub fn typical_value(t: f64) -> f64 {
    let a = t.abs();
    if a > 1.0 {
        0.0
    } else if a <= 0.5 {
        0.75
    } else {
        let r = 1.0 / a - 1.0;
        0.5 * r + 0.25 * r * r
    }
}

pub fn typical_density() -> Result<ErrorDistribution> {
    let density = Density::from_fn(
        typical_value,
        &[-1.0, -0.5, 0.5, 1.0],
        &ApproxOptions::default(),
    )?;
    let continuous_mass = density.total_mass();
    Ok(ErrorDistribution {
        density,
        mode: ErrorMode::Typical,
        format: None,
        excluded: ExcludedMass::default(),
        continuous_mass,
        assumption_mass: 0.0,
    })
}

/// Unnormalized typical density at precision `p`:
/// `(1 - t u)^-2 2^-p [2/3·1(k = 0 admissible) + α/2 + α(α+1)/2^(p+2)]`,
/// where `α` is the number of admissible mantissas `k ≥ 1`.
pub fn typical_finite_p_value(t: f64, fmt: &FloatFormat) -> f64 {
    if !(-1.0..=1.0).contains(&t) {
        return 0.0;
    }
    let p = fmt.precision() as i32;
    let two_p = pow2(p);
    let u = fmt.unit_roundoff();
    let q = 2.0 * two_p;
    let k0 = t >= -q / (2.0 * q - 1.0) && t <= q / (q + 1.0);
    let alpha = admissible_k(t, p).clamp(0.0, two_p - 1.0);
    let s = if k0 { 2.0 / 3.0 } else { 0.0 } + alpha / 2.0 + alpha * (alpha + 1.0) / (4.0 * two_p);
    let w = 1.0 - t * u;
    s / (two_p * w * w)
}

pub fn typical_density_finite_p(fmt: &FloatFormat) -> Result<ErrorDistribution> {
    if fmt.precision() > crate::minifloat::MAX_ENUMERABLE_PRECISION {
        return Err(Error::Feasibility(format!(
            "finite-precision typical density needs p ≤ {}",
            crate::minifloat::MAX_ENUMERABLE_PRECISION
        )));
    }
    let breaks = range_breakpoints(fmt);
    let opts = ApproxOptions {
        max_pieces: ApproxOptions::default().max_pieces.max(2 * breaks.len()),
        ..ApproxOptions::fine_grained()
    };
    let raw = Density::from_fn(|t| typical_finite_p_value(t, fmt), &breaks, &opts)?;
    let continuous_mass = raw.total_mass();
    Ok(ErrorDistribution {
        density: raw.normalize()?,
        mode: ErrorMode::TypicalFiniteP,
        format: Some(*fmt),
        excluded: ExcludedMass::default(),
        continuous_mass,
        assumption_mass: 0.0,
    })
}

/// The error distribution of `f` under `mode`, with excluded mass filled
/// in for every mode. `ErrorMode::None` is rejected.
pub fn error_distribution(
    f: &Density,
    fmt: &FloatFormat,
    mode: ErrorMode,
) -> Result<ErrorDistribution> {
    match mode {
        ErrorMode::Exact => exact_error_density(f, fmt),
        ErrorMode::Typical => {
            let mut d = typical_density()?;
            d.excluded = excluded_mass(f, fmt);
            d.format = Some(*fmt);
            d.assumption_mass = assumption_mass(f, fmt);
            Ok(d)
        }
        ErrorMode::TypicalFiniteP => {
            let mut d = typical_density_finite_p(fmt)?;
            d.excluded = excluded_mass(f, fmt);
            d.assumption_mass = assumption_mass(f, fmt);
            Ok(d)
        }
        ErrorMode::None => invalid("mode `none` has no error distribution"),
    }
}

/// Largest `|a(t) - b(t)|` over a uniform grid of `n` points on `[-1, 1]`,
/// skipping points that coincide with the breakpoints of either density.
pub fn sup_distance(a: &Density, b: &Density, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        // Offset grid: never lands exactly on ±1/2 or on 0.
        let t = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
        worst = worst.max((a.eval(t) - b.eval(t)).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p3() -> FloatFormat {
        FloatFormat::new(3, -3, 4).unwrap()
    }

    #[test]
    fn t_range_examples() {
        let f = p3();
        let one = f.finite(false, 0, 0).unwrap();
        let r = t_range(one, &f).unwrap();
        assert_eq!(r.t_max, 16.0 / 17.0);
        assert_eq!(r.t_min, -16.0 / 31.0);
        let z = f.finite(true, 1, 3).unwrap();
        let r = t_range(z, &f).unwrap();
        assert_eq!((r.t_min, r.t_max), (-16.0 / 21.0, 16.0 / 23.0));
        let top = t_range(f.top(), &f).unwrap();
        assert_eq!((top.t_min, top.t_max), (-16.0 / 29.0, 0.0));
        let low = t_range(f.finite(false, -3, 0).unwrap(), &f).unwrap();
        assert_eq!(low.t_min, -1.0);
        assert!(t_range(MiniFloat::Zero, &f).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let f = p3();
        assert_eq!(coefficient_c(0, 0, &f).unwrap(), 2.0 / 3.0);
        assert_eq!(coefficient_c(1, 4, &f).unwrap(), 0.75);
        // Oracle: |z| u / (⌈z⌉ - ⌊z⌋) from the rounding interval.
        let u = f.unit_roundoff();
        for z in f.enumerate_finite().unwrap() {
            if let MiniFloat::Finite {
                negative: false,
                exponent,
                mantissa,
            } = z
            {
                let iv = f.rounding_interval(z).unwrap();
                let want = z.to_f64(&f) * u / (iv.hi - iv.lo);
                let got = coefficient_c(exponent, mantissa, &f).unwrap();
                assert!((got - want).abs() < 1e-15, "{z}: {got} vs {want}");
            }
        }
        assert_eq!(coefficient_c(-3, 0, &f).unwrap(), 1.0 / 9.0);
    }

    #[test]
    fn cutoff_examples() {
        let f = p3();
        assert_eq!(mantissa_cutoff(0.4, &f), 7);
        assert_eq!(mantissa_cutoff(1.0, &f), -1);
        assert_eq!(mantissa_cutoff(2.0 / 3.0, &f), 3);
        assert_eq!(mantissa_cutoff(-2.0 / 3.0, &f), 3);
    }

    #[test]
    fn typical_values() {
        assert_eq!(typical_value(0.0), 0.75);
        assert_eq!(typical_value(1.0), 0.0);
        assert_eq!(typical_value(-1.0), 0.0);
        assert!((typical_value(0.75) - typical_value(-0.75)).abs() == 0.0);
        let d = typical_density().unwrap();
        assert!((d.density.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_p_middle_value() {
        for p in [3u32, 6, 10] {
            let f = FloatFormat::new(p, -10, 10).unwrap();
            let two_p = 2f64.powi(p as i32);
            let want = (2.0 / 3.0 + 3.0 * (two_p - 1.0) / 4.0) / two_p;
            assert!((typical_finite_p_value(0.0, &f) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn finite_p_converges_to_typical() {
        let typ = typical_density().unwrap().density;
        let mut last = f64::INFINITY;
        for p in [4u32, 6, 8, 10] {
            let f = FloatFormat::new(p, -14, 15).unwrap();
            let d = typical_density_finite_p(&f).unwrap().density;
            let dist = sup_distance(&d, &typ, 4001);
            assert!(dist < last, "p={p}: {dist} !< {last}");
            last = dist;
        }
    }

    #[test]
    fn single_interval_input() {
        // f uniform strictly inside ⟦1⟧: only z = 1 contributes, and
        // d(t) ∝ 1/(1 - t u)^2 on the image of the support.
        let f = p3();
        let u = f.unit_roundoff();
        let x = Density::uniform(0.98, 1.05).unwrap();
        let e = exact_error_density(&x, &f).unwrap();
        let (tlo, thi) = ((1.0 - 1.0 / 0.98) / u, (1.0 - 1.0 / 1.05) / u);
        let norm = 1.0 / (0.07 / u);
        for i in 1..50 {
            let t = tlo + (thi - tlo) * i as f64 / 50.0;
            let want = norm / ((1.0 - t * u) * (1.0 - t * u)) / e.continuous_mass;
            assert!((e.density.eval(t) - want).abs() < 1e-8, "{t}");
        }
        assert_eq!(e.density.eval(thi + 0.01), 0.0);
        assert_eq!(e.excluded.total(), 0.0);
    }

    /// Direct sum over every float admissible at `t`, normalized like the
    /// exact density.
    fn grid_oracle(x: &Density, fmt: &FloatFormat, t: f64, mass: f64) -> f64 {
        let u = fmt.unit_roundoff();
        let w = 1.0 - t * u;
        let mut sum = 0.0;
        for z in fmt.enumerate_finite().unwrap() {
            let r = t_range(z, fmt).unwrap();
            if t >= r.t_min && t <= r.t_max {
                let v = z.to_f64(fmt);
                sum += x.eval(v / w) * v.abs();
            }
        }
        sum * u / (w * w) / mass
    }

    #[test]
    fn exact_density_matches_grid_sum() {
        let fmt = FloatFormat::new(4, -3, 4).unwrap();
        let inputs = [
            crate::density::add(
                &Density::uniform(-3.0, 5.0).unwrap(),
                &Density::uniform(0.7, 1.9).unwrap(),
            )
            .unwrap(),
            Density::normal(0.3, 2.0).unwrap(),
            Density::uniform(0.05, 40.0).unwrap(),
        ];
        for rule in [OverflowRule::TopFloat, OverflowRule::Binade] {
            let fmt = fmt.with_overflow(rule);
            for x in &inputs {
                let e = exact_error_density(x, &fmt).unwrap();
                for i in 0..400 {
                    let t = -1.0 + 2.0 * (i as f64 + 0.377) / 400.0;
                    let want = grid_oracle(x, &fmt, t, e.continuous_mass);
                    let got = e.density.eval(t);
                    assert!(
                        (got - want).abs() < 1e-7 * (1.0 + want),
                        "{rule:?} t={t}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn excluded_mass_accounts_for_the_rest() {
        let f = p3();
        let x = Density::uniform(0.0, 40.0).unwrap();
        let e = exact_error_density(&x, &f).unwrap();
        // Overflow above 30 and underflow below 2^-3 / (1 + u).
        let under = 0.125 / (1.0 + f.unit_roundoff()) / 40.0;
        assert!((e.excluded.overflow - 0.25).abs() < 1e-14);
        assert!((e.excluded.underflow - under).abs() < 1e-14);
        assert!((e.continuous_mass + e.excluded.total() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn even_inputs_give_sign_symmetric_sums() {
        let f = p3();
        let pos = exact_error_density(&Density::uniform(0.5, 6.0).unwrap(), &f).unwrap();
        let sym = exact_error_density(&Density::uniform(-6.0, 6.0).unwrap(), &f).unwrap();
        // z and -z contribute equally, so the symmetric input reproduces the
        // positive-side density after normalization (up to the excluded band).
        let neg = exact_error_density(&Density::uniform(-6.0, -0.5).unwrap(), &f).unwrap();
        assert!(sup_distance(&pos.density, &neg.density, 2001) < 1e-9);
        assert!(sym.continuous_mass > 0.9);
    }

    #[test]
    fn feasibility_guard() {
        let f = FloatFormat::new(24, -126, 127).unwrap();
        let x = Density::uniform(0.0, 1.0).unwrap();
        assert!(matches!(
            exact_error_density(&x, &f),
            Err(Error::Feasibility(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn t_range_matches_rounding_interval(idx in 0usize..128, s in 0.0f64..1.0) {
            let f = p3();
            let u = f.unit_roundoff();
            let z = f.enumerate_finite().unwrap()[idx];
            let r = t_range(z, &f).unwrap();
            let iv = f.rounding_interval(z).unwrap();
            let t = r.t_min + s * (r.t_max - r.t_min);
            let x = z.to_f64(&f) / (1.0 - t * u);
            prop_assert!(x >= iv.lo - 1e-15 * iv.lo.abs() && x <= iv.hi + 1e-15 * iv.hi.abs());
        }
    }
}
