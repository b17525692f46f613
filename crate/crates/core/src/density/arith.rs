//! Densities of sums, differences, products and quotients of independent
//! random variables.
//!
//! For `T = A op B` the density at `t` is an integral over the values of `A`
//! weighted by the density of `B` at the matching point. The operand with
//! more pieces is indexed by a [`MomentTree`]; the pieces of the other operand
//! are visited one at a time, each contributing a smooth weight on a single
//! interval of `A` values.

use crate::error::{invalid, Error, Result};

use super::tree::MomentTree;
use super::{ApproxOptions, Density, Piece};

/// Pieces of the visited operand carrying less mass than this are skipped.
const MASS_SKIP: f64 = 1e-15;
/// Up to this many breakpoint pairs, every pairwise image becomes a
/// candidate breakpoint of the result.
const PAIR_LIMIT: usize = 1024;
/// Relative size of a density discontinuity worth a candidate breakpoint.
const JUMP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Add,
    Mul,
    Div,
}

impl Kind {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Kind::Add => a + b,
            Kind::Mul => a * b,
            Kind::Div => a / b,
        }
    }
}

pub fn add(x: &Density, y: &Density) -> Result<Density> {
    add_with(x, y, &ApproxOptions::default())
}

pub fn add_with(x: &Density, y: &Density, opts: &ApproxOptions) -> Result<Density> {
    binary(Kind::Add, x, y, opts)
}

pub fn sub(x: &Density, y: &Density) -> Result<Density> {
    sub_with(x, y, &ApproxOptions::default())
}

pub fn sub_with(x: &Density, y: &Density, opts: &ApproxOptions) -> Result<Density> {
    binary(Kind::Add, x, &y.scale(-1.0)?, opts)
}

pub fn mul(x: &Density, y: &Density) -> Result<Density> {
    mul_with(x, y, &ApproxOptions::default())
}

pub fn mul_with(x: &Density, y: &Density, opts: &ApproxOptions) -> Result<Density> {
    binary(Kind::Mul, x, y, opts)
}

/// Density of `X / Y`. Fails when the support of `Y` touches zero.
pub fn div(x: &Density, y: &Density) -> Result<Density> {
    div_with(x, y, &ApproxOptions::default())
}

pub fn div_with(x: &Density, y: &Density, opts: &ApproxOptions) -> Result<Density> {
    let (ylo, yhi) = y.support();
    if ylo <= 0.0 && yhi >= 0.0 {
        return Err(Error::SingularDivision {
            operand: "divisor".into(),
        });
    }
    binary(Kind::Div, x, y, opts)
}

/// Density of `c / Y` for a non-zero constant `c`.
pub fn scalar_div(c: f64, y: &Density) -> Result<Density> {
    if !(c.is_finite() && c != 0.0) {
        return invalid(format!("numerator must be finite and non-zero, got {c}"));
    }
    let (ylo, yhi) = y.support();
    if ylo <= 0.0 && yhi >= 0.0 {
        return Err(Error::SingularDivision {
            operand: "divisor".into(),
        });
    }
    let f = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        c.abs() / (t * t) * y.eval_raw(c / t)
    };
    let breaks: Vec<f64> = y.breakpoints().iter().map(|b| c / b).collect();
    Density::from_fn(f, &breaks, &ApproxOptions::default())?.normalize()
}

fn interval_image(kind: Kind, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let c = [
        kind.apply(a.0, b.0),
        kind.apply(a.0, b.1),
        kind.apply(a.1, b.0),
        kind.apply(a.1, b.1),
    ];
    let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn candidate_breaks(
    kind: Kind,
    x: &Density,
    y: &Density,
    support: (f64, f64),
    opts: &ApproxOptions,
) -> Vec<f64> {
    let bx = x.breakpoints();
    let by = y.breakpoints();
    let mut out = vec![support.0, support.1];
    if bx.len() * by.len() <= PAIR_LIMIT {
        for &a in &bx {
            for &b in &by {
                out.push(kind.apply(a, b));
            }
        }
    } else {
        // Two discontinuities meet in a kink; anything smoother is left to
        // the adaptive fit.
        let (jx, jy) = (x.jumps(JUMP_TOL), y.jumps(JUMP_TOL));
        for &a in &jx {
            for &b in &jy {
                out.push(kind.apply(a, b));
            }
        }
    }
    if kind != Kind::Add && support.0 < 0.0 && support.1 > 0.0 {
        out.push(0.0);
    }
    out.retain(|v| v.is_finite() && *v >= support.0 && *v <= support.1);
    out.sort_by(f64::total_cmp);
    let keep = |v: f64| v == support.0 || v == support.1 || (v == 0.0 && kind != Kind::Add);
    let tol = 1e-10 * (support.1 - support.0);
    let mut merged: Vec<f64> = Vec::with_capacity(out.len());
    for v in out {
        if let Some(last) = merged.last_mut() {
            if v == *last {
                continue;
            }
            if v - *last <= tol && !(keep(v) && keep(*last)) {
                if keep(v) {
                    *last = v;
                }
                continue;
            }
        }
        merged.push(v);
    }
    let limit = (opts.max_pieces / 2).max(2);
    if merged.len() > limit {
        let step = merged.len().div_ceil(limit);
        merged = merged
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i % step == 0 || keep(v))
            .map(|(_, &v)| v)
            .collect();
    }
    merged
}

/// One piece of the visited operand, restricted to a sign-definite range.
struct Segment<'a> {
    piece: &'a Piece,
    lo: f64,
    hi: f64,
    /// Round-off level of evaluating the piece at a computed argument.
    noise: f64,
}

fn eval_noise(p: &Piece) -> f64 {
    let c = p.coeffs();
    let size: f64 = c.iter().map(|x| x.abs()).sum();
    let slope: f64 = c
        .iter()
        .enumerate()
        .map(|(k, x)| (k * k) as f64 * x.abs())
        .sum();
    let cond = (p.lo.abs().max(p.hi.abs()) / (0.5 * (p.hi - p.lo))).max(1.0);
    8.0 * f64::EPSILON * (size + cond * slope)
}

fn segments(d: &Density, split_at_zero: bool) -> Vec<Segment<'_>> {
    let total = d.total_mass();
    let mut out = Vec::new();
    for p in d.pieces() {
        if p.mass().abs() < MASS_SKIP * total {
            continue;
        }
        // Signed zeros make `t / 0` land on the correct infinity.
        let lo = if p.lo == 0.0 { 0.0 } else { p.lo };
        let hi = if p.hi == 0.0 { -0.0 } else { p.hi };
        let noise = eval_noise(p);
        if split_at_zero && lo < 0.0 && hi > 0.0 {
            out.push(Segment {
                piece: p,
                lo,
                hi: -0.0,
                noise,
            });
            out.push(Segment {
                piece: p,
                lo: 0.0,
                hi,
                noise,
            });
        } else {
            out.push(Segment {
                piece: p,
                lo,
                hi,
                noise,
            });
        }
    }
    out
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Segments that can intersect `[lo, hi]`; segments are in ascending order.
fn window<'s, 'a>(segs: &'s [Segment<'a>], lo: f64, hi: f64) -> &'s [Segment<'a>] {
    let start = segs.partition_point(|s| s.hi < lo);
    let end = start + segs[start..].partition_point(|s| s.lo <= hi);
    &segs[start..end]
}

fn binary(kind: Kind, x: &Density, y: &Density, opts: &ApproxOptions) -> Result<Density> {
    let support = interval_image(kind, x.support(), y.support());
    if !(support.0.is_finite() && support.1.is_finite() && support.0 < support.1) {
        return invalid(format!(
            "result support [{}, {}] is not a finite interval",
            support.0, support.1
        ));
    }
    let breaks = candidate_breaks(kind, x, y, support, opts);
    // The tree indexes the operand with more pieces.
    let x_is_tree = x.pieces().len() >= y.pieces().len();
    let (a, b) = if x_is_tree { (x, y) } else { (y, x) };
    let tree = MomentTree::new(a);
    let segs = segments(b, kind == Kind::Mul);
    let (alo, ahi) = a.support();
    // E|Y| for the quotient density at t = 0.
    let abs_mean_y = if kind == Kind::Div {
        y.mean().abs()
    } else {
        0.0
    };
    let a_signed = alo > 0.0 || ahi < 0.0;
    let density = |t: f64| -> f64 {
        let mut sum = 0.0;
        match kind {
            Kind::Add => {
                for s in window(&segs, t - ahi, t - alo) {
                    let (lo, hi) = ((t - s.hi).max(alo), (t - s.lo).min(ahi));
                    if lo < hi {
                        let p = s.piece;
                        sum += tree.integrate(lo, hi, &|v| p.eval(t - v), s.noise);
                    }
                }
            }
            Kind::Mul => {
                if t == 0.0 {
                    return f64::INFINITY;
                }
                let near = if a_signed {
                    let (lo, hi) = sorted(t / alo, t / ahi);
                    window(&segs, lo, hi)
                } else {
                    &segs[..]
                };
                for s in near {
                    let (lo, hi) = sorted(t / s.lo, t / s.hi);
                    let (lo, hi) = (lo.max(alo), hi.min(ahi));
                    if lo < hi {
                        let p = s.piece;
                        let floor = s.noise / lo.abs().min(hi.abs());
                        sum += tree.integrate(lo, hi, &|v| p.eval(t / v) / v.abs(), floor);
                    }
                }
            }
            Kind::Div => {
                if t == 0.0 {
                    return x.eval_raw(0.0) * abs_mean_y;
                }
                if x_is_tree {
                    // ∫ f_X(v) f_Y(v/t) |v| / t² dv over v = t·y.
                    let (ylo, yhi) = sorted(alo / t, ahi / t);
                    for s in window(&segs, ylo, yhi) {
                        let (lo, hi) = sorted(t * s.lo, t * s.hi);
                        let (lo, hi) = (lo.max(alo), hi.min(ahi));
                        if lo < hi {
                            let p = s.piece;
                            let floor = s.noise * lo.abs().max(hi.abs()) / (t * t);
                            sum += tree.integrate(
                                lo,
                                hi,
                                &|v| p.eval(v / t) * v.abs() / (t * t),
                                floor,
                            );
                        }
                    }
                } else {
                    // ∫ f_Y(v) |v| f_X(t v) dv over v = x / t.
                    let (xlo, xhi) = sorted(t * alo, t * ahi);
                    for s in window(&segs, xlo, xhi) {
                        let (lo, hi) = sorted(s.lo / t, s.hi / t);
                        let (lo, hi) = (lo.max(alo), hi.min(ahi));
                        if lo < hi {
                            let p = s.piece;
                            let floor = s.noise * lo.abs().max(hi.abs());
                            sum += tree.integrate(lo, hi, &|v| v.abs() * p.eval(t * v), floor);
                        }
                    }
                }
            }
        }
        sum
    };

    let d = Density::from_fn(density, &breaks, opts)?;
    let d = clamp_support(d, support)?;
    d.normalize()
}

/// Trim pieces to `support` so containment holds exactly.
fn clamp_support(d: Density, support: (f64, f64)) -> Result<Density> {
    let (lo, hi) = d.support();
    if lo >= support.0 && hi <= support.1 {
        return Ok(d);
    }
    let pieces = d
        .pieces()
        .iter()
        .filter(|p| p.hi > support.0 && p.lo < support.1)
        .map(|p| {
            Piece::new(
                p.lo.max(support.0),
                p.hi.min(support.1),
                p.coeffs().to_vec(),
            )
        })
        .collect();
    Density::from_pieces(pieces)
}
