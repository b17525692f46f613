//! Probability densities represented piecewise by Chebyshev series.
//!
//! A [`Density`] is a list of pieces with disjoint interiors in ascending
//! order. Between pieces the density is zero. Each piece carries its series
//! and the series of its antiderivative, so masses, CDFs and quantiles are
//! exact for the represented polynomials.

mod approx;
mod arith;
mod tree;

use std::fmt::Write as _;

pub use approx::ApproxOptions;
pub use arith::{add, add_with, div, div_with, mul, mul_with, scalar_div, sub, sub_with};

use crate::cheb;
use crate::error::{invalid, Error, Result};
use crate::spec::DistributionSpec;

/// Normal inputs are truncated to `mu ± NORMAL_CUTOFF * sigma`.
pub const NORMAL_CUTOFF: f64 = 8.0;

/// One polynomial piece on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    coeffs: Vec<f64>,
    anti: Vec<f64>,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, coeffs: Vec<f64>) -> Piece {
        let h = 0.5 * (hi - lo);
        let anti = cheb::antiderivative(&coeffs)
            .into_iter()
            .map(|b| b * h)
            .collect();
        Piece {
            lo,
            hi,
            coeffs,
            anti,
        }
    }

    /// Chebyshev coefficients in the variable mapping `[lo, hi]` to `[-1, 1]`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Value of the polynomial; `x` is clamped into the piece.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        cheb::clenshaw(&self.coeffs, cheb::to_unit(x, self.lo, self.hi))
    }

    /// `∫_lo^x`, with `x` clamped into the piece.
    pub fn partial_mass(&self, x: f64) -> f64 {
        cheb::clenshaw(&self.anti, cheb::to_unit(x, self.lo, self.hi))
    }

    pub fn mass(&self) -> f64 {
        cheb::clenshaw(&self.anti, 1.0)
    }

    fn scaled(&self, factor: f64) -> Piece {
        Piece::new(
            self.lo,
            self.hi,
            self.coeffs.iter().map(|c| c * factor).collect(),
        )
    }
}

/// A probability density on a finite union of intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    pieces: Vec<Piece>,
    /// `cum[i]` is the mass of pieces `0..i`.
    cum: Vec<f64>,
    /// `rcum[i]` is the mass of pieces `i..`.
    rcum: Vec<f64>,
}

/// Pieces narrower than the spacing of doubles at their position vanish
/// under shifts and scalings; their mass is below round-off.
fn without_collapsed(pieces: impl IntoIterator<Item = Piece>) -> Vec<Piece> {
    pieces.into_iter().filter(|p| p.lo < p.hi).collect()
}

impl Density {
    /// Assemble a density from pieces; no normalization is applied.
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Density> {
        if pieces.is_empty() {
            return invalid("a density needs at least one piece");
        }
        for p in &pieces {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.lo < p.hi) {
                return invalid(format!("bad piece bounds [{}, {}]", p.lo, p.hi));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return invalid("piece coefficients must be finite");
            }
        }
        for w in pieces.windows(2) {
            if w[0].hi > w[1].lo {
                return invalid(format!(
                    "pieces overlap: [{}, {}] and [{}, {}]",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                ));
            }
        }
        let mut cum = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0;
        cum.push(acc);
        for p in &pieces {
            acc += p.mass();
            cum.push(acc);
        }
        let mut rcum = vec![0.0; pieces.len() + 1];
        for i in (0..pieces.len()).rev() {
            rcum[i] = rcum[i + 1] + pieces[i].mass();
        }
        Ok(Density { pieces, cum, rcum })
    }

    /// Approximate a non-negative function adaptively between `breaks`
    /// (ascending, at least two). The result is not normalized.
    pub fn from_fn<F>(f: F, breaks: &[f64], opts: &ApproxOptions) -> Result<Density>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let mut b: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        if b.len() < 2 {
            return invalid("need at least two distinct breakpoints");
        }
        Density::from_pieces(approx::build_pieces(&f, &b, opts))
    }

    /// The density described by `spec`. Constants have no density and are
    /// rejected here; the term interpreter carries them symbolically.
    pub fn from_spec(spec: &DistributionSpec) -> Result<Density> {
        spec.validate()?;
        match *spec {
            DistributionSpec::Uniform { a, b } => Density::uniform(a, b),
            DistributionSpec::Normal { mu, sigma } => Density::normal(mu, sigma),
            DistributionSpec::Constant { value } => invalid(format!(
                "constant {value} has no density; use it as a scalar"
            )),
            DistributionSpec::Custom { ref points } => Density::piecewise_linear(points),
        }
    }

    pub fn uniform(a: f64, b: f64) -> Result<Density> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return invalid(format!("uniform needs finite a < b, got ({a}, {b})"));
        }
        Density::from_pieces(vec![Piece::new(a, b, vec![1.0 / (b - a)])])
    }

    /// Normal density truncated to `mu ± 8 sigma` and renormalized.
    pub fn normal(mu: f64, sigma: f64) -> Result<Density> {
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return invalid(format!("normal needs sigma > 0, got ({mu}, {sigma})"));
        }
        let c = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let f = |x: f64| {
            let z = (x - mu) / sigma;
            c * (-0.5 * z * z).exp()
        };
        let breaks: Vec<f64> = [
            -8.0, -6.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0,
        ]
        .iter()
        .map(|k| mu + k * sigma)
        .collect();
        // Each window is approximated on its own scale so the far tails stay
        // positive and the cdf monotone.
        let opts = ApproxOptions::default();
        let pieces = breaks
            .windows(2)
            .flat_map(|w| approx::build_pieces(&f, w, &opts))
            .collect();
        Density::from_pieces(pieces)?.normalize()
    }

    /// Piecewise-linear density through `points`, normalized.
    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Density> {
        if points.len() < 2 {
            return invalid("need at least two points");
        }
        let pieces = points
            .windows(2)
            .map(|w| {
                let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                Piece::new(x0, x1, vec![0.5 * (y0 + y1), 0.5 * (y1 - y0)])
            })
            .collect();
        Density::from_pieces(pieces)?.normalize()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn total_mass(&self) -> f64 {
        *self.cum.last().expect("non-empty")
    }

    /// Divide by the total mass.
    pub fn normalize(&self) -> Result<Density> {
        let m = self.total_mass();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize a density of mass {m}"
            )));
        }
        Density::from_pieces(self.pieces.iter().map(|p| p.scaled(1.0 / m)).collect())
    }

    /// Smallest interval containing every piece.
    pub fn support(&self) -> (f64, f64) {
        (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi)
    }

    /// Distinct piece endpoints in ascending order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.pieces.len() + 1);
        for p in &self.pieces {
            if b.last() != Some(&p.lo) {
                b.push(p.lo);
            }
            b.push(p.hi);
        }
        b
    }

    /// Breakpoints where the density jumps by more than `rel` times its
    /// largest value. Support ends count when the density is non-zero there.
    pub(crate) fn jumps(&self, rel: f64) -> Vec<f64> {
        let scale = self
            .pieces
            .iter()
            .map(|p| p.coeffs().iter().map(|c| c.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let tol = rel * scale;
        let mut out = Vec::new();
        let mut left: f64 = 0.0;
        let mut at = self.pieces[0].lo;
        for p in &self.pieces {
            if p.lo != at {
                if left.abs() > tol {
                    out.push(at);
                }
                left = 0.0;
            }
            if (p.eval(p.lo) - left).abs() > tol {
                out.push(p.lo);
            }
            left = p.eval(p.hi);
            at = p.hi;
        }
        if left.abs() > tol {
            out.push(at);
        }
        out.dedup();
        out
    }

    /// Index of the piece containing `x`, if any.
    pub(crate) fn locate(&self, x: f64) -> Option<usize> {
        let i = self.pieces.partition_point(|p| p.hi < x);
        (i < self.pieces.len() && self.pieces[i].lo <= x).then_some(i)
    }

    /// Density at `x`, clipped at zero.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_raw(x).max(0.0)
    }

    /// Density at `x` without clipping small negative interpolation wiggles.
    pub fn eval_raw(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some(i) => self.pieces[i].eval(x),
            None => 0.0,
        }
    }

    /// `∫_{-∞}^x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.hi <= x);
        let mut m = self.cum[i];
        if i < self.pieces.len() && self.pieces[i].lo < x {
            m += self.pieces[i].partial_mass(x);
        }
        m
    }

    /// `∫_x^∞`, summed from the right so small tails keep their accuracy.
    pub fn mass_above(&self, x: f64) -> f64 {
        let i = self.pieces.partition_point(|p| p.hi <= x);
        if i == self.pieces.len() {
            return 0.0;
        }
        let p = &self.pieces[i];
        let inside = if p.lo < x {
            p.mass() - p.partial_mass(x)
        } else {
            p.mass()
        };
        self.rcum[i + 1] + inside
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_below(x).clamp(0.0, 1.0)
    }

    /// Mass outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        (self.mass_below(lo) + self.mass_above(hi)).clamp(0.0, 1.0)
    }

    /// Smallest `x` with `cdf(x) = q`, found by safeguarded Newton steps
    /// inside the piece that holds the `q` quantile.
    pub fn quantile(&self, q: f64) -> f64 {
        let (lo, hi) = self.support();
        let total = self.total_mass();
        if q.is_nan() {
            return f64::NAN;
        }
        if q <= 0.0 {
            return self.pieces[self.cum.partition_point(|&c| c <= 0.0).saturating_sub(1)].lo;
        }
        if q >= 1.0 {
            return hi;
        }
        let target = q * total;
        let i = self
            .cum
            .partition_point(|&c| c < target)
            .clamp(1, self.pieces.len())
            - 1;
        let p = &self.pieces[i];
        let r = target - self.cum[i];
        let m = p.mass();
        if m <= 0.0 {
            return p.lo.max(lo);
        }
        let (mut a, mut b) = (p.lo, p.hi);
        let mut x = p.lo + (p.hi - p.lo) * (r / m).clamp(0.0, 1.0);
        for _ in 0..100 {
            let fx = p.partial_mass(x) - r;
            if fx < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let d = p.eval(x);
            let mut nx = if d > 0.0 { x - fx / d } else { f64::NAN };
            if !(nx > a && nx < b) {
                nx = 0.5 * (a + b);
            }
            if (nx - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(p.hi - p.lo) {
                x = nx;
                break;
            }
            x = nx;
        }
        x
    }

    /// `E[X]`.
    pub fn mean(&self) -> f64 {
        let mut s = 0.0;
        for p in &self.pieces {
            let h = 0.5 * (p.hi - p.lo);
            let mid = 0.5 * (p.hi + p.lo);
            // ∫ s T_k(s) ds = (I(k+1) + I(|k-1|)) / 2
            let first: f64 = p
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * 0.5 * (cheb::t_integral(k + 1) + cheb::t_integral(k.abs_diff(1))))
                .sum();
            s += h * (mid * cheb::integral(&p.coeffs) + h * first);
        }
        s
    }

    /// Density of `X + alpha`.
    pub fn shift(&self, alpha: f64) -> Result<Density> {
        if !alpha.is_finite() {
            return invalid("shift must be finite");
        }
        Density::from_pieces(without_collapsed(
            self.pieces
                .iter()
                .map(|p| Piece::new(p.lo + alpha, p.hi + alpha, p.coeffs.clone())),
        ))
    }

    /// Density of `alpha * X`.
    pub fn scale(&self, alpha: f64) -> Result<Density> {
        if !(alpha.is_finite() && alpha != 0.0) {
            return invalid(format!(
                "scale factor must be finite and non-zero, got {alpha}"
            ));
        }
        let inv = 1.0 / alpha.abs();
        let pieces: Vec<Piece> = if alpha > 0.0 {
            self.pieces
                .iter()
                .map(|p| {
                    Piece::new(
                        p.lo * alpha,
                        p.hi * alpha,
                        p.coeffs.iter().map(|c| c * inv).collect(),
                    )
                })
                .collect()
        } else {
            self.pieces
                .iter()
                .rev()
                .map(|p| {
                    let c = p
                        .coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| if k % 2 == 0 { c * inv } else { -c * inv })
                        .collect();
                    Piece::new(p.hi * alpha, p.lo * alpha, c)
                })
                .collect()
        };
        Density::from_pieces(without_collapsed(pieces))
    }

    /// `x,pdf,cdf` rows at `n` equally spaced points over the support.
    pub fn to_csv(&self, n: usize) -> String {
        let (lo, hi) = self.support();
        let n = n.max(2);
        let mut out = String::from("x,pdf,cdf\n");
        for i in 0..n {
            let x = if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            };
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", x, self.eval(x), self.cdf(x));
        }
        out
    }
}
