//! Adaptive piecewise Chebyshev approximation of a function on a union of
//! intervals.

use rayon::prelude::*;

use crate::cheb;

use super::Piece;

/// Refinement controls for piecewise approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxOptions {
    /// Accept a piece when its trailing coefficients fall below `rel_tol`
    /// times its own largest value, or times [`LOCAL_FLOOR`] of the largest
    /// value seen anywhere, whichever is more.
    pub rel_tol: f64,
    /// Total piece budget; refinement stops with a warning when reached.
    pub max_pieces: usize,
    /// Points used for a fresh piece.
    pub start_points: usize,
    /// Largest point count before a piece is bisected instead.
    pub max_points: usize,
    /// Pieces narrower than this fraction of the domain are not bisected.
    pub min_width_rel: f64,
}

/// Pieces whose values are this small against the global maximum are
/// resolved in absolute rather than relative terms.
pub const LOCAL_FLOOR: f64 = 1e-6;

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            rel_tol: 1e-10,
            max_pieces: 4096,
            start_points: 17,
            max_points: 33,
            min_width_rel: 1e-12,
        }
    }
}

impl ApproxOptions {
    /// Settings for functions with many breakpoints and cheap smooth pieces.
    pub fn fine_grained() -> Self {
        ApproxOptions {
            start_points: 5,
            ..ApproxOptions::default()
        }
    }
}

struct Task {
    lo: f64,
    hi: f64,
    n: usize,
}

/// Build pieces approximating `f` between consecutive `breaks`. Gaps are
/// not supported: every consecutive pair becomes at least one piece.
pub(crate) fn build_pieces<F>(f: &F, breaks: &[f64], opts: &ApproxOptions) -> Vec<Piece>
where
    F: Fn(f64) -> f64 + Sync,
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let domain = breaks[breaks.len() - 1] - breaks[0];
    let min_width = opts.min_width_rel * domain;
    let start = opts.start_points.max(3);
    let max_n = opts.max_points.max(start);

    let mut pending: Vec<Task> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Task {
            lo: w[0],
            hi: w[1],
            n: start,
        })
        .collect();
    let mut count = pending.len();
    let mut done: Vec<Piece> = Vec::with_capacity(count);
    let mut vscale = 0.0f64;
    let mut warned = false;

    while !pending.is_empty() {
        let sampled: Vec<Vec<f64>> = pending
            .par_iter()
            .map(|t| {
                cheb::rule(t.n)
                    .nodes
                    .iter()
                    .map(|&s| f(cheb::from_unit(s, t.lo, t.hi)))
                    .collect()
            })
            .collect();
        for vals in &sampled {
            for v in vals {
                if v.is_finite() {
                    vscale = vscale.max(v.abs());
                }
            }
        }
        let mut next = Vec::new();
        for (task, mut vals) in pending.into_iter().zip(sampled) {
            let finite = vals.iter().all(|v| v.is_finite());
            let local = vals
                .iter()
                .filter(|v| v.is_finite())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let tol = opts.rel_tol * local.max(LOCAL_FLOOR * vscale);
            let c = if finite {
                cheb::coeffs(&vals)
            } else {
                Vec::new()
            };
            if finite && cheb::tail(&c, 3) <= tol {
                done.push(finalize(task.lo, task.hi, c, tol));
                continue;
            }
            let width = task.hi - task.lo;
            let can_split = width / 2.0 >= min_width && count < opts.max_pieces;
            if task.n < max_n && (finite || !can_split) {
                next.push(Task {
                    n: 2 * task.n - 1,
                    ..task
                });
            } else if can_split {
                let mid = 0.5 * (task.lo + task.hi);
                next.push(Task {
                    lo: task.lo,
                    hi: mid,
                    n: start,
                });
                next.push(Task {
                    lo: mid,
                    hi: task.hi,
                    n: start,
                });
                count += 1;
            } else {
                if count >= opts.max_pieces && !warned {
                    log::warn!(
                        "piece budget of {} reached; accepting unconverged pieces",
                        opts.max_pieces
                    );
                    warned = true;
                }
                for v in vals.iter_mut() {
                    if !v.is_finite() {
                        *v = 0.0;
                    }
                }
                done.push(finalize(task.lo, task.hi, cheb::coeffs(&vals), tol));
            }
        }
        pending = next;
    }
    done.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    done
}

fn finalize(lo: f64, hi: f64, mut c: Vec<f64>, tol: f64) -> Piece {
    cheb::chop(&mut c, 0.25 * tol);
    Piece::new(lo, hi, c)
}
