//! Weighted integrals `∫ f(x) g(x) dx` against a fixed density `f`.
//!
//! A binary tree over the pieces of `f` stores, for every node, the moments
//! `∫ f(x) T_j(s(x)) dx` in the node's own Chebyshev variable. When `g` is
//! resolved by a degree `J` interpolant on a node, the node's contribution is
//! a dot product; otherwise the query descends into the children. Pieces
//! only partially covered by the integration range are handled by direct
//! quadrature.

use crate::cheb;

use super::{Density, Piece};

/// Moments per node.
const M: usize = 17;
/// Relative size of trailing interpolation coefficients accepted as resolved.
const FIT_TOL: f64 = 1e-11;
const MAX_DEPTH: u32 = 30;
/// Largest relative tail that may be attributed to round-off in `g`.
const NOISE_TOL: f64 = 1e-8;

struct Node {
    lo: f64,
    hi: f64,
    children: Option<(usize, usize)>,
    piece: usize,
    mu: [f64; M],
    empty: bool,
}

pub(crate) struct MomentTree<'a> {
    pieces: &'a [Piece],
    nodes: Vec<Node>,
    root: usize,
}

impl<'a> MomentTree<'a> {
    pub fn new(d: &'a Density) -> MomentTree<'a> {
        let pieces = d.pieces();
        let mut t = MomentTree {
            pieces,
            nodes: Vec::with_capacity(2 * pieces.len()),
            root: 0,
        };
        t.root = t.build(0, pieces.len());
        t
    }

    fn build(&mut self, first: usize, end: usize) -> usize {
        if end - first == 1 {
            let p = &self.pieces[first];
            let h = 0.5 * (p.hi - p.lo);
            let c = p.coeffs();
            let mut mu = [0.0; M];
            for (j, m) in mu.iter_mut().enumerate() {
                // T_a T_j = (T_{a+j} + T_{|a-j|}) / 2
                *m = h * c
                    .iter()
                    .enumerate()
                    .map(|(a, ca)| {
                        ca * 0.5 * (cheb::t_integral(a + j) + cheb::t_integral(a.abs_diff(j)))
                    })
                    .sum::<f64>();
            }
            let empty = c.iter().all(|&x| x == 0.0);
            self.nodes.push(Node {
                lo: p.lo,
                hi: p.hi,
                children: None,
                piece: first,
                mu,
                empty,
            });
            return self.nodes.len() - 1;
        }
        let mid = (first + end) / 2;
        let l = self.build(first, mid);
        let r = self.build(mid, end);
        let lo = self.pieces[first].lo;
        let hi = self.pieces[end - 1].hi;
        let mut mu = [0.0; M];
        for child in [l, r] {
            let (clo, chi) = (self.nodes[child].lo, self.nodes[child].hi);
            let cm = self.nodes[child].mu;
            // Row j holds T_j(s_parent(x)) expanded in the child's variable.
            let nodes = &cheb::rule(M).nodes;
            let mut rows = vec![vec![0.0; M]; M];
            for (i, &sc) in nodes.iter().enumerate() {
                let sp = cheb::to_unit(cheb::from_unit(sc, clo, chi), lo, hi);
                let (mut t0, mut t1) = (1.0, sp);
                rows[0][i] = 1.0;
                rows[1][i] = sp;
                for row in rows.iter_mut().skip(2) {
                    let t2 = 2.0 * sp * t1 - t0;
                    row[i] = t2;
                    t0 = t1;
                    t1 = t2;
                }
            }
            for (j, row) in rows.iter().enumerate() {
                let k = cheb::coeffs(row);
                mu[j] += k.iter().zip(cm.iter()).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let empty = self.nodes[l].empty && self.nodes[r].empty;
        self.nodes.push(Node {
            lo,
            hi,
            children: Some((l, r)),
            piece: first,
            mu,
            empty,
        });
        self.nodes.len() - 1
    }

    /// `∫_lo^hi f(x) g(x) dx`. `g` is only evaluated inside `[lo, hi]`.
    /// Chebyshev coefficients of `g` below `floor` count as resolved; it
    /// should reflect the round-off level of evaluating `g`.
    pub fn integrate<G: Fn(f64) -> f64>(&self, lo: f64, hi: f64, g: &G, floor: f64) -> f64 {
        if !(lo < hi) {
            return 0.0;
        }
        // Coefficients are judged against the size of g over the whole
        // range, so round-off near a zero of g does not force refinement.
        let gscale = cheb::rule(M)
            .nodes
            .iter()
            .map(|&s| g(cheb::from_unit(s, lo, hi)).abs())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        let tol = Tol { gscale, floor };
        self.node(self.root, lo, hi, g, tol)
    }

    fn node<G: Fn(f64) -> f64>(&self, idx: usize, lo: f64, hi: f64, g: &G, tol: Tol) -> f64 {
        let n = &self.nodes[idx];
        if n.empty || hi <= n.lo || lo >= n.hi {
            return 0.0;
        }
        if lo <= n.lo && hi >= n.hi {
            let c = fit(g, n.lo, n.hi);
            if resolved(&c, tol) {
                return c.iter().zip(n.mu.iter()).map(|(a, b)| a * b).sum();
            }
            return match n.children {
                Some((l, r)) => self.node(l, lo, hi, g, tol) + self.node(r, lo, hi, g, tol),
                None => leaf_quad(&self.pieces[n.piece], n.lo, n.hi, g, tol, f64::INFINITY, 0),
            };
        }
        match n.children {
            Some((l, r)) => self.node(l, lo, hi, g, tol) + self.node(r, lo, hi, g, tol),
            None => leaf_quad(
                &self.pieces[n.piece],
                lo.max(n.lo),
                hi.min(n.hi),
                g,
                tol,
                f64::INFINITY,
                0,
            ),
        }
    }
}

fn fit<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> Vec<f64> {
    let vals: Vec<f64> = cheb::rule(M)
        .nodes
        .iter()
        .map(|&s| g(cheb::from_unit(s, lo, hi)))
        .collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return vec![f64::NAN; M];
    }
    cheb::coeffs(&vals)
}

#[derive(Clone, Copy)]
struct Tol {
    /// Size of `g` over the whole integration range.
    gscale: f64,
    floor: f64,
}

fn resolved(c: &[f64], tol: Tol) -> bool {
    let scale = c.iter().fold(tol.gscale, |m, x| m.max(x.abs()));
    scale.is_finite() && cheb::tail(c, 3) <= (FIT_TOL * scale).max(tol.floor)
}

fn tail_of(c: &[f64]) -> f64 {
    let t = cheb::tail(c, 3);
    if t.is_finite() {
        t
    } else {
        f64::INFINITY
    }
}

/// `∫_a^b p(x) g(x) dx` for a sub-interval of one piece.
/// Bisects until `g` is resolved. A tail that does not shrink under
/// bisection is round-off in `g` and is accepted.
fn leaf_quad<G: Fn(f64) -> f64>(
    p: &Piece,
    a: f64,
    b: f64,
    g: &G,
    tol: Tol,
    parent_tail: f64,
    depth: u32,
) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    let c = fit(g, a, b);
    let tail = tail_of(&c);
    let tiny = (b - a) <= 1e-15 * a.abs().max(b.abs());
    let scale = c.iter().fold(tol.gscale, |m, x| m.max(x.abs()));
    let plateau = tail > 0.7 * parent_tail && tail <= NOISE_TOL * scale;
    if !resolved(&c, tol) && depth < MAX_DEPTH && !tiny && !plateau {
        let mid = 0.5 * (a + b);
        return leaf_quad(p, a, mid, g, tol, tail, depth + 1)
            + leaf_quad(p, mid, b, g, tol, tail, depth + 1);
    }
    let r = cheb::rule(p.coeffs().len() + M);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    let finite = c.iter().all(|x| x.is_finite());
    for (&x, &w) in r.nodes.iter().zip(&r.weights) {
        let xx = cheb::from_unit(x, a, b);
        let gv = if finite { cheb::clenshaw(&c, x) } else { g(xx) };
        let gv = if gv.is_finite() { gv } else { 0.0 };
        s += w * p.eval(xx) * gv;
    }
    h * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ApproxOptions;

    fn wiggly() -> Density {
        let f = |x: f64| 1.0 + 0.5 * (3.0 * x).sin();
        let breaks: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        Density::from_fn(f, &breaks, &ApproxOptions::default()).unwrap()
    }

    #[test]
    fn matches_direct_integration() {
        let d = wiggly();
        let tree = MomentTree::new(&d);
        let g = |x: f64| (0.7 * x).cos() + x * x;
        for (lo, hi) in [
            (0.0, 4.0),
            (0.33, 2.71),
            (1.05, 1.07),
            (-1.0, 0.5),
            (3.9, 9.0),
        ] {
            let got = tree.integrate(lo, hi, &g, 0.0);
            // Reference: fine composite Fejér rule on the clipped interval.
            let (a, b) = (lo.max(0.0), hi.min(4.0));
            let n = 4000;
            let r = cheb::rule(8);
            let mut want = 0.0;
            for i in 0..n {
                let x0 = a + (b - a) * i as f64 / n as f64;
                let x1 = a + (b - a) * (i + 1) as f64 / n as f64;
                for (&s, &w) in r.nodes.iter().zip(&r.weights) {
                    let x = cheb::from_unit(s, x0, x1);
                    want += 0.5 * (x1 - x0) * w * d.eval_raw(x) * g(x);
                }
            }
            assert!((got - want).abs() < 1e-11, "[{lo}, {hi}]: {got} vs {want}");
        }
    }

    #[test]
    fn moments_of_root() {
        let d = wiggly();
        let tree = MomentTree::new(&d);
        let root = &tree.nodes[tree.root];
        assert!((root.mu[0] - d.total_mass()).abs() < 1e-12);
    }
}
