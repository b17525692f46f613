//! Chebyshev series on `[-1, 1]`: interpolation at first-kind points,
//! evaluation, integration, and Fejér quadrature on the same points.
//!
//! First-kind points never include the endpoints, so integrable endpoint
//! singularities are never sampled.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

/// First-kind Chebyshev points `cos(π(j + 1/2)/n)`, in descending order.
pub fn points(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (PI * (j as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// Cached points and Fejér weights for `n` nodes.
pub fn rule(n: usize) -> Rc<Rule> {
    thread_local! {
        static CACHE: RefCell<HashMap<usize, Rc<Rule>>> = RefCell::new(HashMap::new());
    }
    CACHE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(Rule::new(n)))
            .clone()
    })
}

pub struct Rule {
    pub nodes: Vec<f64>,
    /// Fejér first-rule weights; exact for polynomials of degree `< n`.
    pub weights: Vec<f64>,
}

impl Rule {
    fn new(n: usize) -> Rule {
        let nodes = points(n);
        let weights = (0..n)
            .map(|j| {
                let theta = PI * (j as f64 + 0.5) / n as f64;
                let mut s = 0.0;
                for k in 1..=n / 2 {
                    s += (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
                }
                2.0 / n as f64 * (1.0 - 2.0 * s)
            })
            .collect();
        Rule { nodes, weights }
    }
}

/// Chebyshev coefficients of the polynomial interpolating `values` at
/// `points(values.len())`.
pub fn coeffs(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let nodes = &rule(n).nodes;
    let mut a = vec![0.0; n];
    for (&x, &f) in nodes.iter().zip(values) {
        // T_k(x) by the three-term recurrence.
        let (mut t0, mut t1) = (1.0, x);
        a[0] += f;
        if n > 1 {
            a[1] += f * x;
        }
        for ak in a.iter_mut().skip(2) {
            let t2 = 2.0 * x * t1 - t0;
            *ak += f * t2;
            t0 = t1;
            t1 = t2;
        }
    }
    let scale = 2.0 / n as f64;
    for ak in a.iter_mut() {
        *ak *= scale;
    }
    a[0] *= 0.5;
    a
}

/// Evaluate `Σ c_k T_k(s)`.
pub fn clenshaw(c: &[f64], s: f64) -> f64 {
    match c.len() {
        0 => 0.0,
        1 => c[0],
        _ => {
            let (mut b1, mut b2) = (0.0, 0.0);
            let two_s = 2.0 * s;
            for &ck in c[1..].iter().rev() {
                let b0 = ck + two_s * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            c[0] + s * b1 - b2
        }
    }
}

/// `∫_{-1}^{1} T_m(s) ds`.
pub fn t_integral(m: usize) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        2.0 / (1.0 - (m * m) as f64)
    }
}

/// `∫_{-1}^{1} Σ c_k T_k(s) ds`.
pub fn integral(c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .step_by(2)
        .map(|(k, &ck)| ck * t_integral(k))
        .sum()
}

/// Coefficients of the antiderivative that vanishes at `s = -1`.
pub fn antiderivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let at = |k: usize| if k < n { c[k] } else { 0.0 };
    let mut b = vec![0.0; n + 1];
    if n == 0 {
        return b;
    }
    b[1] = at(0) - at(2) / 2.0;
    for (j, bj) in b.iter_mut().enumerate().skip(2) {
        *bj = (at(j - 1) - at(j + 1)) / (2.0 * j as f64);
    }
    let mut alt = 0.0;
    for (j, &bj) in b.iter().enumerate().skip(1) {
        alt += if j % 2 == 0 { bj } else { -bj };
    }
    b[0] = -alt;
    b
}

/// Drop trailing coefficients whose magnitude is at most `tol`.
pub fn chop(c: &mut Vec<f64>, tol: f64) {
    while c.len() > 1 && c.last().is_some_and(|x| x.abs() <= tol) {
        c.pop();
    }
}

/// Largest magnitude among the last `count` coefficients.
pub fn tail(c: &[f64], count: usize) -> f64 {
    c.iter()
        .rev()
        .take(count)
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Map `x` in `[lo, hi]` to `[-1, 1]`.
#[inline]
pub fn to_unit(x: f64, lo: f64, hi: f64) -> f64 {
    ((2.0 * x - lo - hi) / (hi - lo)).clamp(-1.0, 1.0)
}

/// Map `s` in `[-1, 1]` to `[lo, hi]`.
#[inline]
pub fn from_unit(s: f64, lo: f64, hi: f64) -> f64 {
    0.5 * (lo + hi) + 0.5 * (hi - lo) * s
}
