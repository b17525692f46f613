//! Reduced-precision binary floating-point formats.
//!
//! A finite non-zero value is `(-1)^s · 2^e · (1 + k/2^p)` with `e` in
//! `[e_min, e_max]` and mantissa `k` in `[0, 2^p)`. There are no subnormals:
//! the only other values are zero and the two infinities. Rounding is to
//! nearest, ties to even.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest number of finite values we are willing to enumerate.
pub const MAX_ENUMERATION: usize = 10_000_000;
/// Largest precision for which enumeration and emulation are supported.
pub const MAX_ENUMERABLE_PRECISION: u32 = 16;

/// Where the top of the finite range ends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowRule {
    /// Reals above the largest finite value round to infinity.
    #[default]
    TopFloat,
    /// Reals overflow only once their magnitude reaches `2^(e_max+1)`; the
    /// rest of the top binade rounds to the largest finite value.
    Binade,
}

/// A reduced-precision floating-point format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FloatFormat {
    precision: u32,
    e_min: i32,
    e_max: i32,
    #[serde(default)]
    overflow: OverflowRule,
}

impl FloatFormat {
    /// A format with `precision` explicit mantissa bits and exponents in
    /// `[e_min, e_max]`.
    pub fn new(precision: u32, e_min: i32, e_max: i32) -> Result<Self> {
        if !(1..=52).contains(&precision) {
            return invalid(format!("precision must be in 1..=52, got {precision}"));
        }
        if e_min >= e_max {
            return invalid(format!("need e_min < e_max, got [{e_min}, {e_max}]"));
        }
        if e_min < -1000 || e_max > 1000 {
            return invalid(format!(
                "exponent range [{e_min}, {e_max}] exceeds the host double range"
            ));
        }
        Ok(FloatFormat {
            precision,
            e_min,
            e_max,
            overflow: OverflowRule::TopFloat,
        })
    }

    /// IEEE-style exponent range for `exponent_bits` bits (one code reserved
    /// at each end): `[2 - 2^(b-1), 2^(b-1) - 1]`.
    pub fn from_bits(exponent_bits: u32, mantissa_bits: u32) -> Result<Self> {
        if !(2..=11).contains(&exponent_bits) {
            return invalid(format!(
                "exponent_bits must be in 2..=11, got {exponent_bits}"
            ));
        }
        let bias = (1i32 << (exponent_bits - 1)) - 1;
        FloatFormat::new(mantissa_bits, 1 - bias, bias)
    }

    /// IEEE binary16: 10 mantissa bits, exponents in `[-14, 15]`.
    pub fn half() -> Self {
        FloatFormat::from_bits(5, 10).expect("half precision is valid")
    }

    pub fn with_overflow(mut self, rule: OverflowRule) -> Self {
        self.overflow = rule;
        self
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn e_min(&self) -> i32 {
        self.e_min
    }

    pub fn e_max(&self) -> i32 {
        self.e_max
    }

    pub fn overflow_rule(&self) -> OverflowRule {
        self.overflow
    }

    /// `u = 2^-(p+1)`.
    pub fn unit_roundoff(&self) -> f64 {
        pow2(-(self.precision as i32) - 1)
    }

    /// Number of mantissas per binade, `2^p`.
    pub fn mantissas(&self) -> u64 {
        1u64 << self.precision
    }

    /// Number of finite non-zero values.
    pub fn finite_count(&self) -> usize {
        let binades = (self.e_max - self.e_min + 1) as usize;
        2usize
            .saturating_mul(binades)
            .saturating_mul(self.mantissas() as usize)
    }

    /// Fails unless every finite value can be enumerated.
    pub fn check_enumerable(&self) -> Result<()> {
        if self.precision > MAX_ENUMERABLE_PRECISION {
            return Err(Error::Feasibility(format!(
                "precision {} exceeds the enumeration limit of {} bits",
                self.precision, MAX_ENUMERABLE_PRECISION
            )));
        }
        if self.finite_count() > MAX_ENUMERATION {
            return Err(Error::Feasibility(format!(
                "format has {} finite values, more than {}",
                self.finite_count(),
                MAX_ENUMERATION
            )));
        }
        Ok(())
    }

    /// Largest finite value `2^e_max (2 - 2^-p)`.
    pub fn max_finite(&self) -> f64 {
        pow2(self.e_max) * (2.0 - pow2(-(self.precision as i32)))
    }

    /// Smallest positive value `2^e_min`.
    pub fn min_positive(&self) -> f64 {
        pow2(self.e_min)
    }

    /// Upper end of the largest finite value's rounding interval. Magnitudes
    /// above it (and, under [`OverflowRule::Binade`], equal to it) overflow.
    pub fn overflow_threshold(&self) -> f64 {
        match self.overflow {
            OverflowRule::TopFloat => self.max_finite(),
            OverflowRule::Binade => pow2(self.e_max + 1),
        }
    }

    /// Magnitudes below this round to zero.
    pub fn underflow_threshold(&self) -> f64 {
        pow2(self.e_min - 1)
    }

    /// True when `|x|` lies beyond the finite range.
    pub fn overflows(&self, x: f64) -> bool {
        let a = x.abs();
        match self.overflow {
            OverflowRule::TopFloat => a > self.max_finite(),
            OverflowRule::Binade => a >= pow2(self.e_max + 1),
        }
    }

    /// `(-1)^s 2^e (1 + k/2^p)`.
    pub fn value(&self, negative: bool, exponent: i32, mantissa: u64) -> Result<f64> {
        self.check_parts(exponent, mantissa)?;
        Ok(self.value_unchecked(negative, exponent, mantissa))
    }

    pub(crate) fn value_unchecked(&self, negative: bool, exponent: i32, mantissa: u64) -> f64 {
        let m = 1.0 + mantissa as f64 * pow2(-(self.precision as i32));
        let v = pow2(exponent) * m;
        if negative {
            -v
        } else {
            v
        }
    }

    fn check_parts(&self, exponent: i32, mantissa: u64) -> Result<()> {
        if exponent < self.e_min || exponent > self.e_max {
            return invalid(format!(
                "exponent {exponent} outside [{}, {}]",
                self.e_min, self.e_max
            ));
        }
        if mantissa >= self.mantissas() {
            return invalid(format!(
                "mantissa {mantissa} outside [0, {})",
                self.mantissas()
            ));
        }
        Ok(())
    }

    /// A finite non-zero value of this format.
    pub fn finite(&self, negative: bool, exponent: i32, mantissa: u64) -> Result<MiniFloat> {
        self.check_parts(exponent, mantissa)?;
        Ok(MiniFloat::Finite {
            negative,
            exponent,
            mantissa,
        })
    }

    /// The largest finite value.
    pub fn top(&self) -> MiniFloat {
        MiniFloat::Finite {
            negative: false,
            exponent: self.e_max,
            mantissa: self.mantissas() - 1,
        }
    }

    /// The set of reals rounding to `z`, as the closed interval `[⌊z⌋, ⌈z⌉]`.
    pub fn rounding_interval(&self, z: MiniFloat) -> Result<RoundingInterval> {
        let (negative, e, k) = match z {
            MiniFloat::Finite {
                negative,
                exponent,
                mantissa,
            } => (negative, exponent, mantissa),
            _ => return invalid(format!("{z} has no bounded rounding interval")),
        };
        self.check_parts(e, k)?;
        let (lo, hi) = self.positive_interval(e, k);
        let (lo, hi) = if negative { (-hi, -lo) } else { (lo, hi) };
        Ok(RoundingInterval { lo, hi, owner: z })
    }

    /// Interval endpoints for `z(0, e, k)`.
    pub(crate) fn positive_interval(&self, e: i32, k: u64) -> (f64, f64) {
        let p = self.precision as i32;
        let half_ulp = pow2(-p - 1);
        let lo = if k == 0 && e == self.e_min {
            pow2(e - 1)
        } else if k == 0 {
            pow2(e - 1) * (1.0 + (pow2(p + 1) - 1.0) * half_ulp)
        } else {
            pow2(e) * (1.0 + (2 * k - 1) as f64 * half_ulp)
        };
        let is_top = e == self.e_max && k == self.mantissas() - 1;
        let hi = if is_top {
            match self.overflow {
                OverflowRule::TopFloat => self.value_unchecked(false, e, k),
                OverflowRule::Binade => pow2(e + 1),
            }
        } else {
            pow2(e) * (1.0 + (2 * k + 1) as f64 * half_ulp)
        };
        (lo, hi)
    }

    /// Round a real to the nearest value of the format, ties to even.
    pub fn round_nearest(&self, x: f64) -> Result<MiniFloat> {
        if x.is_nan() {
            return invalid("cannot round NaN");
        }
        Ok(self.round_unchecked(x))
    }

    pub(crate) fn round_unchecked(&self, x: f64) -> MiniFloat {
        let negative = x.is_sign_negative();
        let a = x.abs();
        if a == 0.0 {
            return MiniFloat::Zero;
        }
        if self.overflows(a) {
            return MiniFloat::Inf { negative };
        }
        if a <= self.underflow_threshold() {
            // The midpoint between zero and 2^e_min goes to zero.
            return MiniFloat::Zero;
        }
        let e = exponent_of(a);
        if e < self.e_min {
            return MiniFloat::Finite {
                negative,
                exponent: self.e_min,
                mantissa: 0,
            };
        }
        let p = self.precision as i32;
        let scaled = (a * pow2(-e) - 1.0) * pow2(p);
        let mut k = scaled.round_ties_even() as u64;
        let mut e = e;
        if k == self.mantissas() {
            k = 0;
            e += 1;
        }
        if e > self.e_max {
            // Only reachable under the binade rule: the carry out of the top
            // binade stays on the largest finite value.
            return MiniFloat::Finite {
                negative,
                exponent: self.e_max,
                mantissa: self.mantissas() - 1,
            };
        }
        MiniFloat::Finite {
            negative,
            exponent: e,
            mantissa: k,
        }
    }

    /// Round and return the value as a host double (`±inf` on overflow).
    pub fn round_value(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        self.round_unchecked(x).to_f64(self)
    }

    /// One arithmetic operation performed in this format: the exact result of
    /// the host operation, rounded to nearest.
    pub fn emulate_op(&self, x: MiniFloat, y: MiniFloat, op: ArithOp) -> Result<MiniFloat> {
        if self.precision > MAX_ENUMERABLE_PRECISION {
            return Err(Error::Feasibility(format!(
                "emulation is exact only up to {MAX_ENUMERABLE_PRECISION} mantissa bits"
            )));
        }
        let (a, b) = (x.to_f64(self), y.to_f64(self));
        let r = op.apply(a, b);
        if r.is_nan() {
            return invalid(format!("{x} {op} {y} is undefined"));
        }
        Ok(self.round_unchecked(r))
    }

    /// Every finite non-zero value in ascending order.
    pub fn enumerate_finite(&self) -> Result<Vec<MiniFloat>> {
        self.check_enumerable()?;
        let mut out = Vec::with_capacity(self.finite_count());
        for e in (self.e_min..=self.e_max).rev() {
            for k in (0..self.mantissas()).rev() {
                out.push(MiniFloat::Finite {
                    negative: true,
                    exponent: e,
                    mantissa: k,
                });
            }
        }
        for e in self.e_min..=self.e_max {
            for k in 0..self.mantissas() {
                out.push(MiniFloat::Finite {
                    negative: false,
                    exponent: e,
                    mantissa: k,
                });
            }
        }
        Ok(out)
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} e=[{}, {}]", self.precision, self.e_min, self.e_max)?;
        if self.overflow == OverflowRule::Binade {
            write!(f, " (binade overflow)")?;
        }
        Ok(())
    }
}

/// A value of a [`FloatFormat`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MiniFloat {
    Zero,
    Inf {
        negative: bool,
    },
    Finite {
        negative: bool,
        exponent: i32,
        mantissa: u64,
    },
}

impl MiniFloat {
    pub fn to_f64(self, fmt: &FloatFormat) -> f64 {
        match self {
            MiniFloat::Zero => 0.0,
            MiniFloat::Inf { negative: true } => f64::NEG_INFINITY,
            MiniFloat::Inf { negative: false } => f64::INFINITY,
            MiniFloat::Finite {
                negative,
                exponent,
                mantissa,
            } => fmt.value_unchecked(negative, exponent, mantissa),
        }
    }

    pub fn is_finite_nonzero(self) -> bool {
        matches!(self, MiniFloat::Finite { .. })
    }

    pub fn negate(self) -> MiniFloat {
        match self {
            MiniFloat::Zero => MiniFloat::Zero,
            MiniFloat::Inf { negative } => MiniFloat::Inf {
                negative: !negative,
            },
            MiniFloat::Finite {
                negative,
                exponent,
                mantissa,
            } => MiniFloat::Finite {
                negative: !negative,
                exponent,
                mantissa,
            },
        }
    }

    /// Order by real value. Values must come from the same format.
    pub fn cmp_value(&self, other: &MiniFloat) -> Ordering {
        fn key(z: &MiniFloat) -> (i8, i64, i128) {
            match *z {
                MiniFloat::Inf { negative: true } => (-2, 0, 0),
                MiniFloat::Inf { negative: false } => (2, 0, 0),
                MiniFloat::Zero => (0, 0, 0),
                MiniFloat::Finite {
                    negative,
                    exponent,
                    mantissa,
                } => {
                    if negative {
                        (-1, -(exponent as i64), -(mantissa as i128))
                    } else {
                        (1, exponent as i64, mantissa as i128)
                    }
                }
            }
        }
        key(self).cmp(&key(other))
    }
}

impl fmt::Display for MiniFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiniFloat::Zero => write!(f, "0"),
            MiniFloat::Inf { negative: true } => write!(f, "-inf"),
            MiniFloat::Inf { negative: false } => write!(f, "+inf"),
            MiniFloat::Finite {
                negative,
                exponent,
                mantissa,
            } => write!(
                f,
                "{}2^{}*(1+{}/2^p)",
                if *negative { "-" } else { "" },
                exponent,
                mantissa
            ),
        }
    }
}

/// The closed interval of reals that round to `owner`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundingInterval {
    pub lo: f64,
    pub hi: f64,
    pub owner: MiniFloat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl ArithOp {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ArithOp::Add => a + b,
            ArithOp::Sub => a - b,
            ArithOp::Mul => a * b,
            ArithOp::Div => a / b,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// `2^e` for exponents well inside the double range.
pub(crate) fn pow2(e: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// `floor(log2(a))` for a positive normal double.
fn exponent_of(a: f64) -> i32 {
    ((a.to_bits() >> 52) & 0x7ff) as i32 - 1023
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p3() -> FloatFormat {
        FloatFormat::new(3, -3, 4).unwrap()
    }

    #[test]
    fn value_examples() {
        let f = p3();
        assert_eq!(f.value(false, 0, 0).unwrap(), 1.0);
        assert_eq!(f.value(true, 1, 4).unwrap(), -3.0);
        // 2^4 * (1 + 7/8)
        assert_eq!(f.value(false, 4, 7).unwrap(), 30.0);
        assert_eq!(f.max_finite(), 30.0);
        assert!(f.value(false, 5, 0).is_err());
        assert!(f.value(false, 0, 8).is_err());
    }

    #[test]
    fn format_guards() {
        assert!(FloatFormat::new(0, -2, 3).is_err());
        assert!(FloatFormat::new(3, 3, 3).is_err());
        let f = FloatFormat::from_bits(3, 3).unwrap();
        assert_eq!((f.e_min(), f.e_max()), (-2, 3));
        let h = FloatFormat::half();
        assert_eq!((h.e_min(), h.e_max(), h.precision()), (-14, 15, 10));
        assert_eq!(h.max_finite(), 65504.0);
        assert_eq!(h.unit_roundoff(), 2f64.powi(-11));
        assert!(FloatFormat::new(24, -126, 127)
            .unwrap()
            .check_enumerable()
            .is_err());
    }

    #[test]
    fn interval_of_one() {
        let f = p3();
        let one = f.finite(false, 0, 0).unwrap();
        let r = f.rounding_interval(one).unwrap();
        assert_eq!(r.lo, 15.0 / 16.0 + 1.0 / 32.0); // (2^(p+2) - 1) / 2^(p+2)
        assert_eq!(r.lo, 31.0 / 32.0);
        assert_eq!(r.hi, 17.0 / 16.0);
    }

    #[test]
    fn top_interval_depends_on_rule() {
        let f = p3();
        let r = f.rounding_interval(f.top()).unwrap();
        assert_eq!(r.hi, 30.0);
        let b = f.with_overflow(OverflowRule::Binade);
        assert_eq!(b.rounding_interval(b.top()).unwrap().hi, 32.0);
        assert_eq!(b.round_nearest(31.9).unwrap(), b.top());
        assert_eq!(
            f.round_nearest(30.5).unwrap(),
            MiniFloat::Inf { negative: false }
        );
        assert_eq!(
            b.round_nearest(-32.0).unwrap(),
            MiniFloat::Inf { negative: true }
        );
    }

    #[test]
    fn negative_interval_is_reflected() {
        let f = p3();
        for z in f.enumerate_finite().unwrap() {
            let r = f.rounding_interval(z).unwrap();
            let m = f.rounding_interval(z.negate()).unwrap();
            assert_eq!((m.lo, m.hi), (-r.hi, -r.lo));
        }
    }

    #[test]
    fn specials_have_no_interval() {
        let f = p3();
        assert!(f.rounding_interval(MiniFloat::Zero).is_err());
        assert!(f
            .rounding_interval(MiniFloat::Inf { negative: false })
            .is_err());
        assert!(f.round_nearest(f64::NAN).is_err());
    }

    #[test]
    fn representables_are_fixed_points() {
        let f = p3();
        for z in f.enumerate_finite().unwrap() {
            assert_eq!(f.round_nearest(z.to_f64(&f)).unwrap(), z);
        }
    }

    #[test]
    fn midpoints_round_to_even_mantissa() {
        // Exhaustive over adjacent pairs at p = 3.
        let f = p3();
        let vals = f.enumerate_finite().unwrap();
        for w in vals.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (va, vb) = (a.to_f64(&f), b.to_f64(&f));
            if va < 0.0 && vb > 0.0 {
                continue;
            }
            let mid = 0.5 * (va + vb);
            let r = f.round_nearest(mid).unwrap();
            let even =
                |z: MiniFloat| matches!(z, MiniFloat::Finite { mantissa, .. } if mantissa % 2 == 0);
            assert!(r == a || r == b);
            assert!(even(r), "{mid} rounded to odd {r}");
        }
    }

    #[test]
    fn enumeration_order_and_count() {
        let f = FloatFormat::new(1, 0, 1).unwrap();
        let vals: Vec<f64> = f
            .enumerate_finite()
            .unwrap()
            .iter()
            .map(|z| z.to_f64(&f))
            .collect();
        assert_eq!(vals, vec![-3.0, -2.0, -1.5, -1.0, 1.0, 1.5, 2.0, 3.0]);
        let g = p3();
        let all = g.enumerate_finite().unwrap();
        assert_eq!(all.len(), 128);
        assert_eq!(all[0].to_f64(&g), -g.max_finite());
        assert!(all
            .windows(2)
            .all(|w| w[0].cmp_value(&w[1]) == Ordering::Less));
    }

    #[test]
    fn partition_of_the_line() {
        // Consecutive intervals touch, and the ends meet the zero/inf regions.
        let f = p3();
        let all = f.enumerate_finite().unwrap();
        let ivs: Vec<_> = all
            .iter()
            .map(|&z| f.rounding_interval(z).unwrap())
            .collect();
        for w in ivs.windows(2) {
            if w[0].hi < 0.0 && w[1].lo > 0.0 {
                assert_eq!(w[0].hi, -f.underflow_threshold());
                assert_eq!(w[1].lo, f.underflow_threshold());
            } else {
                assert_eq!(w[0].hi, w[1].lo);
            }
        }
        assert_eq!(ivs.last().unwrap().hi, f.overflow_threshold());
    }

    #[test]
    fn emulation() {
        let f = FloatFormat::from_bits(3, 3).unwrap();
        let one = f.round_nearest(1.0).unwrap();
        let two = f.emulate_op(one, one, ArithOp::Add).unwrap();
        assert_eq!(two.to_f64(&f), 2.0);
        let zero = MiniFloat::Zero;
        assert_eq!(
            f.emulate_op(one, zero, ArithOp::Mul).unwrap(),
            MiniFloat::Zero
        );
        assert_eq!(
            f.emulate_op(one, zero, ArithOp::Div).unwrap(),
            MiniFloat::Inf { negative: false }
        );
        assert!(f.emulate_op(zero, zero, ArithOp::Div).is_err());
        // 15 / 0.9375 = 16 overflows the 3-bit exponent range.
        let x = f.round_nearest(15.0).unwrap();
        let y = f.round_nearest(0.9375).unwrap();
        assert_eq!(
            f.emulate_op(x, y, ArithOp::Div).unwrap(),
            MiniFloat::Inf { negative: false }
        );
        let inf = MiniFloat::Inf { negative: false };
        assert_eq!(f.emulate_op(inf, one, ArithOp::Add).unwrap(), inf);
    }

    #[test]
    fn small_values_flush_to_zero_or_min() {
        let f = p3();
        let m = f.min_positive();
        assert_eq!(f.round_nearest(m * 0.5).unwrap(), MiniFloat::Zero);
        assert_eq!(
            f.round_nearest(m * 0.51).unwrap(),
            f.finite(false, -3, 0).unwrap()
        );
        assert_eq!(f.round_nearest(-m * 0.4).unwrap(), MiniFloat::Zero);
    }

    fn intervals(f: FloatFormat) -> Vec<RoundingInterval> {
        f.enumerate_finite()
            .unwrap()
            .into_iter()
            .map(|z| f.rounding_interval(z).unwrap())
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn interior_points_round_to_owner(idx in 0usize..128, fracs in prop::collection::vec(0.0f64..1.0, 160)) {
            let f = p3();
            let iv = intervals(f)[idx];
            for s in fracs {
                let x = iv.lo + s * (iv.hi - iv.lo);
                if x <= iv.lo || x >= iv.hi {
                    continue;
                }
                prop_assert_eq!(f.round_nearest(x).unwrap(), iv.owner);
            }
        }

        #[test]
        fn relative_error_below_unit_roundoff(x in -29.9f64..29.9) {
            let f = p3();
            let u = f.unit_roundoff();
            // Outside the underflow band [2^(e_min-1), 2^e_min / (1+u)).
            prop_assume!(x.abs() >= f.min_positive() / (1.0 + u));
            let z = f.round_value(x);
            prop_assert!(z.is_finite());
            prop_assert!(((x - z) / x).abs() < u);
        }
    }

    #[test]
    fn property_sampling_dense() {
        // 10^4 draws inside every interval at p = 3.
        use rand::{Rng, SeedableRng};
        let f = p3();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for iv in intervals(f) {
            for _ in 0..10_000 {
                let x = rng.random_range(iv.lo..iv.hi);
                if x > iv.lo {
                    assert_eq!(f.round_nearest(x).unwrap(), iv.owner);
                }
            }
        }
    }
}
