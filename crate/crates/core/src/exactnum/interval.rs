//! Expression DAG evaluated with outward-rounded rational intervals.
//!
//! Nodes are immutable and shared through `Arc`. Each node memoizes its
//! enclosure per precision so shared subexpressions are evaluated once.

use super::quad::QuadExt;
use super::rational::{int, rat, root_bounds, round_down, round_up, sqrt_bounds, RInterval, Rational};
use crate::error::{Error, Result};
use num_traits::{Signed, Zero};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

pub const START_PRECISION: u32 = 64;
pub const DEFAULT_PRECISION_CAP: u32 = 4096;

static PRECISION_CAP: AtomicU32 = AtomicU32::new(DEFAULT_PRECISION_CAP);

/// Upper bound on the working precision for sign refinement.
pub fn precision_cap() -> u32 {
    PRECISION_CAP.load(Ordering::Relaxed)
}

pub fn set_precision_cap(bits: u32) {
    PRECISION_CAP.store(bits.max(START_PRECISION), Ordering::Relaxed);
}

/// Precisions visited by refinement: 64, 128, ... up to the cap (inclusive,
/// the cap itself is tried even if it is not a power-of-two multiple).
pub fn schedule(cap: u32) -> Vec<u32> {
    let mut v = Vec::new();
    let mut p = START_PRECISION;
    while p < cap {
        v.push(p);
        p = p.saturating_mul(2);
    }
    v.push(cap.max(START_PRECISION));
    v
}

#[derive(Debug)]
enum Op {
    Const(Rational),
    Quad(QuadExt),
    /// A value known only through an enclosure (parsed from a report).
    Enclosure(RInterval),
    Add(IntervalExpr, IntervalExpr),
    Sub(IntervalExpr, IntervalExpr),
    Mul(IntervalExpr, IntervalExpr),
    Div(IntervalExpr, IntervalExpr),
    Neg(IntervalExpr),
    /// Square root of an argument already certified nonnegative.
    Sqrt(IntervalExpr),
    Root(IntervalExpr, u32),
    Ln(IntervalExpr),
}

#[derive(Debug)]
struct Node {
    op: Op,
    cache: Mutex<Vec<(u32, Option<RInterval>)>>,
}

#[derive(Clone, Debug)]
pub struct IntervalExpr(Arc<Node>);

/// Evaluation outcome at a fixed precision.
#[derive(Debug, Clone, PartialEq)]
enum Step {
    Ok(RInterval),
    /// Enclosure too wide (divisor or log argument straddles zero).
    Widen,
}

impl IntervalExpr {
    fn node(op: Op) -> Self {
        IntervalExpr(Arc::new(Node {
            op,
            cache: Mutex::new(Vec::new()),
        }))
    }

    pub fn constant(x: Rational) -> Self {
        Self::node(Op::Const(x))
    }

    pub fn quad(x: QuadExt) -> Self {
        Self::node(Op::Quad(x))
    }

    pub fn enclosure_leaf(lo: Rational, hi: Rational) -> Self {
        Self::node(Op::Enclosure(RInterval::new(lo, hi)))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::node(Op::Add(self.clone(), o.clone()))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::node(Op::Sub(self.clone(), o.clone()))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::node(Op::Mul(self.clone(), o.clone()))
    }

    pub fn div(&self, o: &Self) -> Self {
        Self::node(Op::Div(self.clone(), o.clone()))
    }

    pub fn neg(&self) -> Self {
        Self::node(Op::Neg(self.clone()))
    }

    /// Caller guarantees the argument is nonnegative.
    pub fn sqrt(&self) -> Self {
        Self::node(Op::Sqrt(self.clone()))
    }

    /// Caller guarantees the argument is nonnegative.
    pub fn root(&self, n: u32) -> Self {
        Self::node(Op::Root(self.clone(), n))
    }

    /// Caller guarantees the argument is positive.
    pub fn ln(&self) -> Self {
        Self::node(Op::Ln(self.clone()))
    }

    pub fn same_node(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.0, &o.0)
    }

    /// Exact rational value if this is a constant leaf.
    pub fn as_exact(&self) -> Option<super::XReal> {
        match &self.0.op {
            Op::Const(r) => Some(super::XReal::Rational(r.clone())),
            Op::Quad(q) => Some(super::XReal::from_quad(q.clone())),
            _ => None,
        }
    }

    pub(crate) fn leaf_enclosure(&self) -> Option<RInterval> {
        match &self.0.op {
            Op::Enclosure(r) => Some(r.clone()),
            Op::Const(r) => Some(RInterval::point(r.clone())),
            _ => None,
        }
    }

    fn eval(&self, p: u32) -> Step {
        if let Some(hit) = self
            .0
            .cache
            .lock()
            .expect("cache lock")
            .iter()
            .find(|(q, _)| *q == p)
        {
            return match &hit.1 {
                Some(r) => Step::Ok(r.clone()),
                None => Step::Widen,
            };
        }
        let out = self.eval_uncached(p);
        let stored = match &out {
            Step::Ok(r) => Some(r.clone()),
            Step::Widen => None,
        };
        self.0.cache.lock().expect("cache lock").push((p, stored));
        out
    }

    fn eval_uncached(&self, p: u32) -> Step {
        macro_rules! get {
            ($e:expr) => {
                match $e.eval(p) {
                    Step::Ok(r) => r,
                    Step::Widen => return Step::Widen,
                }
            };
        }
        let r = match &self.0.op {
            Op::Const(x) => return Step::Ok(RInterval::point(x.clone())),
            Op::Enclosure(r) => return Step::Ok(r.clone()),
            Op::Quad(q) => q.enclose(p + 8),
            Op::Add(a, b) => get!(a).add(&get!(b)),
            Op::Sub(a, b) => get!(a).sub(&get!(b)),
            Op::Mul(a, b) => get!(a).mul(&get!(b)),
            Op::Neg(a) => return Step::Ok(get!(a).neg()),
            Op::Div(a, b) => {
                let num = get!(a);
                let den = get!(b);
                match num.div(&den) {
                    Some(r) => r,
                    None => return Step::Widen,
                }
            }
            Op::Sqrt(a) => {
                let x = get!(a);
                let lo = if x.lo.is_negative() { int(0) } else { x.lo.clone() };
                let hi = if x.hi.is_negative() { int(0) } else { x.hi.clone() };
                RInterval::new(sqrt_bounds(&lo, p + 4).0, sqrt_bounds(&hi, p + 4).1)
            }
            Op::Root(a, n) => {
                let x = get!(a);
                let lo = if x.lo.is_negative() { int(0) } else { x.lo.clone() };
                let hi = if x.hi.is_negative() { int(0) } else { x.hi.clone() };
                RInterval::new(root_bounds(&lo, *n, p + 4).0, root_bounds(&hi, *n, p + 4).1)
            }
            Op::Ln(a) => {
                let x = get!(a);
                if !x.lo.is_positive() {
                    return Step::Widen;
                }
                RInterval::new(ln_bounds(&x.lo, p).0, ln_bounds(&x.hi, p).1)
            }
        };
        Step::Ok(r.round(p))
    }

    /// Enclosure at precision `p`, intersected with all coarser schedule
    /// precisions so refinement is monotone in `p`.
    pub fn enclosure(&self, p: u32) -> Option<RInterval> {
        let mut acc: Option<RInterval> = None;
        let mut q = START_PRECISION;
        loop {
            let cur = q.min(p);
            if let Step::Ok(r) = self.eval(cur) {
                acc = Some(match acc {
                    Some(a) => a.intersect(&r),
                    None => r,
                });
            }
            if cur >= p {
                break;
            }
            q = q.saturating_mul(2);
        }
        acc
    }

    /// Certified sign, or `Inconclusive` at `cap`.
    pub fn sign_with_cap(&self, cap: u32) -> Result<i8> {
        let mut acc: Option<RInterval> = None;
        for p in schedule(cap) {
            if let Step::Ok(r) = self.eval(p) {
                let r = match acc {
                    Some(a) => a.intersect(&r),
                    None => r,
                };
                if r.lo.is_positive() {
                    return Ok(1);
                }
                if r.hi.is_negative() {
                    return Ok(-1);
                }
                if r.lo.is_zero() && r.hi.is_zero() {
                    return Ok(0);
                }
                acc = Some(r);
            }
        }
        Err(Error::Inconclusive(cap))
    }

    pub fn sign(&self) -> Result<i8> {
        self.sign_with_cap(precision_cap())
    }

    pub fn to_f64(&self) -> f64 {
        for p in [64u32, 128, 256, 512] {
            if let Some(r) = self.enclosure(p) {
                return r.mid_f64();
            }
        }
        f64::NAN
    }
}

/// Bounds on `ln(x)` for rational `x > 0` with error about `2^-p`.
///
/// Reduces to `y = x / 2^k` in `[1, 2)` and sums `2 atanh(t)` with
/// `t = (y - 1)/(y + 1) < 1/3`, bounding the tail geometrically.
pub fn ln_bounds(x: &Rational, p: u32) -> (Rational, Rational) {
    debug_assert!(x.is_positive());
    let k = x.numer().bits() as i64 - x.denom().bits() as i64;
    let two = int(2);
    let mut y = if k >= 0 {
        x / Rational::from_integer(num_bigint::BigInt::from(1) << k as u64)
    } else {
        x * Rational::from_integer(num_bigint::BigInt::from(1) << (-k) as u64)
    };
    let mut k = k;
    while y >= two {
        y /= &two;
        k += 1;
    }
    while y < int(1) {
        y *= &two;
        k -= 1;
    }
    let (ly_lo, ly_hi) = atanh2_bounds(&((&y - int(1)) / (&y + int(1))), p + 8);
    let (l2_lo, l2_hi) = atanh2_bounds(&rat(1, 3), p + 8);
    let kk = Rational::from_integer(k.into());
    let (a, b) = if k >= 0 {
        (&kk * &l2_lo, &kk * &l2_hi)
    } else {
        (&kk * &l2_hi, &kk * &l2_lo)
    };
    (round_down(&(a + ly_lo), p), round_up(&(b + ly_hi), p))
}

/// Bounds on `2 atanh(t)` for `0 <= t <= 1/3`.
fn atanh2_bounds(t: &Rational, p: u32) -> (Rational, Rational) {
    if t.is_zero() {
        return (int(0), int(0));
    }
    let t2 = t * t;
    let tol = Rational::new(1.into(), num_bigint::BigInt::from(1) << (p as u64 + 2));
    let mut pow_lo = round_down(t, p + 16);
    let mut pow_hi = round_up(t, p + 16);
    let t2_lo = round_down(&t2, p + 16);
    let t2_hi = round_up(&t2, p + 16);
    let mut s_lo = int(0);
    let mut s_hi = int(0);
    let mut n: i64 = 0;
    loop {
        let den = int(2 * n + 1);
        s_lo += round_down(&(&pow_lo / &den), p + 16);
        s_hi += round_up(&(&pow_hi / &den), p + 16);
        pow_lo = round_down(&(&pow_lo * &t2_lo), p + 16);
        pow_hi = round_up(&(&pow_hi * &t2_hi), p + 16);
        n += 1;
        // Tail: sum_{j>=n} t^(2j+1)/(2j+1) <= t^(2n+1) / ((2n+1)(1 - t^2)).
        let tail = &pow_hi / (int(2 * n + 1) * (int(1) - &t2_hi));
        if tail < tol {
            return (&two() * s_lo, &two() * (s_hi + tail));
        }
    }
}

fn two() -> Rational {
    int(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_is_monotone() {
        let two = IntervalExpr::constant(int(2));
        let e = two.sqrt().add(&IntervalExpr::constant(rat(1, 3)).ln());
        let mut prev = e.enclosure(64).unwrap();
        for p in [128, 256, 512, 1024] {
            let cur = e.enclosure(p).unwrap();
            assert!(cur.lo >= prev.lo && cur.hi <= prev.hi);
            prev = cur;
        }
        let v = std::f64::consts::SQRT_2 + (1.0f64 / 3.0).ln();
        assert!((prev.mid_f64() - v).abs() < 1e-15);
    }

    #[test]
    fn ln_matches_float() {
        for &(n, d) in &[(1i64, 1i64), (2, 1), (10, 3), (1, 1000), (123456, 7)] {
            let (lo, hi) = ln_bounds(&rat(n, d), 80);
            let f = (n as f64 / d as f64).ln();
            assert!(lo <= hi);
            assert!((lo.clone() - Rational::from_float(f).unwrap()).abs() < rat(1, 1_000_000_000_000));
            assert!(hi - lo < rat(1, 1 << 60));
        }
    }

    #[test]
    fn zero_difference_is_inconclusive() {
        let s = IntervalExpr::constant(int(5)).sqrt();
        let d = s.sub(&s);
        assert_eq!(d.sign_with_cap(256), Err(Error::Inconclusive(256)));
        let z = IntervalExpr::constant(int(0));
        assert_eq!(z.sign(), Ok(0));
    }

    #[test]
    fn cube_root() {
        let c = IntervalExpr::constant(int(27)).root(3);
        let r = c.enclosure(128).unwrap();
        assert!(r.lo <= int(3) && r.hi >= int(3));
        assert!(r.width() < rat(1, 1 << 60));
    }
}
