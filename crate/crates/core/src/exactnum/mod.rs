//! Exact and certified real numbers.
//!
//! [`XReal`] is a rational, an element of a biquadratic field, or an interval
//! expression. Exact variants are kept canonical: quadratic values with a
//! vanishing irrational part collapse to rationals and fields shrink to the
//! radicands actually used, so structural equality is value equality.

pub mod interval;
pub mod quad;
pub mod rational;

pub use interval::{precision_cap, set_precision_cap, IntervalExpr, DEFAULT_PRECISION_CAP};
pub use quad::QuadExt;
pub use rational::{int, rat, Rational};

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rational::{fmt_decimal, parse_rational, rational_code, rational_pretty, squarefree_decompose};
use serde_json::{json, Value};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug)]
pub enum XReal {
    Rational(Rational),
    Quad(QuadExt),
    Interval(IntervalExpr),
}

impl PartialEq for XReal {
    /// Structural equality. Canonical exact values compare by value; interval
    /// handles compare by identity only.
    fn eq(&self, o: &Self) -> bool {
        match (self, o) {
            (XReal::Rational(a), XReal::Rational(b)) => a == b,
            (XReal::Quad(a), XReal::Quad(b)) => a == b,
            (XReal::Interval(a), XReal::Interval(b)) => a.same_node(b),
            _ => false,
        }
    }
}

impl From<Rational> for XReal {
    fn from(r: Rational) -> Self {
        XReal::Rational(r)
    }
}

impl From<i64> for XReal {
    fn from(n: i64) -> Self {
        XReal::Rational(int(n))
    }
}

impl From<QuadExt> for XReal {
    fn from(q: QuadExt) -> Self {
        XReal::from_quad(q)
    }
}

impl XReal {
    pub fn zero() -> Self {
        XReal::Rational(int(0))
    }

    pub fn one() -> Self {
        XReal::Rational(int(1))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        XReal::Rational(rat(n, d))
    }

    /// `c * sqrt(d)` for square-free `d`.
    pub fn sqrt_int(d: u64) -> Result<Self> {
        Ok(XReal::from_quad(QuadExt::sqrt_of(d)?))
    }

    pub fn from_quad(q: QuadExt) -> Self {
        match q.as_rational() {
            Some(r) => XReal::Rational(r),
            None => XReal::Quad(q.shrink()),
        }
    }

    /// Exact dyadic value of a finite float.
    pub fn from_f64(x: f64) -> Result<Self> {
        rational::from_f64(x)
            .map(XReal::Rational)
            .ok_or_else(|| Error::Parse(format!("non-finite float {x}")))
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, XReal::Interval(_))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            XReal::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn to_interval(&self) -> IntervalExpr {
        match self {
            XReal::Rational(r) => IntervalExpr::constant(r.clone()),
            XReal::Quad(q) => IntervalExpr::quad(q.clone()),
            XReal::Interval(e) => e.clone(),
        }
    }

    fn as_quad_in(&self, d: [u64; 2]) -> Result<QuadExt> {
        match self {
            XReal::Rational(r) => Ok(QuadExt::from_rational(d, r.clone())),
            XReal::Quad(q) => q.embed(d),
            XReal::Interval(_) => unreachable!("exact operands only"),
        }
    }

    fn exact_binop(
        &self,
        o: &Self,
        qop: impl Fn(&QuadExt, &QuadExt) -> Result<QuadExt>,
    ) -> Result<Self> {
        let field = match (self, o) {
            (XReal::Quad(a), XReal::Quad(b)) => QuadExt::unify_fields(a.radicands(), b.radicands())
                .ok_or(Error::RadicandMismatch(a.radicands(), b.radicands()))?,
            (XReal::Quad(a), _) => a.radicands(),
            (_, XReal::Quad(b)) => b.radicands(),
            _ => unreachable!("rational case handled by caller"),
        };
        let a = self.as_quad_in(field)?;
        let b = o.as_quad_in(field)?;
        Ok(XReal::from_quad(qop(&a, &b)?))
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        match (self, o) {
            (XReal::Rational(a), XReal::Rational(b)) => Ok(XReal::Rational(a + b)),
            (XReal::Interval(_), _) | (_, XReal::Interval(_)) => {
                Ok(XReal::Interval(self.to_interval().add(&o.to_interval())))
            }
            _ => self.exact_binop(o, QuadExt::add),
        }
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        match (self, o) {
            (XReal::Rational(a), XReal::Rational(b)) => Ok(XReal::Rational(a - b)),
            (XReal::Interval(_), _) | (_, XReal::Interval(_)) => {
                Ok(XReal::Interval(self.to_interval().sub(&o.to_interval())))
            }
            _ => self.exact_binop(o, QuadExt::sub),
        }
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        match (self, o) {
            (XReal::Rational(a), XReal::Rational(b)) => Ok(XReal::Rational(a * b)),
            (XReal::Rational(a), XReal::Quad(q)) | (XReal::Quad(q), XReal::Rational(a)) => {
                Ok(XReal::from_quad(q.scale(a)))
            }
            (XReal::Interval(_), _) | (_, XReal::Interval(_)) => {
                Ok(XReal::Interval(self.to_interval().mul(&o.to_interval())))
            }
            _ => self.exact_binop(o, QuadExt::mul),
        }
    }

    pub fn try_div(&self, o: &Self) -> Result<Self> {
        if o.is_exact() && o.is_zero_exact() {
            return Err(Error::DivisionByZero);
        }
        match (self, o) {
            (XReal::Rational(a), XReal::Rational(b)) => Ok(XReal::Rational(a / b)),
            (XReal::Quad(q), XReal::Rational(b)) => Ok(XReal::from_quad(q.scale(&b.recip()))),
            (XReal::Interval(_), _) | (_, XReal::Interval(_)) => {
                Ok(XReal::Interval(self.to_interval().div(&o.to_interval())))
            }
            _ => self.exact_binop(o, QuadExt::div),
        }
    }

    /// Division that promotes to an interval node on field mismatch.
    pub fn div(&self, o: &Self) -> Result<Self> {
        match self.try_div(o) {
            Err(Error::RadicandMismatch(..)) => {
                Ok(XReal::Interval(self.to_interval().div(&o.to_interval())))
            }
            r => r,
        }
    }

    pub fn recip(&self) -> Result<Self> {
        XReal::one().div(self)
    }

    fn promote(
        &self,
        o: &Self,
        exact: fn(&XReal, &XReal) -> Result<XReal>,
        iv: fn(&IntervalExpr, &IntervalExpr) -> IntervalExpr,
    ) -> XReal {
        match exact(self, o) {
            Ok(v) => v,
            Err(_) => XReal::Interval(iv(&self.to_interval(), &o.to_interval())),
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            XReal::Rational(r) => XReal::Rational(-r),
            XReal::Quad(q) => XReal::Quad(q.neg()),
            XReal::Interval(e) => XReal::Interval(e.neg()),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn powi(&self, n: u32) -> Self {
        match self {
            XReal::Rational(r) => XReal::Rational(num_traits::pow(r.clone(), n as usize)),
            XReal::Quad(q) => XReal::from_quad(q.powi(n)),
            XReal::Interval(e) => {
                let mut acc = IntervalExpr::constant(int(1));
                for _ in 0..n {
                    acc = acc.mul(e);
                }
                XReal::Interval(acc)
            }
        }
    }

    fn is_zero_exact(&self) -> bool {
        match self {
            XReal::Rational(r) => r.is_zero(),
            XReal::Quad(q) => q.is_zero(),
            XReal::Interval(_) => false,
        }
    }

    /// Zero test that accepts a certified enclosure: exact values must be zero,
    /// interval values must have an enclosure containing zero of width at most
    /// `2^-width_bits` at some precision up to the cap.
    pub fn is_zero_within(&self, width_bits: u32) -> bool {
        match self {
            XReal::Interval(e) => {
                let tol = Rational::new(BigInt::one(), BigInt::one() << width_bits as usize);
                interval::schedule(precision_cap()).into_iter().any(|p| {
                    e.enclosure(p).is_some_and(|r| r.contains_zero() && r.width() <= tol)
                })
            }
            _ => self.sign().map(|s| s == 0).unwrap_or(false),
        }
    }

    /// Certified sign in {-1, 0, 1}.
    pub fn sign(&self) -> Result<i8> {
        match self {
            XReal::Rational(r) => Ok(if r.is_positive() {
                1
            } else if r.is_negative() {
                -1
            } else {
                0
            }),
            XReal::Quad(q) => Ok(q.sign()),
            XReal::Interval(e) => e.sign(),
        }
    }

    pub fn is_positive(&self) -> Result<bool> {
        Ok(self.sign()? > 0)
    }

    pub fn is_negative(&self) -> Result<bool> {
        Ok(self.sign()? < 0)
    }

    pub fn is_zero(&self) -> Result<bool> {
        Ok(self.sign()? == 0)
    }

    /// Certified `self < o`.
    pub fn lt(&self, o: &Self) -> Result<bool> {
        Ok((o - self).sign()? > 0)
    }

    pub fn le(&self, o: &Self) -> Result<bool> {
        Ok((o - self).sign()? >= 0)
    }

    /// Certified equality; `Inconclusive` for interval values that may be equal.
    pub fn eq_value(&self, o: &Self) -> Result<bool> {
        Ok((self - o).sign()? == 0)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            XReal::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            XReal::Quad(q) => q.enclose(80).mid_f64(),
            XReal::Interval(e) => e.to_f64(),
        }
    }

    /// Square root. Rationals with a certifiably square-free cofactor become
    /// quadratic elements; everything else becomes an interval node.
    pub fn adjoin_sqrt(&self) -> Result<Self> {
        match self.sign()? {
            -1 => return Err(Error::NegativeRadicand),
            0 => return Ok(XReal::zero()),
            _ => {}
        }
        if let XReal::Rational(r) = self {
            // sqrt(p/q) = sqrt(p q) / q
            let pq = (r.numer() * r.denom()).magnitude().clone();
            if let Some((s, f)) = squarefree_decompose(&pq) {
                let coef = Rational::new(BigInt::from(s), r.denom().clone());
                if f == 1 {
                    return Ok(XReal::Rational(coef));
                }
                let q = QuadExt::sqrt_of(f)?.scale(&coef);
                return Ok(XReal::from_quad(q));
            }
        }
        Ok(XReal::Interval(self.to_interval().sqrt()))
    }

    /// Returns `candidate` when it is certified to be the nonnegative square
    /// root of `self`, otherwise falls back to [`XReal::adjoin_sqrt`].
    pub fn sqrt_with_hint(&self, candidate: &XReal) -> Result<Self> {
        if candidate.is_exact() && self.is_exact() {
            let sq = candidate.try_mul(candidate);
            if let Ok(sq) = sq {
                if sq == *self && candidate.sign()? >= 0 {
                    return Ok(candidate.clone());
                }
            }
        }
        self.adjoin_sqrt()
    }

    /// `self^(1/n)` for `self >= 0`, exact when a rational root exists.
    pub fn nth_root(&self, n: u32) -> Result<Self> {
        if n == 1 {
            return Ok(self.clone());
        }
        if n == 2 {
            return self.adjoin_sqrt();
        }
        match self.sign()? {
            -1 => return Err(Error::NegativeRadicand),
            0 => return Ok(XReal::zero()),
            _ => {}
        }
        if let XReal::Rational(r) = self {
            if let Some(root) = rational::exact_root(r, n) {
                return Ok(XReal::Rational(root));
            }
        }
        Ok(XReal::Interval(self.to_interval().root(n)))
    }

    /// Natural logarithm for `self > 0`; exact only at 1.
    pub fn ln(&self) -> Result<Self> {
        if self.sign()? <= 0 {
            return Err(Error::NonPositiveLogArgument);
        }
        if let XReal::Rational(r) = self {
            if r.is_one() {
                return Ok(XReal::zero());
            }
        }
        Ok(XReal::Interval(self.to_interval().ln()))
    }

    /// `self^(a/b)` for rational exponent and `self > 0`.
    pub fn pow_rational(&self, e: &Rational) -> Result<Self> {
        let a = e.numer().to_i64().ok_or_else(|| Error::UnsupportedExponent(e.to_string()))?;
        let b = e.denom().to_u32().ok_or_else(|| Error::UnsupportedExponent(e.to_string()))?;
        if a < 0 {
            return self.pow_rational(&-e)?.recip();
        }
        self.powi(a as u32).nth_root(b)
    }

    pub fn min_value<'a>(&'a self, o: &'a Self) -> Result<&'a Self> {
        Ok(if self.le(o)? { self } else { o })
    }

    pub fn max_value<'a>(&'a self, o: &'a Self) -> Result<&'a Self> {
        Ok(if self.le(o)? { o } else { self })
    }

    /// JSON encoding: `"p/q"`, `{"d":[d1,d2],"c":[...]}`, or `"[lo,hi]"`.
    pub fn to_json(&self) -> Value {
        match self {
            XReal::Rational(r) => Value::String(rational_code(r)),
            XReal::Quad(q) => {
                let c: Vec<Value> = q.coeffs().iter().map(|c| Value::String(rational_code(c))).collect();
                json!({ "d": q.radicands(), "c": c })
            }
            XReal::Interval(e) => Value::String(interval_code(e)),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => {
                let s = s.trim();
                if let Some(inner) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                    let (lo, hi) = inner
                        .split_once(',')
                        .ok_or_else(|| Error::Parse(format!("bad enclosure {s}")))?;
                    let lo = parse_rational(lo).ok_or_else(|| Error::Parse(lo.to_string()))?;
                    let hi = parse_rational(hi).ok_or_else(|| Error::Parse(hi.to_string()))?;
                    if lo > hi {
                        return Err(Error::Parse(format!("empty enclosure {s}")));
                    }
                    return Ok(XReal::Interval(IntervalExpr::enclosure_leaf(lo, hi)));
                }
                parse_rational(s)
                    .map(XReal::Rational)
                    .ok_or_else(|| Error::Parse(format!("bad number {s:?}")))
            }
            Value::Number(n) => parse_rational(&n.to_string())
                .map(XReal::Rational)
                .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            Value::Object(m) => {
                let d = m
                    .get("d")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("quadratic value needs \"d\"".into()))?;
                let c = m
                    .get("c")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("quadratic value needs \"c\"".into()))?;
                if d.len() != 2 || c.len() != 4 {
                    return Err(Error::Parse("expected 2 radicands and 4 coefficients".into()));
                }
                let d: Vec<u64> = d
                    .iter()
                    .map(|x| x.as_u64().ok_or_else(|| Error::Parse("radicand".into())))
                    .collect::<Result<_>>()?;
                let mut cs = Vec::with_capacity(4);
                for x in c {
                    match XReal::from_json(x)? {
                        XReal::Rational(r) => cs.push(r),
                        _ => return Err(Error::Parse("coefficients must be rational".into())),
                    }
                }
                let cs: [Rational; 4] = cs.try_into().expect("four coefficients");
                let q = QuadExt::new([d[0], d[1]], cs).map_err(|e| Error::Parse(e.to_string()))?;
                Ok(XReal::from_quad(q))
            }
            _ => Err(Error::Parse(format!("unexpected value {v}"))),
        }
    }
}

fn interval_code(e: &IntervalExpr) -> String {
    let r = match e.leaf_enclosure() {
        Some(r) => r,
        None => match e.enclosure(128) {
            Some(r) => r,
            None => return "[-inf,inf]".to_string(),
        },
    };
    format!("[{},{}]", fmt_decimal(&r.lo, 20, false), fmt_decimal(&r.hi, 20, true))
}

impl serde::Serialize for XReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for XReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        XReal::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for XReal {
    /// Human form: `p/q`, `(p/q)√d`, `(a+b√d1+c√d2+e√(d1d2))/D`, or an enclosure.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XReal::Rational(r) => write!(f, "{}", rational_pretty(r)),
            XReal::Quad(q) => write!(f, "{}", quad_pretty(q)),
            XReal::Interval(e) => write!(f, "{}", interval_code(e)),
        }
    }
}

fn quad_pretty(q: &QuadExt) -> String {
    let [d1, d2] = q.radicands();
    let names = [
        String::new(),
        format!("√{d1}"),
        format!("√{d2}"),
        format!("√{}", d1 as u128 * d2 as u128),
    ];
    let c = q.coeffs();
    let nz: Vec<usize> = (0..4).filter(|&i| !c[i].is_zero()).collect();
    if nz.len() == 1 && nz[0] > 0 {
        let k = &c[nz[0]];
        let name = &names[nz[0]];
        return if k.is_one() {
            name.clone()
        } else if (-k).is_one() {
            format!("-{name}")
        } else if k.denom().is_one() {
            format!("{}{name}", k.numer())
        } else {
            format!("({}){name}", rational_pretty(k))
        };
    }
    let den = c
        .iter()
        .fold(BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
    let mut s = String::new();
    for &i in &nz {
        let n = (&c[i] * Rational::from_integer(den.clone())).to_integer();
        let neg = n.is_negative();
        let mag = n.abs();
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push(if neg { '-' } else { '+' });
        }
        if i == 0 {
            s.push_str(&mag.to_string());
        } else if mag.is_one() {
            s.push_str(&names[i]);
        } else {
            s.push_str(&format!("{mag}{}", names[i]));
        }
    }
    if den.is_one() {
        s
    } else {
        format!("({s})/{den}")
    }
}

macro_rules! forward_op {
    ($tr:ident, $m:ident, $exact:ident, $iv:ident) => {
        impl $tr<&XReal> for &XReal {
            type Output = XReal;
            fn $m(self, o: &XReal) -> XReal {
                self.promote(o, XReal::$exact, IntervalExpr::$iv)
            }
        }
        impl $tr<XReal> for XReal {
            type Output = XReal;
            fn $m(self, o: XReal) -> XReal {
                (&self).$m(&o)
            }
        }
        impl $tr<&XReal> for XReal {
            type Output = XReal;
            fn $m(self, o: &XReal) -> XReal {
                (&self).$m(o)
            }
        }
        impl $tr<XReal> for &XReal {
            type Output = XReal;
            fn $m(self, o: XReal) -> XReal {
                self.$m(&o)
            }
        }
    };
}

forward_op!(Add, add, try_add, add);
forward_op!(Sub, sub, try_sub, sub);
forward_op!(Mul, mul, try_mul, mul);

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal::neg(&self)
    }
}

impl Neg for &XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal::neg(self)
    }
}
