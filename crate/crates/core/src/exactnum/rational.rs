//! Rational helpers: square-free extraction, directed rounding, closed
//! rational intervals, and decimal formatting.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Writes `n = s^2 * f` with `f` square-free.
///
/// Trial division runs only up to the cube root of the shrinking cofactor; the
/// remainder then has at most two prime factors, so it is square-free unless it
/// is a perfect square. Returns `None` when `n` does not fit in `u64`.
pub fn squarefree_decompose(n: &BigUint) -> Option<(BigUint, u64)> {
    let mut m: u64 = n.to_u64()?;
    if m == 0 {
        return Some((BigUint::zero(), 0));
    }
    let mut s: u64 = 1;
    let mut f: u64 = 1;
    let mut p: u64 = 2;
    while (p as u128) * (p as u128) * (p as u128) <= m as u128 {
        if m.is_multiple_of(p) {
            let mut e = 0u32;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            s *= p.pow(e / 2);
            if e % 2 == 1 {
                f *= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let r = m.sqrt();
    if r * r == m {
        s *= r;
    } else {
        f = f.checked_mul(m)?;
    }
    Some((BigUint::from(s), f))
}

/// Square-free part of `a*b` for square-free `a`, `b`: `a*b / gcd(a,b)^2`.
pub fn sqfree_mul(a: u64, b: u64) -> Option<u64> {
    let g = a.gcd(&b);
    let v = (a as u128) * (b as u128) / ((g as u128) * (g as u128));
    u64::try_from(v).ok()
}

pub fn is_squarefree(n: u64) -> bool {
    match squarefree_decompose(&BigUint::from(n)) {
        Some((s, f)) => s.is_one() && f == n,
        None => false,
    }
}

fn pow2(k: u64) -> BigInt {
    BigInt::one() << k
}

/// Largest dyadic with `p` significant bits that is `<= x`.
pub fn round_down(x: &Rational, p: u32) -> Rational {
    round_dir(x, p, false)
}

/// Smallest dyadic with `p` significant bits that is `>= x`.
pub fn round_up(x: &Rational, p: u32) -> Rational {
    round_dir(x, p, true)
}

fn round_dir(x: &Rational, p: u32, up: bool) -> Rational {
    if x.is_zero() {
        return x.clone();
    }
    let n = x.numer();
    let d = x.denom();
    let e = n.bits() as i64 - d.bits() as i64;
    let shift = p as i64 - e;
    if shift >= 0 {
        let scaled = n << shift as u64;
        let q = if up {
            ceil_div(&scaled, d)
        } else {
            scaled.div_floor(d)
        };
        Rational::new(q, pow2(shift as u64))
    } else {
        let den = d << (-shift) as u64;
        let q = if up { ceil_div(n, &den) } else { n.div_floor(&den) };
        Rational::from_integer(q << (-shift) as u64)
    }
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Floor of `sqrt(x)` scaled: returns `(lo, hi)` with `lo <= sqrt(x) <= hi` and
/// `hi - lo <= 2^-k / denom(x)`.
pub fn sqrt_bounds(x: &Rational, k: u32) -> (Rational, Rational) {
    debug_assert!(!x.is_negative());
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    let big = (n * d) << (2 * k as u64);
    let s = big.sqrt();
    let exact = &s * &s == big;
    let den = BigInt::from(d.clone()) << k as u64;
    let lo = Rational::new(BigInt::from(s.clone()), den.clone());
    let hi = if exact {
        lo.clone()
    } else {
        Rational::new(BigInt::from(s + 1u32), den)
    };
    (lo, hi)
}

/// Bounds on `x^(1/n)` for `x >= 0`, analogous to [`sqrt_bounds`].
pub fn root_bounds(x: &Rational, n: u32, k: u32) -> (Rational, Rational) {
    let num = x.numer().magnitude();
    let d = x.denom().magnitude();
    let big = (num * d.pow(n - 1)) << (n as u64 * k as u64);
    let s = big.nth_root(n);
    let exact = s.pow(n) == big;
    let den = BigInt::from(d.clone()) << k as u64;
    let lo = Rational::new(BigInt::from(s.clone()), den.clone());
    let hi = if exact {
        lo.clone()
    } else {
        Rational::new(BigInt::from(s + 1u32), den)
    };
    (lo, hi)
}

/// Exact rational `n`-th root if one exists.
pub fn exact_root(x: &Rational, n: u32) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let a = x.numer().magnitude();
    let b = x.denom().magnitude();
    let ra = a.nth_root(n);
    let rb = b.nth_root(n);
    if ra.pow(n) == *a && rb.pow(n) == *b {
        Some(Rational::new(BigInt::from(ra), BigInt::from(rb)))
    } else {
        None
    }
}

/// Closed interval with rational endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct RInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RInterval {
    pub fn point(x: Rational) -> Self {
        RInterval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        RInterval { lo, hi }
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn add(&self, o: &Self) -> Self {
        RInterval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn sub(&self, o: &Self) -> Self {
        RInterval::new(&self.lo - &o.hi, &self.hi - &o.lo)
    }

    pub fn neg(&self) -> Self {
        RInterval::new(-&self.hi, -&self.lo)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        RInterval::new(lo, hi)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_negative() {
            RInterval::new(&self.hi * k, &self.lo * k)
        } else {
            RInterval::new(&self.lo * k, &self.hi * k)
        }
    }

    /// `None` when the divisor straddles zero.
    pub fn div(&self, o: &Self) -> Option<Self> {
        if o.contains_zero() {
            return None;
        }
        let inv = RInterval::new(o.hi.recip(), o.lo.recip());
        Some(self.mul(&inv))
    }

    pub fn round(&self, p: u32) -> Self {
        RInterval::new(round_down(&self.lo, p), round_up(&self.hi, p))
    }

    pub fn intersect(&self, o: &Self) -> Self {
        let lo = if self.lo > o.lo { &self.lo } else { &o.lo };
        let hi = if self.hi < o.hi { &self.hi } else { &o.hi };
        if lo <= hi {
            RInterval::new(lo.clone(), hi.clone())
        } else {
            // Disjoint enclosures cannot both be rigorous; keep the newer one.
            o.clone()
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / int(2)).to_f64().unwrap_or(f64::NAN)
    }
}

/// Decimal rendering with `digits` significant digits, rounded toward
/// `-inf` (`up = false`) or `+inf` (`up = true`). Exact inputs with at most
/// `digits` digits print exactly; trailing zeros are trimmed so output is
/// canonical.
pub fn fmt_decimal(x: &Rational, digits: u32, up: bool) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let ten = BigInt::from(10);
    let neg = x.is_negative();
    // Estimate decimal exponent from bit lengths, then fix up.
    let a = x.abs();
    let est = ((a.numer().bits() as f64 - a.denom().bits() as f64) * std::f64::consts::LOG10_2)
        .floor() as i64;
    let mut e = est;
    let pow10 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(ten.pow(k as u32))
        } else {
            Rational::new(BigInt::one(), ten.pow((-k) as u32))
        }
    };
    while a >= pow10(e + 1) {
        e += 1;
    }
    while a < pow10(e) {
        e -= 1;
    }
    let scale = digits as i64 - 1 - e;
    let scaled = x * pow10(scale);
    let mut m = if up {
        ceil_div(scaled.numer(), scaled.denom())
    } else {
        scaled.numer().div_floor(scaled.denom())
    };
    let mut exp = -scale;
    while !m.is_zero() && (&m % &ten).is_zero() {
        m /= &ten;
        exp += 1;
    }
    let (sign, mag) = match m.sign() {
        Sign::Minus => ("-", (-m).to_string()),
        _ => ("", m.to_string()),
    };
    let _ = neg;
    let lead = &mag[..1];
    let rest = &mag[1..];
    let e10 = exp + rest.len() as i64;
    if rest.is_empty() {
        format!("{sign}{lead}e{e10}")
    } else {
        format!("{sign}{lead}.{rest}e{e10}")
    }
}

/// Parses `p`, `p/q`, or a decimal literal like `-1.25e-3` into an exact
/// rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(Rational::from_integer(n));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{ip}{fp}").parse().ok()?;
    let e = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if e >= 0 {
        Rational::from_integer(digits * ten.pow(e as u32))
    } else {
        Rational::new(digits, ten.pow((-e) as u32))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

/// `"p/q"` rendering used in JSON. Integers carry an explicit `/1`.
pub fn rational_code(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Human rendering: `p` for integers, `p/q` otherwise.
pub fn rational_pretty(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squarefree_parts() {
        let (s, f) = squarefree_decompose(&BigUint::from(8u32)).unwrap();
        assert_eq!((s, f), (BigUint::from(2u32), 2));
        let (s, f) = squarefree_decompose(&BigUint::from(1141u32 * 49)).unwrap();
        assert_eq!((s, f), (BigUint::from(7u32), 1141));
        // 101^2 * 103: both primes exceed the cube root of the cofactor.
        let (s, f) = squarefree_decompose(&BigUint::from(101u64 * 101 * 103)).unwrap();
        assert_eq!((s, f), (BigUint::from(101u32), 103));
        assert!(is_squarefree(5705));
        assert!(!is_squarefree(45));
    }

    #[test]
    fn rounding_brackets_value() {
        let x = rat(1, 3);
        for p in [8, 64, 200] {
            let lo = round_down(&x, p);
            let hi = round_up(&x, p);
            assert!(lo < x && x < hi);
            assert!(&hi - &lo <= Rational::new(BigInt::one(), BigInt::one() << (p as u64)));
        }
        let y = rat(-7, 5);
        assert!(round_down(&y, 10) < y && round_up(&y, 10) > y);
        assert_eq!(round_down(&int(6), 64), int(6));
    }

    #[test]
    fn decimal_round_trip_is_canonical() {
        let cases = ["1.5e0", "-2.25e3", "1e-20", "3.1415926535897932385e0"];
        for c in cases {
            let r = parse_rational(c).unwrap();
            assert_eq!(fmt_decimal(&r, 20, false), c);
            assert_eq!(fmt_decimal(&r, 20, true), c);
        }
        let third = rat(1, 3);
        assert_eq!(fmt_decimal(&third, 5, false), "3.3333e-1");
        assert_eq!(fmt_decimal(&third, 5, true), "3.3334e-1");
    }

    #[test]
    fn roots() {
        let (lo, hi) = sqrt_bounds(&int(2), 40);
        assert!(&lo * &lo <= int(2) && &hi * &hi >= int(2));
        assert_eq!(exact_root(&rat(27, 8), 3), Some(rat(3, 2)));
        assert_eq!(exact_root(&int(2), 2), None);
        let (lo, hi) = root_bounds(&int(3), 3, 30);
        assert!(lo.clone() * &lo * &lo <= int(3) && hi.clone() * &hi * &hi >= int(3));
    }
}
