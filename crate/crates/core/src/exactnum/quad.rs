//! Elements of a biquadratic field Q(sqrt d1, sqrt d2).
//!
//! Basis is `1, sqrt d1, sqrt d2, sqrt d1 * sqrt d2`. A field with a single
//! radicand stores `d2 = 1` and keeps `c2 = c3 = 0`.

use super::rational::{int, sqfree_mul, sqrt_bounds, RInterval, Rational};
use crate::error::{Error, Result};
use num_integer::Integer;
use num_traits::{Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadExt {
    d: [u64; 2],
    c: [Rational; 4],
}

impl QuadExt {
    /// Builds an element; radicands must be square-free with `d1 >= 2`, and
    /// either `d2 = 1` (then `c2 = c3 = 0`) or `d2 >= 2`, `d2 != d1`.
    pub fn new(d: [u64; 2], c: [Rational; 4]) -> Result<Self> {
        let ok_d1 = d[0] >= 2 && super::rational::is_squarefree(d[0]);
        let ok_d2 = if d[1] == 1 {
            c[2].is_zero() && c[3].is_zero()
        } else {
            d[1] != d[0] && super::rational::is_squarefree(d[1])
        };
        if !ok_d1 || !ok_d2 {
            return Err(Error::BadParameters(format!("invalid radicands {d:?}")));
        }
        Ok(QuadExt { d, c })
    }

    /// `sqrt(d)` for square-free `d >= 2`.
    pub fn sqrt_of(d: u64) -> Result<Self> {
        Self::new([d, 1], [int(0), int(1), int(0), int(0)])
    }

    pub fn radicands(&self) -> [u64; 2] {
        self.d
    }

    pub fn coeffs(&self) -> &[Rational; 4] {
        &self.c
    }

    pub fn from_rational(d: [u64; 2], x: Rational) -> Self {
        QuadExt {
            d,
            c: [x, int(0), int(0), int(0)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// Rational value when the irrational part vanishes.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.c[1..].iter().all(Zero::is_zero) {
            Some(self.c[0].clone())
        } else {
            None
        }
    }

    fn same_field(&self, o: &Self) -> Result<()> {
        if self.d == o.d {
            Ok(())
        } else {
            Err(Error::RadicandMismatch(self.d, o.d))
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same_field(o)?;
        Ok(self.zip(o, |a, b| a + b))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.same_field(o)?;
        Ok(self.zip(o, |a, b| a - b))
    }

    fn zip(&self, o: &Self, f: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        QuadExt {
            d: self.d,
            c: [
                f(&self.c[0], &o.c[0]),
                f(&self.c[1], &o.c[1]),
                f(&self.c[2], &o.c[2]),
                f(&self.c[3], &o.c[3]),
            ],
        }
    }

    pub fn neg(&self) -> Self {
        QuadExt {
            d: self.d,
            c: [-&self.c[0], -&self.c[1], -&self.c[2], -&self.c[3]],
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        QuadExt {
            d: self.d,
            c: [
                &self.c[0] * k,
                &self.c[1] * k,
                &self.c[2] * k,
                &self.c[3] * k,
            ],
        }
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.same_field(o)?;
        Ok(self.mul_same(o))
    }

    fn mul_same(&self, o: &Self) -> Self {
        let d1 = Rational::from_integer(self.d[0].into());
        let d2 = Rational::from_integer(self.d[1].into());
        let d12 = &d1 * &d2;
        let [a0, a1, a2, a3] = &self.c;
        let [b0, b1, b2, b3] = &o.c;
        let c0 = a0 * b0 + &d1 * (a1 * b1) + &d2 * (a2 * b2) + &d12 * (a3 * b3);
        let c1 = a0 * b1 + a1 * b0 + &d2 * (a2 * b3 + a3 * b2);
        let c2 = a0 * b2 + a2 * b0 + &d1 * (a1 * b3 + a3 * b1);
        let c3 = a0 * b3 + a3 * b0 + a1 * b2 + a2 * b1;
        QuadExt {
            d: self.d,
            c: [c0, c1, c2, c3],
        }
    }

    /// Multiplicative inverse via the two Galois conjugations.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let conj2 = QuadExt {
            d: self.d,
            c: [
                self.c[0].clone(),
                self.c[1].clone(),
                -&self.c[2],
                -&self.c[3],
            ],
        };
        let n = self.mul_same(&conj2);
        let conj1 = QuadExt {
            d: self.d,
            c: [n.c[0].clone(), -&n.c[1], int(0), int(0)],
        };
        let norm = n.mul_same(&conj1);
        let r = norm.c[0].clone();
        debug_assert!(norm.c[1..].iter().all(Zero::is_zero));
        Ok(conj2.mul_same(&conj1).scale(&r.recip()))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        self.same_field(o)?;
        Ok(self.mul_same(&o.inv()?))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = QuadExt::from_rational(self.d, int(1));
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_same(&base);
            }
            base = base.mul_same(&base);
            k >>= 1;
        }
        acc
    }

    /// Enclosure using `k`-bit bounds on the square roots.
    pub fn enclose(&self, k: u32) -> RInterval {
        let s1 = sqrt_interval(self.d[0], k);
        let s2 = sqrt_interval(self.d[1], k);
        let s12 = s1.mul(&s2);
        RInterval::point(self.c[0].clone())
            .add(&s1.scale(&self.c[1]))
            .add(&s2.scale(&self.c[2]))
            .add(&s12.scale(&self.c[3]))
    }

    /// Certified sign. Terminates: a nonzero element has a nonzero value
    /// because the basis is linearly independent over Q.
    pub fn sign(&self) -> i8 {
        if self.is_zero() {
            return 0;
        }
        if let Some(r) = self.as_rational() {
            return sgn(&r);
        }
        let mut k = 32;
        loop {
            let e = self.enclose(k);
            if e.lo.is_positive() {
                return 1;
            }
            if e.hi.is_negative() {
                return -1;
            }
            k *= 2;
        }
    }

    /// Re-expresses the element in the smallest field spanned by its nonzero
    /// coefficients.
    pub fn shrink(&self) -> Self {
        let z = |i: usize| self.c[i].is_zero();
        let [d1, d2] = self.d;
        if d2 == 1 || (z(2) && z(3)) {
            return QuadExt {
                d: [d1, 1],
                c: [self.c[0].clone(), self.c[1].clone(), int(0), int(0)],
            };
        }
        if z(1) && z(3) {
            return QuadExt {
                d: [d2, 1],
                c: [self.c[0].clone(), self.c[2].clone(), int(0), int(0)],
            };
        }
        if z(1) && z(2) {
            let g = d1.gcd(&d2);
            let d = sqfree_mul(d1, d2).expect("product fits, field already exists");
            return QuadExt {
                d: [d, 1],
                c: [
                    self.c[0].clone(),
                    &self.c[3] * Rational::from_integer(g.into()),
                    int(0),
                    int(0),
                ],
            };
        }
        self.clone()
    }

    /// Embeds `self` into the field with radicands `target`, which must
    /// contain the square classes of `self`'s radicands.
    pub fn embed(&self, target: [u64; 2]) -> Result<Self> {
        if self.d == target {
            return Ok(self.clone());
        }
        let e1 = basis_image(self.d[0], target).ok_or(Error::RadicandMismatch(self.d, target))?;
        let one = QuadExt::from_rational(target, int(1));
        let e2 = if self.d[1] == 1 {
            one.clone()
        } else {
            basis_image(self.d[1], target).ok_or(Error::RadicandMismatch(self.d, target))?
        };
        let e12 = e1.mul_same(&e2);
        let out = one
            .scale(&self.c[0])
            .zip(&e1.scale(&self.c[1]), |a, b| a + b)
            .zip(&e2.scale(&self.c[2]), |a, b| a + b)
            .zip(&e12.scale(&self.c[3]), |a, b| a + b);
        Ok(out)
    }

    /// Common field for two radicand pairs, if the generated square-class
    /// group has at most four elements. Prefers the basis of `a`.
    pub fn unify_fields(a: [u64; 2], b: [u64; 2]) -> Option<[u64; 2]> {
        let gens: Vec<u64> = a.iter().chain(b.iter()).copied().filter(|&x| x != 1).collect();
        let mut group = vec![1u64];
        let mut basis: Vec<u64> = Vec::new();
        for g in gens {
            if group.contains(&g) {
                continue;
            }
            let ext: Vec<u64> = group
                .iter()
                .map(|&s| sqfree_mul(s, g))
                .collect::<Option<_>>()?;
            group.extend(ext);
            basis.push(g);
            if group.len() > 4 {
                return None;
            }
        }
        match basis.len() {
            0 => Some([a[0], a[1]]),
            1 => Some([basis[0], 1]),
            _ => Some([basis[0], basis[1]]),
        }
    }
}

/// Image of `sqrt(r)` in the field with radicands `t`.
fn basis_image(r: u64, t: [u64; 2]) -> Option<QuadExt> {
    let mut c = [int(0), int(0), int(0), int(0)];
    if r == t[0] {
        c[1] = int(1);
    } else if t[1] != 1 && r == t[1] {
        c[2] = int(1);
    } else if t[1] != 1 && Some(r) == sqfree_mul(t[0], t[1]) {
        // sqrt(d1) sqrt(d2) = g sqrt(d1*d2/g^2)
        let g = t[0].gcd(&t[1]);
        c[3] = Rational::new(1.into(), g.into());
    } else {
        return None;
    }
    Some(QuadExt { d: t, c })
}

fn sqrt_interval(d: u64, k: u32) -> RInterval {
    if d == 1 {
        return RInterval::point(int(1));
    }
    let (lo, hi) = sqrt_bounds(&Rational::from_integer(d.into()), k);
    RInterval::new(lo, hi)
}

fn sgn(r: &Rational) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}
