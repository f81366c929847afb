//! Constitutive-set geometry: the set K, the polynomial lambda_max tests, the
//! open sets V and W with their flux vertices, and the explicit binary split
//! of a W-vertex into two points of the convex hull of K.
//!
//! Nothing here takes a square root of a matrix invariant; negativity of
//! lambda_max is decided from trace and determinant only.

use crate::error::{Error, Result};
use crate::exactnum::XReal;
use crate::model::{pressure, pressure_potential, PHPoint, PressureLaw};

/// Symmetric 2x2 matrix `m (x) m / rho - U + (p - q) I`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixM {
    pub a11: XReal,
    pub a12: XReal,
    pub a22: XReal,
}

impl MatrixM {
    pub fn trace(&self) -> XReal {
        &self.a11 + &self.a22
    }

    pub fn det(&self) -> XReal {
        &self.a11 * &self.a22 - self.a12.square()
    }

    /// `w^T M w`.
    pub fn quad_form(&self, w: [i64; 2]) -> XReal {
        let [x, y] = w.map(XReal::from);
        &self.a11 * &x.square() + XReal::from(2) * &self.a12 * &x * &y + &self.a22 * &y.square()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaClass {
    /// Both eigenvalues negative.
    NegDef,
    /// Largest eigenvalue exactly zero.
    NegSemiDefSingular,
    /// Largest eigenvalue positive.
    PosPart,
}

/// The four diagonal directions, index `j - 1`.
pub const SIGMA: [[i64; 2]; 4] = [[1, 1], [-1, -1], [1, -1], [-1, 1]];

fn sigma(j: usize) -> Result<[i64; 2]> {
    if (1..=4).contains(&j) {
        Ok(SIGMA[j - 1])
    } else {
        Err(Error::BadParameters(format!("direction index {j} not in 1..=4")))
    }
}

pub fn matrix_m(law: &PressureLaw, rho: &XReal, z: &PHPoint) -> Result<MatrixM> {
    let p = pressure(law, rho)?;
    let [m1, m2] = &z.m;
    let shift = &p - &z.q;
    Ok(MatrixM {
        a11: m1.square().div(rho)? - &z.u11 + &shift,
        a12: (m1 * m2).div(rho)? - &z.u12,
        a22: m2.square().div(rho)? + &z.u11 + &shift,
    })
}

pub fn lambda_class(m: &MatrixM) -> Result<LambdaClass> {
    let tr = m.trace().sign()?;
    let det = m.det().sign()?;
    Ok(if tr < 0 && det > 0 {
        LambdaClass::NegDef
    } else if tr <= 0 && det == 0 {
        LambdaClass::NegSemiDefSingular
    } else {
        LambdaClass::PosPart
    })
}

fn check_cap(law: &PressureLaw, rho: &XReal, cap: &XReal) -> Result<()> {
    if !pressure(law, rho)?.lt(cap)? {
        return Err(Error::BadParameters("Q must exceed p(rho)".into()));
    }
    Ok(())
}

/// Rigid energy flux `((q + P)/rho) m`.
pub fn rigid_flux(law: &PressureLaw, rho: &XReal, m: &[XReal; 2], q: &XReal) -> Result<[XReal; 2]> {
    let w = (q + pressure_potential(law, rho)?).div(rho)?;
    Ok([&w * &m[0], &w * &m[1]])
}

/// Membership in K: the exact nonlinear identities and `q <= Q`.
pub fn in_k(law: &PressureLaw, rho: &XReal, cap: &XReal, z: &PHPoint) -> Result<bool> {
    check_cap(law, rho, cap)?;
    let mm = matrix_m(law, rho, z)?;
    for e in [&mm.a11, &mm.a12, &mm.a22] {
        if !e.is_zero()? {
            return Ok(false);
        }
    }
    // Trace of the identity forces q = |m|^2/(2 rho) + p once M = 0.
    let rf = rigid_flux(law, rho, &z.m, &z.q)?;
    if !rf[0].eq_value(&z.f[0])? || !rf[1].eq_value(&z.f[1])? {
        return Ok(false);
    }
    z.q.le(cap)
}

/// Membership in V: `M` negative definite and `q < Q`.
pub fn in_v(law: &PressureLaw, rho: &XReal, cap: &XReal, z: &PHPoint) -> Result<bool> {
    let m = matrix_m(law, rho, z)?;
    Ok(lambda_class(&m)? == LambdaClass::NegDef && z.q.lt(cap)?)
}

fn require_v(law: &PressureLaw, rho: &XReal, cap: &XReal, z: &PHPoint) -> Result<MatrixM> {
    let m = matrix_m(law, rho, z)?;
    if lambda_class(&m)? != LambdaClass::NegDef || !z.q.lt(cap)? {
        return Err(Error::NotInV);
    }
    Ok(m)
}

fn a_from_matrix(m: &MatrixM, j: usize) -> Result<XReal> {
    let s = sigma(j)?;
    let w = [s[1], -s[0]];
    m.det().div(&m.quad_form(w).neg())
}

/// `A^j = det M / (-w^T M w)` with `w = (sigma_2, -sigma_1)`.
pub fn a_j(law: &PressureLaw, rho: &XReal, cap: &XReal, z: &PHPoint, j: usize) -> Result<XReal> {
    let m = require_v(law, rho, cap, z)?;
    a_from_matrix(&m, j)
}

fn r_from(rho: &XReal, cap: &XReal, z: &PHPoint, a: &XReal, j: usize) -> Result<XReal> {
    let s = sigma(j)?;
    let ms = m_dot(&z.m, s);
    let gap = cap - &z.q;
    let four_rho = XReal::from(4) * rho;
    let rad = ms.square() + &four_rho * a + &four_rho * &gap;
    let root = rad.adjoin_sqrt()?;
    (root - ms).div(&(XReal::from(2) * gap))
}

fn m_dot(m: &[XReal; 2], s: [i64; 2]) -> XReal {
    &m[0] * XReal::from(s[0]) + &m[1] * XReal::from(s[1])
}

/// Positive root `r^j` of `r^2 (Q-q)^2 + r (Q-q) (m.sigma) - rho A - rho (Q-q) = 0`.
pub fn r_j(law: &PressureLaw, rho: &XReal, cap: &XReal, z: &PHPoint, j: usize) -> Result<XReal> {
    let m = require_v(law, rho, cap, z)?;
    let a = a_from_matrix(&m, j)?;
    r_from(rho, cap, z, &a, j)
}

/// `f^j = (A^j / r^j) sigma^j`.
pub fn f_j(law: &PressureLaw, rho: &XReal, cap: &XReal, z: &PHPoint, j: usize) -> Result<[XReal; 2]> {
    let c = c_j(law, rho, cap, z, j)?;
    let s = sigma(j)?;
    Ok([&c * XReal::from(s[0]), &c * XReal::from(s[1])])
}

fn c_j(law: &PressureLaw, rho: &XReal, cap: &XReal, z: &PHPoint, j: usize) -> Result<XReal> {
    let m = require_v(law, rho, cap, z)?;
    let a = a_from_matrix(&m, j)?;
    let r = r_from(rho, cap, z, &a, j)?;
    a.div(&r)
}

/// Barycentric witness for a point of W.
#[derive(Clone, Debug)]
pub struct WDecomposition {
    pub kappa: [XReal; 4],
    /// The flux vertices `f^1..f^4`.
    pub vertices: [[XReal; 2]; 4],
    /// The flux deviation `F - rigid flux` that the witness reproduces.
    pub deviation: [XReal; 2],
}

impl WDecomposition {
    /// `sum kappa_j f^j - v`.
    pub fn residual(&self) -> [XReal; 2] {
        let mut acc = [-&self.deviation[0], -&self.deviation[1]];
        for (k, f) in self.kappa.iter().zip(&self.vertices) {
            acc[0] = &acc[0] + k * &f[0];
            acc[1] = &acc[1] + k * &f[1];
        }
        acc
    }
}

/// Membership in W with a witness decomposition when true.
pub fn in_w(
    law: &PressureLaw,
    rho: &XReal,
    cap: &XReal,
    z: &PHPoint,
) -> Result<(bool, Option<WDecomposition>)> {
    check_cap(law, rho, cap)?;
    if !in_v(law, rho, cap, z)? {
        return Ok((false, None));
    }
    let m = matrix_m(law, rho, z)?;
    let mut c = Vec::with_capacity(4);
    for j in 1..=4 {
        let a = a_from_matrix(&m, j)?;
        let r = r_from(rho, cap, z, &a, j)?;
        c.push(a.div(&r)?);
    }
    let rf = rigid_flux(law, rho, &z.m, &z.q)?;
    let v = [&z.f[0] - &rf[0], &z.f[1] - &rf[1]];
    let half = XReal::ratio(1, 2);
    let a = (&v[0] + &v[1]) * &half;
    let b = (&v[0] - &v[1]) * &half;
    // With every c_j > 0, max(a/c1, -a/c2, 0) is fixed by the sign of a alone.
    let lo = if a.sign()? >= 0 { a.div(&c[0])? } else { a.neg().div(&c[1])? };
    let hi_gap = if b.sign()? >= 0 { b.div(&c[2])? } else { b.neg().div(&c[3])? };
    let one = XReal::one();
    if !(&lo + &hi_gap).lt(&one)? {
        return Ok((false, None));
    }
    let s = (&lo + &one - &hi_gap) * &half;
    let k1 = (&a + &c[1] * &s).div(&(&c[0] + &c[1]))?;
    let k2 = &s - &k1;
    let t = &one - &s;
    let k3 = (&b + &c[3] * &t).div(&(&c[2] + &c[3]))?;
    let k4 = &t - &k3;
    let vertices = std::array::from_fn(|i| {
        let sg = SIGMA[i];
        [&c[i] * XReal::from(sg[0]), &c[i] * XReal::from(sg[1])]
    });
    Ok((
        true,
        Some(WDecomposition {
            kappa: [k1, k2, k3, k4],
            vertices,
            deviation: v,
        }),
    ))
}

/// The four points `(m, U, q, rigid + f^j)` whose kappa-barycenter is `z`.
pub fn w_flux_vertices(
    law: &PressureLaw,
    rho: &XReal,
    cap: &XReal,
    z: &PHPoint,
) -> Result<([PHPoint; 4], WDecomposition)> {
    let (ok, dec) = in_w(law, rho, cap, z)?;
    let dec = match (ok, dec) {
        (true, Some(d)) => d,
        _ => return Err(Error::HypothesesViolated("point is not in W".into())),
    };
    let rf = rigid_flux(law, rho, &z.m, &z.q)?;
    let pts = std::array::from_fn(|i| {
        let mut p = z.clone();
        p.f = [&rf[0] + &dec.vertices[i][0], &rf[1] + &dec.vertices[i][1]];
        p
    });
    Ok((pts, dec))
}

/// Binary split of a flux vertex along a wave direction.
#[derive(Clone, Debug)]
pub struct Split {
    pub tau1: XReal,
    pub z1: PHPoint,
    pub tau2: XReal,
    pub z2: PHPoint,
    pub direction: PHPoint,
    pub mu_minus: XReal,
    pub mu_plus: XReal,
}

/// Splits `z` (negative definite, `q < Q`, flux deviation equal to `f^j`) into
/// `z1 = z + mu_- zhat` and `z2 = z + mu_+ zhat` with `mu_+ = Q - q`.
pub fn split_flux_direction(
    law: &PressureLaw,
    rho: &XReal,
    cap: &XReal,
    z: &PHPoint,
    j: usize,
) -> Result<Split> {
    let s = sigma(j)?;
    let m = matrix_m(law, rho, z)?;
    if lambda_class(&m)? != LambdaClass::NegDef {
        return Err(Error::HypothesesViolated("matrix is not negative definite".into()));
    }
    if !z.q.lt(cap)? {
        return Err(Error::HypothesesViolated("q >= Q".into()));
    }
    let a = a_from_matrix(&m, j)?;
    let r = r_from(rho, cap, z, &a, j)?;
    let c = a.div(&r)?;
    let rf = rigid_flux(law, rho, &z.m, &z.q)?;
    let fj = [&c * XReal::from(s[0]), &c * XReal::from(s[1])];
    for i in 0..2 {
        if !(&z.f[i] - &rf[i]).eq_value(&fj[i])? {
            return Err(Error::HypothesesViolated(format!("flux deviation is not f^{j}")));
        }
    }
    let sx = s.map(XReal::from);
    let ms = m_dot(&z.m, s);
    let gap = cap - &z.q;
    let two_r = XReal::from(2) * &r;
    let b = rho.div(&r)? - &ms;
    let rad = XReal::from(4) * rho * &a + b.square();
    // The root equals 2 r (Q - q) - b by the quadratic relation defining r.
    let hint = &two_r * &gap - &b;
    let root = rad.sqrt_with_hint(&hint)?;
    let mu_minus = (&b - &root).div(&two_r)?;
    let mu_plus = (&b + &root).div(&two_r)?;
    let pp = pressure_potential(law, rho)?;
    let coef = (&z.q + &pp).div(rho)? * &r + b.div(rho)?;
    let direction = PHPoint {
        m: [&r * &sx[0], &r * &sx[1]],
        u11: (&z.m[0] * &sx[0] - &z.m[1] * &sx[1]) * r.div(rho)?,
        u12: &sx[0] * &sx[1],
        q: XReal::one(),
        f: [
            z.m[0].div(rho)? + &coef * &sx[0],
            z.m[1].div(rho)? + &coef * &sx[1],
        ],
    };
    let z1 = z.add(&direction.scale(&mu_minus));
    let z2 = z.add(&direction.scale(&mu_plus));
    let width = &mu_plus - &mu_minus;
    let tau1 = mu_plus.div(&width)?;
    let tau2 = mu_minus.neg().div(&width)?;
    Ok(Split {
        tau1,
        z1,
        tau2,
        z2,
        direction,
        mu_minus,
        mu_plus,
    })
}

/// `lambda_max(m (x) m / rho - U + (p - q) I) <= 0` at fixed `q`.
pub fn in_kco_mu(law: &PressureLaw, rho: &XReal, q: &XReal, m: &[XReal; 2], u11: &XReal, u12: &XReal) -> Result<bool> {
    let z = PHPoint {
        m: m.clone(),
        u11: u11.clone(),
        u12: u12.clone(),
        q: q.clone(),
        f: [XReal::zero(), XReal::zero()],
    };
    let mm = matrix_m(law, rho, &z)?;
    Ok(mm.trace().sign()? <= 0 && mm.det().sign()? >= 0)
}
