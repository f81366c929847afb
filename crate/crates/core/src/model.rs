//! Barotropic state space: pressure law, pressure potential, and the lift of
//! a classical state `(rho, m)` into the phase space `(m, U, q, F)`.

use crate::error::{Error, Result};
use crate::exactnum::{Rational, XReal};
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

/// `p(rho) = rho^gamma` with reference density `rho_star` for the potential.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureLaw {
    gamma: Rational,
    rho_star: XReal,
}

impl PressureLaw {
    /// Law with the default reference density: 0 for `gamma > 1`, 1 for `gamma = 1`.
    pub fn new(gamma: &XReal) -> Result<Self> {
        let g = Self::check_gamma(gamma)?;
        let rho_star = if g.is_one() { XReal::one() } else { XReal::zero() };
        Ok(PressureLaw { gamma: g, rho_star })
    }

    pub fn with_reference(gamma: &XReal, rho_star: XReal) -> Result<Self> {
        let g = Self::check_gamma(gamma)?;
        match rho_star.sign()? {
            -1 => return Err(Error::InvalidReference),
            0 if g.is_one() => return Err(Error::InvalidReference),
            _ => {}
        }
        Ok(PressureLaw { gamma: g, rho_star })
    }

    fn check_gamma(gamma: &XReal) -> Result<Rational> {
        let g = gamma
            .as_rational()
            .ok_or_else(|| Error::UnsupportedExponent(gamma.to_string()))?;
        let one = Rational::one();
        let three = Rational::from_integer(3.into());
        if *g < one || *g > three {
            return Err(Error::UnsupportedExponent(gamma.to_string()));
        }
        Ok(g.clone())
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn gamma_x(&self) -> XReal {
        XReal::Rational(self.gamma.clone())
    }

    pub fn rho_star(&self) -> &XReal {
        &self.rho_star
    }

    pub fn gamma_f64(&self) -> f64 {
        self.gamma.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerState {
    pub rho: XReal,
    pub m: [XReal; 2],
}

impl EulerState {
    pub fn new(rho: XReal, m: [XReal; 2]) -> Self {
        EulerState { rho, m }
    }
}

/// Point `(m, U, q, F)` with `U = [[u11, u12], [u12, -u11]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PHPoint {
    pub m: [XReal; 2],
    pub u11: XReal,
    pub u12: XReal,
    pub q: XReal,
    #[serde(rename = "F")]
    pub f: [XReal; 2],
}

impl PHPoint {
    pub fn zero() -> Self {
        let z = XReal::zero;
        PHPoint {
            m: [z(), z()],
            u11: z(),
            u12: z(),
            q: z(),
            f: [z(), z()],
        }
    }

    /// Coordinates in the fixed order `m1, m2, u11, u12, q, F1, F2`.
    pub fn coords(&self) -> [&XReal; 7] {
        [
            &self.m[0], &self.m[1], &self.u11, &self.u12, &self.q, &self.f[0], &self.f[1],
        ]
    }

    pub fn from_coords(c: [XReal; 7]) -> Self {
        let [m1, m2, u11, u12, q, f1, f2] = c;
        PHPoint {
            m: [m1, m2],
            u11,
            u12,
            q,
            f: [f1, f2],
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(&XReal, &XReal) -> XReal) -> Self {
        let a = self.coords();
        let b = o.coords();
        PHPoint::from_coords(std::array::from_fn(|i| f(a[i], b[i])))
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, k: &XReal) -> Self {
        PHPoint::from_coords(self.coords().map(|a| a * k))
    }

    /// Exact coordinate-wise equality (certified for interval entries).
    pub fn eq_value(&self, o: &Self) -> Result<bool> {
        for (a, b) in self.coords().iter().zip(o.coords()) {
            if !a.eq_value(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_f64(&self) -> [f64; 7] {
        self.coords().map(XReal::to_f64)
    }
}

fn check_rho(rho: &XReal) -> Result<()> {
    if rho.sign()? <= 0 {
        return Err(Error::NonPositiveDensity);
    }
    Ok(())
}

/// `p(rho) = rho^gamma`.
pub fn pressure(law: &PressureLaw, rho: &XReal) -> Result<XReal> {
    check_rho(rho)?;
    rho.pow_rational(&law.gamma)
}

/// Pressure potential `P` with `P(rho_star) = 0` for `gamma = 1`.
pub fn pressure_potential(law: &PressureLaw, rho: &XReal) -> Result<XReal> {
    check_rho(rho)?;
    if law.gamma.is_one() {
        if law.rho_star.sign()? <= 0 {
            return Err(Error::InvalidReference);
        }
        if rho.eq_value(&law.rho_star)? {
            return Ok(XReal::zero());
        }
        return Ok(rho * rho.div(&law.rho_star)?.ln()?);
    }
    let gm1 = XReal::Rational(&law.gamma - Rational::one());
    let p = pressure(law, rho)?;
    let num = if law.rho_star.is_zero()? {
        p
    } else {
        let g1 = &law.gamma - Rational::one();
        p - rho * law.rho_star.pow_rational(&g1)?
    };
    num.div(&gm1)
}

/// Lift to phase space; also returns the energy density `E = q + P - p`.
pub fn lift_state(law: &PressureLaw, s: &EulerState) -> Result<(PHPoint, XReal)> {
    let rho = &s.rho;
    check_rho(rho)?;
    let [m1, m2] = &s.m;
    let p = pressure(law, rho)?;
    let pp = pressure_potential(law, rho)?;
    let two_rho = rho * XReal::from(2);
    let kin = (m1.square() + m2.square()).div(&two_rho)?;
    let q = &kin + &p;
    let u11 = (m1.square() - m2.square()).div(&two_rho)?;
    let u12 = (m1 * m2).div(rho)?;
    let w = (&q + &pp).div(rho)?;
    let f = [&w * m1, &w * m2];
    let e = &q + &pp - &p;
    Ok((
        PHPoint {
            m: s.m.clone(),
            u11,
            u12,
            q,
            f,
        },
        e,
    ))
}

/// Energy density `E = q + P - p` of a phase-space record at density `rho`.
pub fn energy(law: &PressureLaw, rho: &XReal, q: &XReal) -> Result<XReal> {
    Ok(q + pressure_potential(law, rho)? - pressure(law, rho)?)
}

/// Float helpers for the acoustic solver.
pub mod float {
    /// `p(rho)`.
    pub fn pressure(gamma: f64, rho: f64) -> f64 {
        rho.powf(gamma)
    }

    /// `P(rho)` with reference `rho_star`.
    pub fn potential(gamma: f64, rho_star: f64, rho: f64) -> f64 {
        if gamma == 1.0 {
            rho * (rho / rho_star).ln()
        } else {
            (rho.powf(gamma) - rho * rho_star.powf(gamma - 1.0)) / (gamma - 1.0)
        }
    }

    /// Sound speed `sqrt(p'(rho))`.
    pub fn sound_speed(gamma: f64, rho: f64) -> f64 {
        (gamma * rho.powf(gamma - 1.0)).sqrt()
    }

    /// Energy density and normal energy flux of `(rho, v1, v2)`.
    pub fn energy_and_flux(gamma: f64, rho_star: f64, rho: f64, v: [f64; 2]) -> (f64, f64) {
        let kin = 0.5 * rho * (v[0] * v[0] + v[1] * v[1]);
        let p = pressure(gamma, rho);
        let pp = potential(gamma, rho_star, rho);
        let e = kin + pp;
        (e, (e + p) * v[1])
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn law2() -> PressureLaw {
        PressureLaw::new(&XReal::from(2)).unwrap()
    }

    #[test]
    fn pressure_examples() {
        assert_eq!(pressure(&law2(), &XReal::from(4)).unwrap(), XReal::from(16));
        assert_eq!(pressure(&law2(), &XReal::from(1)).unwrap(), XReal::from(1));
        let l32 = PressureLaw::new(&XReal::ratio(3, 2)).unwrap();
        assert_eq!(pressure(&l32, &XReal::from(4)).unwrap(), XReal::from(8));
        assert_eq!(pressure(&law2(), &XReal::zero()), Err(Error::NonPositiveDensity));
    }

    #[test]
    fn potential_examples() {
        assert_eq!(pressure_potential(&law2(), &XReal::from(4)).unwrap(), XReal::from(16));
        let l1 = PressureLaw::new(&XReal::from(1)).unwrap();
        assert_eq!(pressure_potential(&l1, &XReal::from(1)).unwrap(), XReal::zero());
        assert_eq!(
            pressure_potential(&law2(), &XReal::ratio(52, 25)).unwrap(),
            XReal::ratio(2704, 625)
        );
        assert_eq!(
            PressureLaw::with_reference(&XReal::from(1), XReal::zero()),
            Err(Error::InvalidReference)
        );
        // gamma = 1 away from the reference: rho ln(rho) at rho = 2.
        let v = pressure_potential(&l1, &XReal::from(2)).unwrap().to_f64();
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn lift_examples() {
        let (z, e) = lift_state(&law2(), &EulerState::new(XReal::from(4), [XReal::zero(), XReal::zero()])).unwrap();
        assert_eq!(z.q, XReal::from(16));
        assert_eq!(z.u11, XReal::zero());
        assert_eq!(z.f, [XReal::zero(), XReal::zero()]);
        assert_eq!(e, XReal::from(16));

        let s5 = XReal::sqrt_int(5).unwrap();
        let m2 = XReal::ratio(3, 2) * &s5;
        let (z, e) = lift_state(&law2(), &EulerState::new(XReal::one(), [XReal::zero(), m2])).unwrap();
        assert_eq!(z.q, XReal::ratio(53, 8));
        assert_eq!(z.f[1], XReal::ratio(183, 16) * &s5);
        assert_eq!(e, XReal::ratio(53, 8));
    }
}
