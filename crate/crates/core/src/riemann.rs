//! One-dimensional Riemann problem in the normal direction `x2` and the
//! dissipation of its self-similar solution.
//!
//! Single shocks (and trivial data) are detected exactly first; other data go
//! through the standard wave-curve construction in floating point, with the
//! results stored as exact dyadic values and `exact = false`.

use crate::error::{Error, Result};
use crate::exactnum::XReal;
use crate::fan::DissipationProfile;
use crate::model::{float, lift_state, pressure, EulerState, PressureLaw};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum WaveKind {
    Shock { speed: XReal },
    Rarefaction { speed_lo: XReal, speed_hi: XReal },
    Slip { speed: XReal },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    /// Characteristic family: 1, 2 (slip) or 3.
    pub family: u8,
    pub kind: WaveKind,
    pub left: EulerState,
    pub right: EulerState,
}

impl Wave {
    /// Leading speed of the wave (lower edge for a rarefaction).
    pub fn speed(&self) -> &XReal {
        match &self.kind {
            WaveKind::Shock { speed } | WaveKind::Slip { speed } => speed,
            WaveKind::Rarefaction { speed_lo, .. } => speed_lo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarSolution {
    pub left: EulerState,
    pub right: EulerState,
    pub waves: Vec<Wave>,
    /// All speeds and states are exact values of the true solution.
    pub exact: bool,
}

impl SelfSimilarSolution {
    /// Constant states between consecutive waves, boundary states included.
    pub fn states(&self) -> Vec<&EulerState> {
        let mut out = vec![&self.left];
        out.extend(self.waves.iter().map(|w| &w.right));
        out
    }
}

/// Riemann data file: `{"gamma", "left": {"rho","m"}, "right": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannData {
    pub gamma: XReal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_star: Option<XReal>,
    pub left: EulerState,
    pub right: EulerState,
}

impl RiemannData {
    pub fn law(&self) -> Result<PressureLaw> {
        match &self.rho_star {
            Some(r) => PressureLaw::with_reference(&self.gamma, r.clone()),
            None => PressureLaw::new(&self.gamma),
        }
    }
}

fn same_state(a: &EulerState, b: &EulerState) -> Result<bool> {
    Ok(a.rho.eq_value(&b.rho)? && a.m[0].eq_value(&b.m[0])? && a.m[1].eq_value(&b.m[1])?)
}

/// A single admissible shock joining the data, decided exactly.
fn exact_single_shock(law: &PressureLaw, l: &EulerState, r: &EulerState) -> Result<Option<Wave>> {
    let drho = &r.rho - &l.rho;
    if drho.is_zero()? {
        return Ok(None);
    }
    let v1l = l.m[0].div(&l.rho)?;
    let v1r = r.m[0].div(&r.rho)?;
    if !v1l.eq_value(&v1r)? {
        return Ok(None);
    }
    let dm = &r.m[1] - &l.m[1];
    let sigma = dm.div(&drho)?;
    let flux = |s: &EulerState| -> Result<XReal> { Ok(s.m[1].square().div(&s.rho)? + pressure(law, &s.rho)?) };
    if !(&sigma * &dm).eq_value(&(flux(r)? - flux(l)?))? {
        return Ok(None);
    }
    // Compressive: normal velocity drops across the shock.
    let ul = l.m[1].div(&l.rho)?;
    let ur = r.m[1].div(&r.rho)?;
    if !ur.lt(&ul)? {
        return Ok(None);
    }
    let family = if drho.is_positive()? { 1 } else { 3 };
    Ok(Some(Wave {
        family,
        kind: WaveKind::Shock { speed: sigma },
        left: l.clone(),
        right: r.clone(),
    }))
}

/// `f_K(rho)`: velocity change along the wave curve through `rho_k`.
pub fn wave_curve(gamma: f64, rho_k: f64, rho: f64) -> f64 {
    if rho > rho_k {
        let dp = float::pressure(gamma, rho) - float::pressure(gamma, rho_k);
        (dp * (rho - rho_k) / (rho * rho_k)).sqrt()
    } else {
        rarefaction_integral(gamma, rho_k, rho)
    }
}

/// `int_{rho_k}^{rho} c(r)/r dr` in closed form.
pub fn rarefaction_integral(gamma: f64, rho_k: f64, rho: f64) -> f64 {
    if gamma == 1.0 {
        (rho / rho_k).ln()
    } else {
        let e = 0.5 * (gamma - 1.0);
        2.0 * gamma.sqrt() / (gamma - 1.0) * (rho.powf(e) - rho_k.powf(e))
    }
}

const BISECTION_ITERS: usize = 200;

/// Middle density solving `u_L - f_L(rho) = u_R + f_R(rho)`.
fn middle_density(gamma: f64, rl: f64, ul: f64, rr: f64, ur: f64) -> Result<f64> {
    let phi = |r: f64| wave_curve(gamma, rl, r) + wave_curve(gamma, rr, r) + ur - ul;
    let mut lo = 1e-12;
    let mut hi = rl.max(rr) * 1e6;
    if phi(lo) > 0.0 {
        return Err(Error::VacuumFormation);
    }
    if phi(hi) < 0.0 {
        return Err(Error::BadParameters("middle density beyond bracket".into()));
    }
    for _ in 0..BISECTION_ITERS {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn state_f64(rho: f64, v1: f64, v2: f64) -> Result<EulerState> {
    Ok(EulerState::new(
        XReal::from_f64(rho)?,
        [XReal::from_f64(rho * v1)?, XReal::from_f64(rho * v2)?],
    ))
}

fn same_f64(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * a.abs().max(b.abs())
}

fn float_solve(law: &PressureLaw, l: &EulerState, r: &EulerState) -> Result<SelfSimilarSolution> {
    let g = law.gamma_f64();
    let (rl, rr) = (l.rho.to_f64(), r.rho.to_f64());
    let (v1l, v1r) = (l.m[0].to_f64() / rl, r.m[0].to_f64() / rr);
    let (ul, ur) = (l.m[1].to_f64() / rl, r.m[1].to_f64() / rr);
    let rm = middle_density(g, rl, ul, rr, ur)?;
    let um = 0.5 * ((ul - wave_curve(g, rl, rm)) + (ur + wave_curve(g, rr, rm)));
    let ml = state_f64(rm, v1l, um)?;
    let mr = state_f64(rm, v1r, um)?;
    let c = |rho: f64| float::sound_speed(g, rho);
    let mut waves = Vec::new();
    if !same_f64(rm, rl) {
        let kind = if rm > rl {
            WaveKind::Shock { speed: XReal::from_f64((rm * um - rl * ul) / (rm - rl))? }
        } else {
            WaveKind::Rarefaction {
                speed_lo: XReal::from_f64(ul - c(rl))?,
                speed_hi: XReal::from_f64(um - c(rm))?,
            }
        };
        waves.push(Wave { family: 1, kind, left: l.clone(), right: ml.clone() });
    }
    if !same_f64(v1l, v1r) {
        waves.push(Wave {
            family: 2,
            kind: WaveKind::Slip { speed: XReal::from_f64(um)? },
            left: ml.clone(),
            right: mr.clone(),
        });
    }
    if !same_f64(rm, rr) {
        let kind = if rm > rr {
            WaveKind::Shock { speed: XReal::from_f64((rr * ur - rm * um) / (rr - rm))? }
        } else {
            WaveKind::Rarefaction {
                speed_lo: XReal::from_f64(um + c(rm))?,
                speed_hi: XReal::from_f64(ur + c(rr))?,
            }
        };
        waves.push(Wave { family: 3, kind, left: mr.clone(), right: r.clone() });
    }
    if let Some(last) = waves.last_mut() {
        last.right = r.clone();
    }
    if let Some(first) = waves.first_mut() {
        first.left = l.clone();
    }
    Ok(SelfSimilarSolution { left: l.clone(), right: r.clone(), waves, exact: false })
}

pub fn solve_riemann(law: &PressureLaw, left: &EulerState, right: &EulerState) -> Result<SelfSimilarSolution> {
    for s in [left, right] {
        if !s.rho.is_positive()? {
            return Err(Error::NonPositiveDensity);
        }
    }
    let trivial = SelfSimilarSolution { left: left.clone(), right: right.clone(), waves: vec![], exact: true };
    match same_state(left, right) {
        Ok(true) => return Ok(trivial),
        Ok(false) => {}
        Err(Error::Inconclusive(_)) => {}
        Err(e) => return Err(e),
    }
    match exact_single_shock(law, left, right) {
        Ok(Some(w)) => {
            return Ok(SelfSimilarSolution { left: left.clone(), right: right.clone(), waves: vec![w], exact: true })
        }
        Ok(None) | Err(Error::Inconclusive(_)) => {}
        Err(e) => return Err(e),
    }
    float_solve(law, left, right)
}

/// Bracket `-s (E_L - E_R) + (F2_L - F2_R)` of every shock; other waves carry none.
pub fn selfsim_dissipation(law: &PressureLaw, sol: &SelfSimilarSolution) -> Result<DissipationProfile> {
    let mut entries = Vec::new();
    for w in &sol.waves {
        let WaveKind::Shock { speed } = &w.kind else { continue };
        let coeff = if sol.exact {
            let (zl, el) = lift_state(law, &w.left)?;
            let (zr, er) = lift_state(law, &w.right)?;
            (&el - &er) * speed.neg() + (&zl.f[1] - &zr.f[1])
        } else {
            let g = law.gamma_f64();
            let rs = law.rho_star().to_f64();
            let ef = |s: &EulerState| {
                let rho = s.rho.to_f64();
                float::energy_and_flux(g, rs, rho, [s.m[0].to_f64() / rho, s.m[1].to_f64() / rho])
            };
            let (el, fl) = ef(&w.left);
            let (er, fr) = ef(&w.right);
            XReal::from_f64(-speed.to_f64() * (el - er) + (fl - fr))?
        };
        entries.push((speed.clone(), coeff));
    }
    DissipationProfile::new(entries)
}

/// Relative residuals of the mass and normal-momentum jump conditions.
pub fn shock_residuals(gamma: f64, w: &Wave) -> Option<[f64; 2]> {
    let WaveKind::Shock { speed } = &w.kind else { return None };
    let s = speed.to_f64();
    let f = |e: &EulerState| {
        let rho = e.rho.to_f64();
        let m = e.m[1].to_f64();
        (rho, m, m * m / rho + float::pressure(gamma, rho))
    };
    let (rl, ml, pl) = f(&w.left);
    let (rr, mr, pr) = f(&w.right);
    let mass = (s * (rr - rl) - (mr - ml)).abs() / (s.abs() * rr.max(rl) + mr.abs().max(ml.abs())).max(1e-300);
    let mom = (s * (mr - ml) - (pr - pl)).abs() / (s.abs() * mr.abs().max(ml.abs()) + pr.max(pl)).max(1e-300);
    Some([mass, mom])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(g: i64) -> PressureLaw {
        PressureLaw::new(&XReal::from(g)).unwrap()
    }

    fn st(rho: i64, m: [i64; 2]) -> EulerState {
        EulerState::new(XReal::from(rho), m.map(XReal::from))
    }

    #[test]
    fn paper_data_single_shock() {
        let s5 = XReal::sqrt_int(5).unwrap();
        let l = EulerState::new(XReal::one(), [XReal::zero(), XReal::ratio(3, 2) * &s5]);
        let r = st(4, [0, 0]);
        let sol = solve_riemann(&law(2), &l, &r).unwrap();
        assert!(sol.exact);
        assert_eq!(sol.waves.len(), 1);
        assert_eq!(sol.waves[0].kind, WaveKind::Shock { speed: XReal::ratio(-1, 2) * &s5 });
        let prof = selfsim_dissipation(&law(2), &sol).unwrap();
        assert_eq!(prof.entries()[0].1, XReal::ratio(27, 4) * &s5);
    }

    #[test]
    fn constant_data() {
        let sol = solve_riemann(&law(2), &st(1, [1, 2]), &st(1, [1, 2])).unwrap();
        assert!(sol.waves.is_empty());
        assert!(selfsim_dissipation(&law(2), &sol).unwrap().entries().is_empty());
    }

    #[test]
    fn symmetric_two_shocks() {
        let sol = solve_riemann(&law(2), &st(1, [0, 1]), &st(1, [0, -1])).unwrap();
        assert_eq!(sol.waves.len(), 2);
        let s1 = sol.waves[0].speed().to_f64();
        let s3 = sol.waves[1].speed().to_f64();
        assert!((s1 + s3).abs() < 1e-12);
        assert!(sol.waves[0].right.rho.to_f64() > 1.0);
        // Oracle: u_M = 0 by symmetry, so 1 = f(rho_M) with the shock curve.
        let rm = sol.waves[0].right.rho.to_f64();
        assert!(((rm * rm - 1.0) * (rm - 1.0) / rm).sqrt() - 1.0 < 1e-12);
        let prof = selfsim_dissipation(&law(2), &sol).unwrap();
        let e = prof.entries();
        assert_eq!(e.len(), 2);
        assert!((e[0].1.to_f64() - e[1].1.to_f64()).abs() < 1e-10);
        assert!(e[0].1.to_f64() > 0.0);
    }

    #[test]
    fn vacuum_detected() {
        let r = solve_riemann(&law(2), &st(1, [0, -10]), &st(1, [0, 10]));
        assert_eq!(r, Err(Error::VacuumFormation));
    }
}
