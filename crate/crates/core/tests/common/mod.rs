//! Seeded generators shared by the property and acceptance suites.
#![allow(dead_code)]

use num_traits::Signed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wildfan_core::exactnum::{rat, Rational};
use wildfan_core::hull::{f_j, in_v, rigid_flux};
use wildfan_core::model::{lift_state, pressure, EulerState, PHPoint, PressureLaw};
use wildfan_core::XReal;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rational `n/d` with `|n/d| <= bound` and `d <= den`.
pub fn rational(r: &mut ChaCha8Rng, bound: i64, den: i64) -> Rational {
    let d = r.gen_range(1..=den);
    rat(r.gen_range(-bound * d..=bound * d), d)
}

pub fn positive(r: &mut ChaCha8Rng, lo: Rational, width: i64, den: i64) -> Rational {
    let d = r.gen_range(1..=den);
    lo + rat(r.gen_range(1..=width * d), d)
}

pub fn x(q: Rational) -> XReal {
    XReal::Rational(q)
}

pub fn law(gamma: i64) -> PressureLaw {
    PressureLaw::new(&XReal::from(gamma)).unwrap()
}

/// A point of V that is exactly a flux vertex for direction `j`.
pub struct VInstance {
    pub law: PressureLaw,
    pub rho: XReal,
    pub cap: XReal,
    pub z: PHPoint,
    pub j: usize,
}

pub fn v_instance(r: &mut ChaCha8Rng) -> VInstance {
    let law = law(if r.gen_bool(0.5) { 2 } else { 3 });
    let rho = x(positive(r, rat(1, 4), 3, 4));
    let m = [x(rational(r, 2, 4)), x(rational(r, 2, 4))];
    let (u11, u12) = (rational(r, 1, 4), rational(r, 1, 4));
    let bound = u11.abs() + u12.abs();
    let p = pressure(&law, &rho).unwrap();
    let mm = (m[0].square() + m[1].square()).div(&rho).unwrap();
    let q = p + mm + x(bound) + x(positive(r, rat(0, 1), 2, 8));
    let cap = &q + x(positive(r, rat(0, 1), 2, 8));
    let j = r.gen_range(1..=4);
    let mut z = PHPoint { m, u11: x(u11), u12: x(u12), q, f: [XReal::zero(), XReal::zero()] };
    assert!(in_v(&law, &rho, &cap, &z).unwrap(), "generator must land in V");
    let rf = rigid_flux(&law, &rho, &z.m, &z.q).unwrap();
    let fj = f_j(&law, &rho, &cap, &z, j).unwrap();
    z.f = [&rf[0] + &fj[0], &rf[1] + &fj[1]];
    VInstance { law, rho, cap, z, j }
}

/// Two lifted states at a common density.
pub fn k_pair(r: &mut ChaCha8Rng) -> (PressureLaw, XReal, PHPoint, PHPoint) {
    let law = law(if r.gen_bool(0.5) { 2 } else { 3 });
    let rho = x(positive(r, rat(0, 1), 4, 6));
    let lift = |r: &mut ChaCha8Rng| {
        let s = EulerState::new(rho.clone(), [x(rational(r, 3, 5)), x(rational(r, 3, 5))]);
        lift_state(&law, &s).unwrap().0
    };
    let z1 = lift(r);
    let z2 = lift(r);
    (law.clone(), rho, z1, z2)
}

/// Independent float quadrature of `int_a^b sqrt(p'(r))/r dr` by composite
/// 5-point Gauss-Legendre.
pub fn sound_integral(gamma: f64, a: f64, b: f64) -> f64 {
    const NODES: [f64; 5] = [0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640];
    const WEIGHTS: [f64; 5] = [
        0.5688888888888889,
        0.4786286704993665,
        0.4786286704993665,
        0.2369268850561891,
        0.2369268850561891,
    ];
    let f = |r: f64| (gamma * r.powf(gamma - 1.0)).sqrt() / r;
    let n = 256;
    let h = (b - a) / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let c = a + (i as f64 + 0.5) * h;
        for (t, w) in NODES.iter().zip(WEIGHTS) {
            sum += w * f(c + 0.5 * h * t);
        }
    }
    0.5 * h * sum
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

/// Exact split identities of one V-instance.
pub fn check_split(v: &VInstance) -> Result<(), String> {
    use wildfan_core::hull::{a_j, matrix_m, split_flux_direction};
    use wildfan_core::wavecone::in_lambda;
    let e = |err: wildfan_core::Error| err.to_string();
    let sp = split_flux_direction(&v.law, &v.rho, &v.cap, &v.z, v.j).map_err(e)?;
    ensure!(sp.mu_plus.eq_value(&(&v.cap - &v.z.q)).map_err(e)?, "mu_+ != Q - q");
    let m0 = matrix_m(&v.law, &v.rho, &v.z).map_err(e)?;
    let aj = a_j(&v.law, &v.rho, &v.cap, &v.z, v.j).map_err(e)?;
    let want = m0.trace() + XReal::from(2) * &aj;
    for zi in [&sp.z1, &sp.z2] {
        let mi = matrix_m(&v.law, &v.rho, zi).map_err(e)?;
        ensure!(mi.det().is_zero().map_err(e)?, "endpoint determinant nonzero");
        ensure!(mi.trace().eq_value(&want).map_err(e)?, "endpoint trace mismatch");
    }
    let bary = sp.z1.scale(&sp.tau1).add(&sp.z2.scale(&sp.tau2));
    ensure!(bary.eq_value(&v.z).map_err(e)?, "barycenter mismatch");
    ensure!(in_lambda(&sp.z2.sub(&sp.z1)).map_err(e)?.is_some(), "endpoint difference not in the wave cone");
    Ok(())
}

/// The explicit direction annihilates the difference of two K-points exactly.
pub fn check_k_pair(rho: &XReal, z1: &PHPoint, z2: &PHPoint) -> Result<(), String> {
    use wildfan_core::wavecone::{apply_symbol, eta_for_k_difference};
    let eta = eta_for_k_difference(rho, z1, z2).map_err(|e| e.to_string())?;
    for v in apply_symbol(&z1.sub(z2), &eta) {
        ensure!(v == XReal::zero(), "symbol row {v} is not zero");
    }
    Ok(())
}

/// Solves one random problem; `Ok(false)` when the data form vacuum.
pub fn check_riemann(r: &mut ChaCha8Rng) -> Result<bool, String> {
    use wildfan_core::riemann::{selfsim_dissipation, shock_residuals, solve_riemann, WaveKind};
    let gammas = [(1, 1), (3, 2), (2, 1), (3, 1)];
    let (gn, gd) = gammas[r.gen_range(0..4)];
    let law = PressureLaw::new(&XReal::ratio(gn, gd)).unwrap();
    let g = gn as f64 / gd as f64;
    let st = |r: &mut ChaCha8Rng| {
        let rho: f64 = r.gen_range(0.2..5.0);
        let v = [r.gen_range(-1.0..1.0), r.gen_range(-1.5..1.5)];
        EulerState::new(XReal::from_f64(rho).unwrap(), v.map(|c: f64| XReal::from_f64(rho * c).unwrap()))
    };
    let (left, right) = (st(r), st(r));
    let sol = match solve_riemann(&law, &left, &right) {
        Ok(s) => s,
        Err(wildfan_core::Error::VacuumFormation) => return Ok(false),
        Err(e) => return Err(e.to_string()),
    };
    for w in &sol.waves {
        match &w.kind {
            WaveKind::Shock { .. } => {
                let [a, b] = shock_residuals(g, w).unwrap();
                ensure!(a < 1e-10 && b < 1e-10, "shock residuals {a:e} {b:e}");
            }
            WaveKind::Rarefaction { .. } => {
                let (ra, rb) = (w.left.rho.to_f64(), w.right.rho.to_f64());
                let jump = w.right.m[1].to_f64() / rb - w.left.m[1].to_f64() / ra;
                let integral = sound_integral(g, ra, rb);
                let signed = if w.family == 1 { -jump } else { jump };
                ensure!(
                    (signed - integral).abs() < 1e-10 * integral.abs().max(1.0),
                    "rarefaction endpoint off its curve: {signed} vs {integral}"
                );
            }
            WaveKind::Slip { .. } => {}
        }
    }
    let prof = selfsim_dissipation(&law, &sol).map_err(|e| e.to_string())?;
    for (_, c) in prof.entries() {
        ensure!(c.to_f64() >= -1e-12, "negative bracket {}", c.to_f64());
    }
    Ok(true)
}
