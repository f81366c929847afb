//! Numerical search for fans that out-dissipate the self-similar solution,
//! followed by exact certification of a rounded candidate.
//!
//! The Rankine-Hugoniot equalities are eliminated by chaining from the left
//! boundary, so every candidate satisfies them by construction and only the
//! inequalities are optimized. The final normal-momentum condition is linear
//! in `rho_3` (the `q`'s cancel out of it), which closes the chain.

use crate::error::{Error, Result};
use crate::exactnum::{Rational, XReal};
use crate::fan::{beats_selfsimilar, verify_fan, Dominance, FanSubsolution, Region};
use crate::model::{float, lift_state, EulerState, PHPoint, PressureLaw};
use crate::riemann::{selfsim_dissipation, solve_riemann};
use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use num_bigint::BigInt;
use num_traits::FromPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Arithmetic needed by the chain, shared by the float search and exact certification.
pub trait ChainNum: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn is_zero(&self) -> Result<bool>;
    fn zero() -> Self;
}

impl ChainNum for f64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if *o == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / o)
    }
    fn is_zero(&self) -> Result<bool> {
        Ok(*self == 0.0)
    }
    fn zero() -> Self {
        0.0
    }
}

impl ChainNum for XReal {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Result<Self> {
        XReal::div(self, o)
    }
    fn is_zero(&self) -> Result<bool> {
        XReal::is_zero(self)
    }
    fn zero() -> Self {
        XReal::zero()
    }
}

/// Boundary quantities entering the chain: index 0 left, 1 right.
#[derive(Clone, Debug)]
pub struct Boundary<T> {
    pub rho: [T; 2],
    pub m: [[T; 2]; 2],
    /// `q - U11 = m2^2/rho + p`.
    pub pi: [T; 2],
    pub u12: [T; 2],
    pub energy: [T; 2],
    pub f2: [T; 2],
}

pub fn boundary_exact(law: &PressureLaw, left: &EulerState, right: &EulerState) -> Result<Boundary<XReal>> {
    let (zl, el) = lift_state(law, left)?;
    let (zr, er) = lift_state(law, right)?;
    Ok(Boundary {
        rho: [left.rho.clone(), right.rho.clone()],
        m: [left.m.clone(), right.m.clone()],
        pi: [&zl.q - &zl.u11, &zr.q - &zr.u11],
        u12: [zl.u12, zr.u12],
        energy: [el, er],
        f2: [zl.f[1].clone(), zr.f[1].clone()],
    })
}

pub fn boundary_f64(b: &Boundary<XReal>) -> Boundary<f64> {
    let f = |a: &[XReal; 2]| [a[0].to_f64(), a[1].to_f64()];
    Boundary {
        rho: f(&b.rho),
        m: [f(&b.m[0]), f(&b.m[1])],
        pi: f(&b.pi),
        u12: f(&b.u12),
        energy: f(&b.energy),
        f2: f(&b.f2),
    }
}

/// Free inputs of the chain: `mu_0..mu_2`, `rho_1, rho_2`, tangential `m_11, m_21`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeVars<T> {
    pub mu: [T; 3],
    pub rho: [T; 2],
    pub m1: [T; 2],
}

/// Everything fixed by the equalities once the free inputs are chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain<T> {
    pub mu: [T; 4],
    pub rho: [T; 3],
    pub m: [[T; 2]; 3],
    /// `q_i - U_i11`.
    pub pi: [T; 3],
    pub u12: [T; 3],
}

pub fn chain_close<T: ChainNum>(b: &Boundary<T>, v: &FreeVars<T>) -> Result<Chain<T>> {
    let [mu0, mu1, mu2] = &v.mu;
    let [rl, rr] = &b.rho;
    let [r1, r2] = &v.rho;
    let (ml, mr) = (&b.m[0][1], &b.m[1][1]);
    let d0 = rl.sub(r1);
    let d1 = r1.sub(r2);
    let m1 = ml.sub(&mu0.mul(&d0));
    let m2 = m1.sub(&mu1.mul(&d1));
    let c = b.pi[0].sub(&b.pi[1]);
    let a0 = mu0.mul(mu0).mul(&d0).add(&mu1.mul(mu1).mul(&d1)).add(&mu2.mul(mu2).mul(r2)).sub(&c);
    let k = m2.sub(&mu2.mul(r2)).sub(mr);
    let den = k.mul(mu2).add(&k.mul(mu2)).add(&a0).add(&mu2.mul(mu2).mul(rr));
    if den.is_zero()? {
        return Err(Error::DegenerateClosure);
    }
    let r3 = a0.mul(rr).sub(&k.mul(&k)).div(&den)?;
    let d3 = r3.sub(rr);
    if d3.is_zero()? {
        return Err(Error::DegenerateClosure);
    }
    let m3 = m2.sub(&mu2.mul(&r2.sub(&r3)));
    let mu3 = m3.sub(mr).div(&d3)?;
    let mn = [ml.clone(), m1.clone(), m2.clone(), m3.clone()];
    let mus = [mu0.clone(), mu1.clone(), mu2.clone(), mu3.clone()];
    let mut pi = vec![b.pi[0].clone()];
    for i in 0..3 {
        let next = pi[i].sub(&mus[i].mul(&mn[i].sub(&mn[i + 1])));
        pi.push(next);
    }

    // Tangential chain; the last tangential momentum solves the final condition.
    let (tl, tr) = (&b.m[0][0], &b.m[1][0]);
    let [t1, t2] = &v.m1;
    let dmu = mu3.sub(mu2);
    if dmu.is_zero()? {
        return Err(Error::DegenerateClosure);
    }
    let rhs = b.u12[0]
        .sub(&b.u12[1])
        .sub(&mu0.mul(&tl.sub(t1)))
        .sub(&mu1.mul(&t1.sub(t2)))
        .sub(&mu2.mul(t2))
        .add(&mu3.mul(tr));
    let t3 = rhs.div(&dmu)?;
    let tn = [tl.clone(), t1.clone(), t2.clone(), t3.clone()];
    let mut u12 = vec![b.u12[0].clone()];
    for i in 0..3 {
        let next = u12[i].sub(&mus[i].mul(&tn[i].sub(&tn[i + 1])));
        u12.push(next);
    }
    Ok(Chain {
        mu: mus,
        rho: [r1.clone(), r2.clone(), r3],
        m: [[t1.clone(), m1], [t2.clone(), m2], [t3, m3]],
        pi: [pi[1].clone(), pi[2].clone(), pi[3].clone()],
        u12: [u12[1].clone(), u12[2].clone(), u12[3].clone()],
    })
}

/// Exact fan from a closed chain and the remaining free values `q_i`, `F_i2`.
pub fn fan_from_chain(
    law: &PressureLaw,
    left: &EulerState,
    right: &EulerState,
    ch: &Chain<XReal>,
    q: &[XReal; 3],
    f2: &[XReal; 3],
) -> FanSubsolution {
    let regions = std::array::from_fn(|i| Region {
        rho: ch.rho[i].clone(),
        z: PHPoint {
            m: ch.m[i].clone(),
            u11: &q[i] - &ch.pi[i],
            u12: ch.u12[i].clone(),
            q: q[i].clone(),
            f: [XReal::zero(), f2[i].clone()],
        },
    });
    FanSubsolution { law: law.clone(), mu: ch.mu.clone(), left: left.clone(), right: right.clone(), regions }
}

/// Chain inputs read back from an existing fan.
pub fn free_vars_of(fan: &FanSubsolution) -> FreeVars<XReal> {
    let r = &fan.regions;
    FreeVars {
        mu: [fan.mu[0].clone(), fan.mu[1].clone(), fan.mu[2].clone()],
        rho: [r[0].rho.clone(), r[1].rho.clone()],
        m1: [r[0].z.m[0].clone(), r[1].z.m[0].clone()],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iters: u64,
    pub margin_weight: f64,
    pub rounding_denominator_cap: u64,
    pub rng_seed: u64,
    /// Lower bound built into the parameterized margins, so rounding cannot flip them.
    pub margin_floor: f64,
    /// Free tangential momenta even when the boundary tangential data vanish.
    pub general_ansatz: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 64,
            max_iters: 20_000,
            margin_weight: 0.01,
            rounding_denominator_cap: 1_000_000,
            rng_seed: 0,
            margin_floor: 1e-3,
            general_ansatz: false,
        }
    }
}

/// One decoded search point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub seed: u64,
    pub params: Vec<f64>,
    pub mu: [f64; 4],
    pub rho: [f64; 3],
    pub m: [[f64; 2]; 3],
    pub u11: [f64; 3],
    pub u12: [f64; 3],
    pub q: [f64; 3],
    pub f2: [f64; 3],
    /// Plane brackets in interface order.
    pub coeffs: [f64; 4],
    pub margins: Vec<f64>,
    pub objective: f64,
    /// Bracket on the reference plane minus the reference bracket.
    pub gain: f64,
}

impl Candidate {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Search problem data in floats.
#[derive(Clone, Debug)]
struct Problem {
    gamma: f64,
    rho_star: f64,
    b: Boundary<f64>,
    /// Reference plane `(speed, bracket)`; the fan's `mu_1` is pinned to it.
    reference: Option<(f64, f64)>,
    tangential: bool,
    cfg: SearchConfig,
}

impl Problem {
    fn dim(&self) -> usize {
        let nmu = if self.reference.is_some() { 2 } else { 3 };
        nmu + 2 + 3 + 3 + if self.tangential { 2 } else { 0 }
    }

    /// Interface whose bracket absorbs the remaining dissipation.
    fn remainder_plane(&self) -> usize {
        if self.reference.is_some() {
            1
        } else {
            3
        }
    }

    fn decode(&self, x: &[f64]) -> Option<Candidate> {
        let mut it = x.iter().cloned();
        let mut next = || it.next().unwrap_or(0.0);
        let mu: [f64; 3] = match self.reference {
            Some((s, _)) => {
                let a = next();
                let c = next();
                [a, s, c]
            }
            None => [next(), next(), next()],
        };
        let rho = [next(), next()];
        let e = [next(), next(), next()];
        let ee = [next(), next(), next()];
        let m1 = if self.tangential { [next(), next()] } else { [0.0, 0.0] };
        let ch = chain_close(&self.b, &FreeVars { mu, rho, m1 }).ok()?;
        let floor = self.cfg.margin_floor;
        let g = self.gamma;
        let p: [f64; 3] = ch.rho.map(|r| float::pressure(g, r));
        let pp: [f64; 3] = ch.rho.map(|r| if r > 0.0 { float::potential(g, self.rho_star, r) } else { f64::NAN });
        let q: [f64; 3] =
            std::array::from_fn(|i| 0.5 * (ch.pi[i] + p[i] + ch.m[i][0].powi(2) / ch.rho[i]) + floor + e[i].abs());
        let u11: [f64; 3] = std::array::from_fn(|i| q[i] - ch.pi[i]);
        let en = [self.b.energy[0], q[0] + pp[0] - p[0], q[1] + pp[1] - p[1], q[2] + pp[2] - p[2], self.b.energy[1]];
        let total: f64 =
            (0..4).map(|i| -ch.mu[i] * (en[i] - en[i + 1])).sum::<f64>() + self.b.f2[0] - self.b.f2[1];
        let rem = self.remainder_plane();
        let mut coeffs = [0.0; 4];
        let mut k = 0;
        for (i, c) in coeffs.iter_mut().enumerate() {
            if i != rem {
                *c = floor + ee[k].abs();
                k += 1;
            }
        }
        coeffs[rem] = total - coeffs.iter().sum::<f64>();
        let mut f2 = [0.0; 3];
        let mut prev = self.b.f2[0];
        for i in 0..3 {
            prev = prev - coeffs[i] - ch.mu[i] * (en[i] - en[i + 1]);
            f2[i] = prev;
        }
        let mut margins = vec![ch.mu[1] - ch.mu[0], ch.mu[2] - ch.mu[1], ch.mu[3] - ch.mu[2]];
        margins.extend(ch.rho);
        for i in 0..3 {
            let [a1, a2] = ch.m[i];
            let r = ch.rho[i];
            let pq = p[i] - q[i];
            let s1 = (a1 * a1 + a2 * a2) / r + 2.0 * pq;
            let s2 = (a1 * a1 / r - u11[i] + pq) * (a2 * a2 / r + u11[i] + pq) - (a1 * a2 / r - ch.u12[i]).powi(2);
            margins.push(-s1);
            margins.push(s2);
        }
        margins.extend(coeffs);
        let minm = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        let gain = match self.reference {
            Some((_, c)) => coeffs[rem] - c,
            None => 0.0,
        };
        let objective = if !minm.is_finite() || !gain.is_finite() {
            f64::NEG_INFINITY
        } else if minm < 0.5 * self.cfg.margin_floor {
            100.0 * (minm - 0.5 * self.cfg.margin_floor) - 1.0
        } else {
            gain + self.cfg.margin_weight * minm
        };
        Some(Candidate {
            seed: 0,
            params: x.to_vec(),
            mu: ch.mu,
            rho: ch.rho,
            m: ch.m,
            u11,
            u12: ch.u12,
            q,
            f2,
            coeffs,
            margins,
            objective,
            gain,
        })
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.decode(x).map_or(f64::NEG_INFINITY, |c| c.objective)
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let [rl, rr] = self.b.rho;
        let (lo, hi) = (rl.min(rr), rl.max(rr));
        let centre = match self.reference {
            Some((s, _)) => s,
            None => 0.5 * (self.b.m[0][1] / rl + self.b.m[1][1] / rr),
        };
        let mut x = Vec::with_capacity(self.dim());
        if self.reference.is_some() {
            x.push(centre - 0.2 * rng.gen::<f64>() - 0.01);
            x.push(centre + 0.3 * rng.gen::<f64>() + 0.01);
        } else {
            x.push(centre - 0.5 * rng.gen::<f64>() - 0.2);
            x.push(centre + 0.1 * (rng.gen::<f64>() - 0.5));
            x.push(centre + 0.5 * rng.gen::<f64>() + 0.2);
        }
        x.push(lo + (hi - lo) * rng.gen::<f64>());
        x.push(lo + (hi - lo) * rng.gen::<f64>());
        x.extend([0.01, 0.01, 0.01, 0.001, 0.001, 0.001]);
        if self.tangential {
            x.push(0.1 * (rng.gen::<f64>() - 0.5));
            x.push(0.1 * (rng.gen::<f64>() - 0.5));
        }
        x
    }
}

struct NegObjective<'a>(&'a Problem);

impl CostFunction for NegObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let v = self.0.objective(x);
        Ok(if v.is_finite() { -v } else { f64::MAX })
    }
}

const NM_ROUNDS: usize = 4;

fn nelder_mead(prob: &Problem, x0: Vec<f64>, max_iters: u64) -> Vec<f64> {
    let mut best = x0;
    let mut step = 0.05;
    for _ in 0..NM_ROUNDS {
        let mut simplex = vec![best.clone()];
        for i in 0..best.len() {
            let mut v = best.clone();
            v[i] += step * v[i].abs().max(0.1);
            simplex.push(v);
        }
        let solver = match NelderMead::new(simplex).with_sd_tolerance(1e-15) {
            Ok(s) => s,
            Err(_) => break,
        };
        let res = Executor::new(NegObjective(prob), solver)
            .configure(|s| s.max_iters(max_iters / NM_ROUNDS as u64))
            .run();
        if let Ok(r) = res {
            if let Some(p) = r.state().best_param.clone() {
                if prob.objective(&p) >= prob.objective(&best) {
                    best = p;
                }
            }
        }
        step *= 0.3;
    }
    best
}

fn problem(law: &PressureLaw, left: &EulerState, right: &EulerState, cfg: &SearchConfig) -> Result<Problem> {
    let sol = solve_riemann(law, left, right)?;
    let prof = selfsim_dissipation(law, &sol)?;
    let reference = match prof.entries() {
        [] => None,
        [(s, c)] => Some((s.to_f64(), c.to_f64())),
        _ => return Err(Error::BadParameters("reference with several shocks is not supported".into())),
    };
    let b = boundary_f64(&boundary_exact(law, left, right)?);
    let tangential = cfg.general_ansatz || b.m[0][0] != 0.0 || b.m[1][0] != 0.0;
    Ok(Problem {
        gamma: law.gamma_f64(),
        rho_star: law.rho_star().to_f64(),
        b,
        reference,
        tangential,
        cfg: cfg.clone(),
    })
}

/// Multi-restart Nelder-Mead; restart `k` uses seed `rng_seed + k`. Returns
/// the best candidate whose margins all exceed half the floor.
pub fn search_fan(law: &PressureLaw, left: &EulerState, right: &EulerState, cfg: &SearchConfig) -> Result<Option<Candidate>> {
    Ok(search_all(law, left, right, cfg)?.into_iter().next())
}

/// All feasible restart results, best first.
pub fn search_all(law: &PressureLaw, left: &EulerState, right: &EulerState, cfg: &SearchConfig) -> Result<Vec<Candidate>> {
    let prob = problem(law, left, right, cfg)?;
    let mut found: Vec<Candidate> = (0..cfg.restarts as u64)
        .into_par_iter()
        .filter_map(|k| {
            let seed = cfg.rng_seed.wrapping_add(k);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = nelder_mead(&prob, prob.random_start(&mut rng), cfg.max_iters);
            let mut c = prob.decode(&x)?;
            c.seed = seed;
            let feasible = c.min_margin() >= 0.5 * cfg.margin_floor && c.objective > 0.0 && (prob.reference.is_none() || c.gain > 0.0);
            feasible.then_some(c)
        })
        .collect();
    found.sort_by(|a, b| b.objective.total_cmp(&a.objective).then(a.seed.cmp(&b.seed)));
    Ok(found)
}

/// `round(x * cap) / cap`, reduced.
pub fn round_rational(x: f64, cap: u64) -> Result<Rational> {
    let n = (x * cap as f64).round();
    let n = BigInt::from_f64(n).ok_or_else(|| Error::BadParameters(format!("cannot round {x}")))?;
    Ok(Rational::new(n, BigInt::from(cap)))
}

/// Rounds the free values, rebuilds the chain exactly, and keeps the fan only
/// if every condition passes exactly and it strictly dominates the reference.
pub fn certify(
    law: &PressureLaw,
    left: &EulerState,
    right: &EulerState,
    cand: &Candidate,
    cfg: &SearchConfig,
) -> Result<Option<FanSubsolution>> {
    let sol = solve_riemann(law, left, right)?;
    let prof = selfsim_dissipation(law, &sol)?;
    let cap = cfg.rounding_denominator_cap;
    let r = |x: f64| round_rational(x, cap).map(XReal::Rational);
    let mu1 = match prof.entries() {
        [(s, _)] => s.clone(),
        [] => r(cand.mu[1])?,
        _ => return Ok(None),
    };
    let free = FreeVars {
        mu: [r(cand.mu[0])?, mu1, r(cand.mu[2])?],
        rho: [r(cand.rho[0])?, r(cand.rho[1])?],
        m1: [r(cand.m[0][0])?, r(cand.m[1][0])?],
    };
    let b = boundary_exact(law, left, right)?;
    let ch = match chain_close(&b, &free) {
        Ok(c) => c,
        Err(Error::DegenerateClosure) => return Ok(None),
        Err(e) => return Err(e),
    };
    let q = [r(cand.q[0])?, r(cand.q[1])?, r(cand.q[2])?];
    let f2 = [r(cand.f2[0])?, r(cand.f2[1])?, r(cand.f2[2])?];
    let fan = fan_from_chain(law, left, right, &ch, &q, &f2);
    if !verify_fan(&fan).passed() {
        return Ok(None);
    }
    let rep = beats_selfsimilar(&fan)?;
    let wanted = if prof.entries().is_empty() {
        matches!(rep.verdict, Some(Dominance::Dominates | Dominance::StrictlyDominates))
    } else {
        rep.verdict == Some(Dominance::StrictlyDominates)
    };
    Ok(wanted.then_some(fan))
}

/// First candidate, best first, that certifies exactly.
pub fn search_and_certify(
    law: &PressureLaw,
    left: &EulerState,
    right: &EulerState,
    cfg: &SearchConfig,
) -> Result<Option<(Candidate, FanSubsolution)>> {
    for c in search_all(law, left, right, cfg)? {
        if let Some(fan) = certify(law, left, right, &c, cfg)? {
            return Ok(Some((c, fan)));
        }
    }
    Ok(None)
}
