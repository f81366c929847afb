//! Floating-point realization of the convex-integration kernels: third-order
//! potentials for wave-cone directions, staircase profiles, and the two-point
//! oscillation with its diagnostics. Nothing here certifies anything.

use crate::error::{Error, Result};
use crate::exactnum::XReal;
use crate::model::PHPoint;
use crate::wavecone::{apply_symbol, in_lambda, WaveDirection};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Highest derivative order carried by a [`Jet`].
pub const ORDER: usize = 4;
/// Number of multi-indices `(i, j, k)` with `i + j + k <= 4`.
pub const JET_LEN: usize = 35;

const fn build_multi() -> [[usize; 3]; JET_LEN] {
    let mut out = [[0usize; 3]; JET_LEN];
    let mut n = 0;
    let mut total = 0;
    while total <= ORDER {
        let mut i = total as isize;
        while i >= 0 {
            let mut j = (total as isize) - i;
            while j >= 0 {
                let k = total as isize - i - j;
                out[n] = [i as usize, j as usize, k as usize];
                n += 1;
                j -= 1;
            }
            i -= 1;
        }
        total += 1;
    }
    out
}

const fn build_index() -> [[[usize; ORDER + 1]; ORDER + 1]; ORDER + 1] {
    let multi = build_multi();
    let mut idx = [[[usize::MAX; ORDER + 1]; ORDER + 1]; ORDER + 1];
    let mut n = 0;
    while n < JET_LEN {
        let a = multi[n];
        idx[a[0]][a[1]][a[2]] = n;
        n += 1;
    }
    idx
}

/// Multi-indices in order of increasing total degree.
pub const MULTI: [[usize; 3]; JET_LEN] = build_multi();
const INDEX: [[[usize; ORDER + 1]; ORDER + 1]; ORDER + 1] = build_index();

pub fn jet_index(a: [usize; 3]) -> usize {
    INDEX[a[0]][a[1]][a[2]]
}

fn binom(n: usize, k: usize) -> f64 {
    const T: [[f64; 5]; 5] = [
        [1., 0., 0., 0., 0.],
        [1., 1., 0., 0., 0.],
        [1., 2., 1., 0., 0.],
        [1., 3., 3., 1., 0.],
        [1., 4., 6., 4., 1.],
    ];
    T[n][k]
}

/// Partial derivatives `d^a g` in `(t, x1, x2)` up to total order `order`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub order: usize,
    pub d: [f64; JET_LEN],
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet { order, d: [0.0; JET_LEN] }
    }

    pub fn get(&self, a: [usize; 3]) -> f64 {
        self.d[jet_index(a)]
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    /// Leibniz rule.
    pub fn product(&self, o: &Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut r = Jet::zero(order);
        for (n, a) in MULTI.iter().enumerate() {
            if a[0] + a[1] + a[2] > order {
                break;
            }
            let mut s = 0.0;
            for b0 in 0..=a[0] {
                for b1 in 0..=a[1] {
                    for b2 in 0..=a[2] {
                        let c = binom(a[0], b0) * binom(a[1], b1) * binom(a[2], b2);
                        s += c
                            * self.get([b0, b1, b2])
                            * o.get([a[0] - b0, a[1] - b1, a[2] - b2]);
                    }
                }
            }
            r.d[n] = s;
        }
        r
    }

    fn max_abs_of_order(&self, n: usize) -> f64 {
        MULTI
            .iter()
            .zip(self.d.iter())
            .filter(|(a, _)| a[0] + a[1] + a[2] == n)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    }
}

/// One-dimensional profile with derivatives `h, h', h'', h''', h''''`.
pub trait Profile1D: Send + Sync {
    fn derivs(&self, s: f64) -> [f64; 5];
}

/// `h(s) = s^3 / 6`.
pub struct CubicProfile;

impl Profile1D for CubicProfile {
    fn derivs(&self, s: f64) -> [f64; 5] {
        [s * s * s / 6.0, s * s / 2.0, s, 1.0, 0.0]
    }
}

/// `h(s) = sin(s)`.
pub struct SineProfile;

impl Profile1D for SineProfile {
    fn derivs(&self, s: f64) -> [f64; 5] {
        let (sn, cs) = s.sin_cos();
        [sn, cs, -sn, -cs, sn]
    }
}

type JetFn = dyn Fn([f64; 3]) -> Jet + Send + Sync;

/// Scalar field on space-time given through its jets.
#[derive(Clone)]
pub struct SmoothField {
    order: usize,
    eval: Arc<JetFn>,
}

impl SmoothField {
    pub fn new(order: usize, f: impl Fn([f64; 3]) -> Jet + Send + Sync + 'static) -> Self {
        SmoothField { order: order.min(ORDER), eval: Arc::new(f) }
    }

    pub fn zero() -> Self {
        SmoothField::new(ORDER, |_| Jet::zero(ORDER))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn jet(&self, p: [f64; 3]) -> Jet {
        (self.eval)(p)
    }

    /// `sum c t^i x1^j x2^k` over the given terms.
    pub fn polynomial(terms: Vec<([u32; 3], f64)>) -> Self {
        SmoothField::new(ORDER, move |p| {
            let mut jet = Jet::zero(ORDER);
            for (n, a) in MULTI.iter().enumerate() {
                let mut s = 0.0;
                for (e, c) in &terms {
                    let mut v = *c;
                    for ax in 0..3 {
                        let (ei, ai) = (e[ax] as usize, a[ax]);
                        if ai > ei {
                            v = 0.0;
                            break;
                        }
                        let falling: f64 = ((ei - ai + 1)..=ei).map(|x| x as f64).product();
                        v *= falling * p[ax].powi((ei - ai) as i32);
                    }
                    s += v;
                }
                jet.d[n] = s;
            }
            jet
        })
    }

    /// `g(p) = k^-3 h(k p . eta)`.
    pub fn plane_wave(eta: [f64; 3], k: f64, profile: Arc<dyn Profile1D>) -> Self {
        SmoothField::new(ORDER, move |p| {
            let s = eta[0] * p[0] + eta[1] * p[1] + eta[2] * p[2];
            let h = profile.derivs(k * s);
            let mut jet = Jet::zero(ORDER);
            for (n, a) in MULTI.iter().enumerate() {
                let ord = a[0] + a[1] + a[2];
                let eta_pow = eta[0].powi(a[0] as i32) * eta[1].powi(a[1] as i32) * eta[2].powi(a[2] as i32);
                jet.d[n] = k.powi(ord as i32 - 3) * h[ord] * eta_pow;
            }
            jet
        })
    }

    pub fn product(&self, o: &SmoothField) -> Self {
        let (a, b) = (self.clone(), o.clone());
        SmoothField::new(self.order.min(o.order), move |p| a.jet(p).product(&b.jet(p)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseFlag {
    CZero,
    CNonZero,
}

/// Coefficients `(alpha, .., zeta)` of the third-order potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub case_flag: CaseFlag,
    pub eta: [f64; 3],
}

impl OperatorCoeffs {
    pub fn max_abs(&self) -> f64 {
        [self.alpha, self.beta, self.gamma, self.delta, self.epsilon, self.zeta]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Coefficients for `z` along `eta`; the kernel equation is checked exactly.
pub fn operator_coeffs(z: &PHPoint, eta: &WaveDirection) -> Result<OperatorCoeffs> {
    for r in apply_symbol(z, eta) {
        if !r.is_zero()? {
            return Err(Error::NotAWaveDirection);
        }
    }
    let [b, c] = &eta.eta_x;
    let etaf = eta.to_f64();
    let f = |x: XReal| x.to_f64();
    if c.is_zero()? {
        if b.is_zero()? || !z.m[0].is_zero()? {
            return Err(Error::NotAWaveDirection);
        }
        let b3 = b.powi(3);
        Ok(OperatorCoeffs {
            alpha: f(z.m[1].neg().div(&b3)?),
            beta: f(z.q.div(&b3)?),
            gamma: 0.0,
            delta: f(z.f[1].div(&b3)?),
            epsilon: 0.0,
            zeta: 0.0,
            case_flag: CaseFlag::CZero,
            eta: etaf,
        })
    } else {
        let d = c * (b.square() + c.square());
        Ok(OperatorCoeffs {
            alpha: f(z.m[0].div(&d)?),
            beta: 0.0,
            gamma: f(z.q.div(&d)?),
            delta: 0.0,
            epsilon: f(z.f[1].div(&d)?),
            zeta: f(z.f[0].div(&d)?),
            case_flag: CaseFlag::CNonZero,
            eta: etaf,
        })
    }
}

/// The seven potentials given a third-derivative accessor `d3([nt, n1, n2])`.
fn operator_from(co: &OperatorCoeffs, d3: impl Fn([usize; 3]) -> f64) -> [f64; 7] {
    let OperatorCoeffs { alpha: al, beta: be, gamma: ga, delta: de, epsilon: ep, zeta: ze, .. } = *co;
    let g111 = d3([0, 3, 0]);
    let g112 = d3([0, 2, 1]);
    let g122 = d3([0, 1, 2]);
    let g222 = d3([0, 0, 3]);
    let gt11 = d3([1, 2, 0]);
    let gt12 = d3([1, 1, 1]);
    let gt22 = d3([1, 0, 2]);
    [
        al * (g112 + g222),
        -al * (g111 + g122),
        -2.0 * al * gt12 - be * (g111 - g122) - ga * (g112 - g222),
        al * (gt11 - gt22) - 2.0 * be * g112 - 2.0 * ga * g122,
        be * (g111 + g122) + ga * (g112 + g222),
        -be * gt11 - ga * gt12 - de * g112 - ep * g122 + ze * g222,
        -be * gt12 - ga * gt22 + de * g111 + ep * g112 - ze * g122,
    ]
}

fn operator_on_jet(co: &OperatorCoeffs, jet: &Jet) -> [f64; 7] {
    operator_from(co, |a| jet.get(a))
}

/// Potentials evaluated on the derivative `d_axis g` (needs order-4 jets).
fn operator_on_shifted(co: &OperatorCoeffs, jet: &Jet, axis: usize) -> [f64; 7] {
    operator_from(co, |mut a| {
        a[axis] += 1;
        jet.get(a)
    })
}

/// `L[g](pt)` in the coordinate order `m1, m2, u11, u12, q, F1, F2`.
pub fn apply_operator(co: &OperatorCoeffs, g: &SmoothField, pt: [f64; 3]) -> [f64; 7] {
    operator_on_jet(co, &g.jet(pt))
}

/// Residuals of the four rows of the linear system at one jet.
fn pde_rows(co: &OperatorCoeffs, jet: &Jet) -> [f64; 4] {
    let dt = operator_on_shifted(co, jet, 0);
    let d1 = operator_on_shifted(co, jet, 1);
    let d2 = operator_on_shifted(co, jet, 2);
    [
        d1[0] + d2[1],
        dt[0] + d1[2] + d1[4] + d2[3],
        dt[1] + d1[3] - d2[2] + d2[4],
        dt[4] + d1[5] + d2[6],
    ]
}

/// Maximum absolute residual of the linear system over the grid.
pub fn verify_pde_identity(co: &OperatorCoeffs, g: &SmoothField, grid: &[[f64; 3]]) -> Result<f64> {
    if g.order() < ORDER {
        return Err(Error::DerivativeOrderUnavailable(g.order()));
    }
    Ok(grid
        .par_iter()
        .map(|p| pde_rows(co, &g.jet(*p)).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .reduce(|| 0.0, f64::max))
}

/// Natural size of the residual: largest coefficient times largest fourth derivative.
pub fn pde_scale(co: &OperatorCoeffs, g: &SmoothField, grid: &[[f64; 3]]) -> f64 {
    let d4 = grid
        .par_iter()
        .map(|p| g.jet(*p).max_abs_of_order(4))
        .reduce(|| 0.0, f64::max);
    co.max_abs() * d4
}

/// `max |L[h(p . eta)] - z h'''(p . eta)|` over the samples.
pub fn plane_wave_check(
    co: &OperatorCoeffs,
    z: &PHPoint,
    eta: &WaveDirection,
    h: Arc<dyn Profile1D>,
    samples: &[[f64; 3]],
) -> f64 {
    let zf = z.to_f64();
    let e = eta.to_f64();
    let g = SmoothField::plane_wave(e, 1.0, h.clone());
    samples
        .iter()
        .map(|p| {
            let s = e[0] * p[0] + e[1] * p[1] + e[2] * p[2];
            let h3 = h.derivs(s)[3];
            let l = apply_operator(co, &g, *p);
            (0..7).fold(0.0f64, |m, i| m.max((l[i] - zf[i] * h3).abs()))
        })
        .fold(0.0, f64::max)
}

/// Evaluate `sum c_i w^i` and its first four derivatives.
fn poly_derivs(c: &[f64], w: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    let mut coeffs = c.to_vec();
    for slot in out.iter_mut() {
        *slot = coeffs.iter().rev().fold(0.0, |acc, v| acc * w + v);
        coeffs = coeffs.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
        if coeffs.is_empty() {
            break;
        }
    }
    out
}

/// Period-1 piecewise polynomial, each piece in its local variable.
#[derive(Clone, Debug)]
struct Periodic {
    breaks: Vec<f64>,
    polys: Vec<Vec<f64>>,
}

impl Periodic {
    fn start(&self) -> f64 {
        self.breaks[0]
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let u = s - self.start();
        let s = self.start() + (u - u.floor());
        let i = self.breaks.partition_point(|b| *b <= s).saturating_sub(1).min(self.polys.len() - 1);
        (i, s - self.breaks[i])
    }

    fn derivs(&self, s: f64) -> [f64; 5] {
        let (i, w) = self.locate(s);
        poly_derivs(&self.polys[i], w)
    }

    /// Continuous antiderivative with period mean zero.
    fn antiderivative(&self) -> Periodic {
        let mut polys = Vec::with_capacity(self.polys.len());
        let mut acc = 0.0;
        for (i, p) in self.polys.iter().enumerate() {
            let mut q = vec![acc];
            q.extend(p.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
            let len = self.breaks[i + 1] - self.breaks[i];
            acc = poly_derivs(&q, len)[0];
            polys.push(q);
        }
        let mut out = Periodic { breaks: self.breaks.clone(), polys };
        let mean = out.integral();
        for q in &mut out.polys {
            q[0] -= mean;
        }
        out
    }

    fn integral(&self) -> f64 {
        self.polys
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let len = self.breaks[i + 1] - self.breaks[i];
                p.iter().enumerate().map(|(k, c)| c * len.powi(k as i32 + 1) / (k + 1) as f64).sum::<f64>()
            })
            .sum()
    }
}

/// Mollified two-valued staircase `f_delta` and its periodic antiderivatives.
#[derive(Clone, Debug)]
pub struct StaircaseProfile {
    pub tau1: f64,
    pub delta: f64,
    f: Periodic,
    h2: Periodic,
    h1: Periodic,
    h0: Periodic,
}

/// Quintic smoothstep from `a` to `b` over a window of width `len`.
fn smoothstep5(a: f64, b: f64, len: f64) -> Vec<f64> {
    let j = b - a;
    vec![a, 0.0, 0.0, 10.0 * j / len.powi(3), -15.0 * j / len.powi(4), 6.0 * j / len.powi(5)]
}

pub fn build_staircase(tau1: f64, delta: f64) -> Result<StaircaseProfile> {
    if !(tau1 > 0.0 && tau1 < 1.0) {
        return Err(Error::BadParameters(format!("tau1 = {tau1} not in (0,1)")));
    }
    let tau2 = 1.0 - tau1;
    if !(delta > 0.0 && delta < tau1.min(tau2) / 2.0) {
        return Err(Error::BadParameters(format!("delta = {delta} out of range")));
    }
    let d = delta;
    let f = Periodic {
        breaks: vec![-d, d, tau1 - d, tau1 + d, 1.0 - d],
        polys: vec![
            smoothstep5(tau1, -tau2, 2.0 * d),
            vec![-tau2],
            smoothstep5(-tau2, tau1, 2.0 * d),
            vec![tau1],
        ],
    };
    let h2 = f.antiderivative();
    let h1 = h2.antiderivative();
    let h0 = h1.antiderivative();
    Ok(StaircaseProfile { tau1, delta, f, h2, h1, h0 })
}

impl StaircaseProfile {
    pub fn tau2(&self) -> f64 {
        1.0 - self.tau1
    }

    pub fn f_delta(&self, s: f64) -> f64 {
        self.f.derivs(s)[0]
    }

    /// Exact period integral of `f_delta` from the piecewise closed form.
    pub fn mean(&self) -> f64 {
        self.f.integral()
    }
}

impl Profile1D for StaircaseProfile {
    fn derivs(&self, s: f64) -> [f64; 5] {
        let f = self.f.derivs(s);
        [self.h0.derivs(s)[0], self.h1.derivs(s)[0], self.h2.derivs(s)[0], f[0], f[1]]
    }
}

/// Axis-aligned box in `(t, x1, x2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl GridBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        GridBox { lo, hi }
    }

    /// Cell centers of an `n^3` grid.
    pub fn grid(&self, n: usize) -> Vec<[f64; 3]> {
        let mut pts = Vec::with_capacity(n * n * n);
        let c = |ax: usize, i: usize| self.lo[ax] + (i as f64 + 0.5) * (self.hi[ax] - self.lo[ax]) / n as f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    pts.push([c(0, i), c(1, j), c(2, k)]);
                }
            }
        }
        pts
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    pub fn contains_box(&self, o: &GridBox) -> bool {
        self.contains(o.lo) && self.contains(o.hi)
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|a| self.hi[a] - self.lo[a]).product()
    }
}

/// Tensor-product bump: degree-9 smoothstep ramps of relative width `frame`
/// on every face, identically one on the inner box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub outer: GridBox,
    pub frame: f64,
}

const SMOOTH9: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0];

impl Bump {
    pub fn new(outer: GridBox, frame: f64) -> Result<Self> {
        if !(frame > 0.0 && frame < 0.5) {
            return Err(Error::BadParameters(format!("frame = {frame} not in (0,1/2)")));
        }
        Ok(Bump { outer, frame })
    }

    pub fn inner(&self) -> GridBox {
        let w = |a: usize| self.frame * (self.outer.hi[a] - self.outer.lo[a]);
        GridBox {
            lo: std::array::from_fn(|a| self.outer.lo[a] + w(a)),
            hi: std::array::from_fn(|a| self.outer.hi[a] - w(a)),
        }
    }

    fn axis(&self, a: usize, x: f64) -> [f64; 5] {
        let (lo, hi) = (self.outer.lo[a], self.outer.hi[a]);
        let w = self.frame * (hi - lo);
        if x <= lo || x >= hi {
            return [0.0; 5];
        }
        if x >= lo + w && x <= hi - w {
            return [1.0, 0.0, 0.0, 0.0, 0.0];
        }
        let (u, sgn) = if x < lo + w { ((x - lo) / w, 1.0 / w) } else { ((hi - x) / w, -1.0 / w) };
        let d = poly_derivs(&SMOOTH9, u);
        std::array::from_fn(|n| d[n] * sgn.powi(n as i32))
    }

    pub fn value(&self, p: [f64; 3]) -> f64 {
        (0..3).map(|a| self.axis(a, p[a])[0]).product()
    }

    pub fn field(&self) -> SmoothField {
        let b = *self;
        SmoothField::new(ORDER, move |p| {
            let ax: [[f64; 5]; 3] = std::array::from_fn(|a| b.axis(a, p[a]));
            let mut jet = Jet::zero(ORDER);
            for (n, m) in MULTI.iter().enumerate() {
                jet.d[n] = ax[0][m[0]] * ax[1][m[1]] * ax[2][m[2]];
            }
            jet
        })
    }
}

/// Inputs of one two-point oscillation.
#[derive(Clone, Debug)]
pub struct OscillationParams {
    pub z_star: PHPoint,
    pub z1: PHPoint,
    pub z2: PHPoint,
    pub tau1: f64,
    pub bump: Bump,
    pub k: f64,
    pub delta: f64,
    pub grid_n: usize,
}

/// Diagnostics of one oscillation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscDiagnostics {
    pub k: f64,
    pub fraction1: f64,
    pub fraction2: f64,
    pub commutator_sup: f64,
    pub avg_norm: f64,
    pub pde_residual: f64,
    pub pde_scale: f64,
    pub segment_deviation: f64,
}

impl OscDiagnostics {
    pub const CSV_HEADER: &'static str = "k,fraction1,fraction2,commutator_sup,avg_norm";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6e},{:.6e}",
            self.k, self.fraction1, self.fraction2, self.commutator_sup, self.avg_norm
        )
    }
}

#[derive(Clone, Debug)]
pub struct Oscillation {
    pub points: Vec<[f64; 3]>,
    /// `z~_k` at each grid point.
    pub field: Vec<[f64; 7]>,
    pub coeffs: OperatorCoeffs,
    pub diagnostics: OscDiagnostics,
}

fn sup_dist(a: &[f64; 7], b: &[f64; 7]) -> f64 {
    (0..7).fold(0.0f64, |m, i| m.max((a[i] - b[i]).abs()))
}

struct PointEval {
    zt: [f64; 7],
    commutator: f64,
    residual: f64,
    d4: f64,
}

/// `z~_k = L_{z2-z1}[g_k Phi]` with `g_k(p) = k^-3 h(k p . eta)` and
/// `h''' = f_delta`, evaluated on the grid of the bump's box.
pub fn build_oscillation(par: &OscillationParams) -> Result<Oscillation> {
    let d = par.z2.sub(&par.z1);
    let eta = in_lambda(&d)?.ok_or(Error::NotLambdaDirection)?;
    let co = operator_coeffs(&d, &eta)?;
    let tau2 = 1.0 - par.tau1;
    let (zs, z1, z2) = (par.z_star.to_f64(), par.z1.to_f64(), par.z2.to_f64());
    let df = d.to_f64();
    let zscale = df.iter().chain(zs.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let bary: [f64; 7] = std::array::from_fn(|i| par.tau1 * z1[i] + tau2 * z2[i]);
    if sup_dist(&bary, &zs) > 1e-12 * zscale {
        return Err(Error::BadParameters("z_star is not the tau-barycenter of z1, z2".into()));
    }
    let stairs: Arc<dyn Profile1D> = Arc::new(build_staircase(par.tau1, par.delta)?);
    let gk = SmoothField::plane_wave(co.eta, par.k, stairs);
    let phi = par.bump.field();
    let inner = par.bump.inner();
    let points = par.bump.outer.grid(par.grid_n);
    let evals: Vec<PointEval> = points
        .par_iter()
        .map(|p| {
            let jg = gk.jet(*p);
            let jp = phi.jet(*p);
            let jgp = jg.product(&jp);
            let zt = operator_on_jet(&co, &jgp);
            let plain = operator_on_jet(&co, &jg);
            let ph = jp.value();
            let commutator = (0..7).fold(0.0f64, |m, i| m.max((zt[i] - plain[i] * ph).abs()));
            let residual = pde_rows(&co, &jgp).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            PointEval { zt, commutator, residual, d4: jgp.max_abs_of_order(4) }
        })
        .collect();

    let tol = 1e-9 * zscale;
    let dn2: f64 = df.iter().map(|v| v * v).sum();
    let (mut n_in, mut n1, mut n2) = (0usize, 0usize, 0usize);
    let mut avg = [0.0f64; 7];
    let (mut comm, mut res, mut d4, mut seg) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (p, e) in points.iter().zip(&evals) {
        comm = comm.max(e.commutator);
        res = res.max(e.residual);
        d4 = d4.max(e.d4);
        let w: [f64; 7] = std::array::from_fn(|i| zs[i] + e.zt[i]);
        let lam = ((0..7).map(|i| (w[i] - z1[i]) * df[i]).sum::<f64>() / dn2).clamp(0.0, 1.0);
        let proj: [f64; 7] = std::array::from_fn(|i| z1[i] + lam * df[i]);
        seg = seg.max(sup_dist(&w, &proj));
        if inner.contains(*p) {
            n_in += 1;
            for i in 0..7 {
                avg[i] += e.zt[i];
            }
            if sup_dist(&w, &z1) <= tol {
                n1 += 1;
            } else if sup_dist(&w, &z2) <= tol {
                n2 += 1;
            }
        }
    }
    let n_in_f = n_in.max(1) as f64;
    let diagnostics = OscDiagnostics {
        k: par.k,
        fraction1: n1 as f64 / n_in_f,
        fraction2: n2 as f64 / n_in_f,
        commutator_sup: comm,
        avg_norm: avg.iter().fold(0.0f64, |m, v| m.max((v / n_in_f).abs())),
        pde_residual: res,
        pde_scale: co.max_abs() * d4,
        segment_deviation: seg,
    };
    Ok(Oscillation {
        points,
        field: evals.into_iter().map(|e| e.zt).collect(),
        coeffs: co,
        diagnostics,
    })
}

/// Second-level oscillation placed inside one plateau slab of the first.
#[derive(Clone, Debug)]
pub struct NestedDiagnostics {
    pub sub_box: GridBox,
    /// Largest deviation of the outer state from `z2` on the sub-box.
    pub outer_deviation: f64,
    pub inner: OscDiagnostics,
    /// Fractions of the composed field equal to `za` and `zb` on the inner sub-box.
    pub fraction_a: f64,
    pub fraction_b: f64,
}

/// Compose two oscillations: the outer one splits `z*` into `z1, z2`; inside a
/// sub-box where the outer state is identically `z2`, the inner one splits
/// `z2` into `za, zb` with weight `tau_inner`. `k_inner` is measured in units
/// of the sub-box side.
pub fn nested_oscillation(
    outer: &OscillationParams,
    za: &PHPoint,
    zb: &PHPoint,
    tau_inner: f64,
    k_inner: f64,
    grid_n: usize,
) -> Result<NestedDiagnostics> {
    let d = outer.z2.sub(&outer.z1);
    let eta = in_lambda(&d)?.ok_or(Error::NotLambdaDirection)?;
    let co = operator_coeffs(&d, &eta)?;
    let e = co.eta;
    let tau2 = 1.0 - outer.tau1;
    let inner = outer.bump.inner();
    let c: [f64; 3] = std::array::from_fn(|a| 0.5 * (inner.lo[a] + inner.hi[a]));
    // Shift the center along the spatial normal onto the middle of a z2 plateau.
    let s0 = e[0] * c[0] + e[1] * c[1] + e[2] * c[2];
    let target = 0.5 * (1.0 + outer.tau1);
    let shift = (target - outer.k * s0).rem_euclid(1.0) / outer.k;
    let nx = e[1] * e[1] + e[2] * e[2];
    let center = [c[0], c[1] + shift * e[1] / nx, c[2] + shift * e[2] / nx];
    let l1 = e[0].abs() + e[1].abs() + e[2].abs();
    let half = 0.45 * (tau2 - 2.0 * outer.delta) / (2.0 * outer.k * l1);
    // Unequal sides keep the inner grid off resonance with the inner wave.
    let hw = [half, 0.93 * half, 0.87 * half];
    let sub_box = GridBox::new(
        std::array::from_fn(|a| center[a] - hw[a]),
        std::array::from_fn(|a| center[a] + hw[a]),
    );
    if !inner.contains_box(&sub_box) {
        return Err(Error::BadParameters("sub-box leaves the outer plateau region".into()));
    }

    let stairs: Arc<dyn Profile1D> = Arc::new(build_staircase(outer.tau1, outer.delta)?);
    let gk = SmoothField::plane_wave(e, outer.k, stairs).product(&outer.bump.field());
    let zs = outer.z_star.to_f64();
    let z2 = outer.z2.to_f64();
    let pts = sub_box.grid(grid_n);
    let outer_vals: Vec<[f64; 7]> = pts
        .par_iter()
        .map(|p| {
            let l = apply_operator(&co, &gk, *p);
            std::array::from_fn(|i| zs[i] + l[i])
        })
        .collect();
    let outer_deviation = outer_vals.iter().fold(0.0f64, |m, w| m.max(sup_dist(w, &z2)));

    let side = 2.0 * half;
    let zstar_in = za.scale(&XReal::from_f64(tau_inner)?).add(&zb.scale(&XReal::from_f64(1.0 - tau_inner)?));
    let par = OscillationParams {
        z_star: zstar_in,
        z1: za.clone(),
        z2: zb.clone(),
        tau1: tau_inner,
        bump: Bump::new(sub_box, outer.bump.frame)?,
        k: k_inner / side,
        delta: outer.delta,
        grid_n,
    };
    let osc = build_oscillation(&par)?;
    let (zaf, zbf) = (za.to_f64(), zb.to_f64());
    let scale = zaf.iter().chain(zbf.iter()).chain(z2.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let sub_inner = par.bump.inner();
    let (mut n, mut na, mut nb) = (0usize, 0usize, 0usize);
    for ((p, w), zt) in pts.iter().zip(&outer_vals).zip(&osc.field) {
        if !sub_inner.contains(*p) {
            continue;
        }
        n += 1;
        let total: [f64; 7] = std::array::from_fn(|i| w[i] + zt[i]);
        if sup_dist(&total, &zaf) <= tol {
            na += 1;
        } else if sup_dist(&total, &zbf) <= tol {
            nb += 1;
        }
    }
    let nf = n.max(1) as f64;
    Ok(NestedDiagnostics {
        sub_box,
        outer_deviation,
        inner: osc.diagnostics,
        fraction_a: na as f64 / nf,
        fraction_b: nb as f64 / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(m1: i64, m2: i64, q: i64, f1: i64, f2: i64) -> PHPoint {
        let mut z = PHPoint::zero();
        z.m = [XReal::from(m1), XReal::from(m2)];
        z.q = XReal::from(q);
        z.f = [XReal::from(f1), XReal::from(f2)];
        z
    }

    #[test]
    fn jet_indexing() {
        assert_eq!(jet_index([0, 0, 0]), 0);
        assert_eq!(MULTI.len(), JET_LEN);
        for (n, a) in MULTI.iter().enumerate() {
            assert_eq!(jet_index(*a), n);
        }
    }

    #[test]
    fn c_zero_coefficients() {
        // Kernel with eta = (a, 1, 0): m1 = 0 and a m2 + u12 = 0, a q + F1 = 0, u11 = -q.
        let mut z = pt(0, 1, 2, 0, 3);
        z.u11 = XReal::from(-2);
        let eta = WaveDirection { eta_t: XReal::zero(), eta_x: [XReal::one(), XReal::zero()] };
        let co = operator_coeffs(&z, &eta).unwrap();
        assert_eq!(co.case_flag, CaseFlag::CZero);
        assert_eq!(
            [co.alpha, co.beta, co.gamma, co.delta, co.epsilon, co.zeta],
            [-1.0, 2.0, 0.0, 3.0, 0.0, 0.0]
        );
        let eta2 = WaveDirection { eta_t: XReal::zero(), eta_x: [XReal::from(2), XReal::zero()] };
        let co2 = operator_coeffs(&z, &eta2).unwrap();
        assert_eq!(co2.alpha, co.alpha / 8.0);
        assert_eq!(co2.delta, co.delta / 8.0);
    }

    #[test]
    fn rejects_non_kernel() {
        let z = pt(1, 0, 1, 0, 0);
        let eta = WaveDirection { eta_t: XReal::zero(), eta_x: [XReal::one(), XReal::zero()] };
        assert_eq!(operator_coeffs(&z, &eta), Err(Error::NotAWaveDirection));
    }

    #[test]
    fn staircase_plateaus() {
        let s = build_staircase(0.3, 0.05).unwrap();
        assert!((s.f_delta(0.15) + 0.7).abs() < 1e-15);
        assert!((s.f_delta(0.6) - 0.3).abs() < 1e-15);
        assert!(s.mean().abs() < 1e-12);
        let sym = build_staircase(0.5, 0.1).unwrap();
        for x in [0.03, 0.17, 0.41] {
            assert!((sym.f_delta(x) + sym.f_delta(x + 0.5)).abs() < 1e-14);
        }
        assert!(build_staircase(0.3, 0.2).is_err());
    }

    #[test]
    fn staircase_antiderivatives() {
        let s = build_staircase(0.4, 0.02).unwrap();
        let h = 1e-5;
        for x in [0.01, 0.2, 0.39, 0.41, 0.7, 0.99, 1.37] {
            let d = s.derivs(x);
            let dp = s.derivs(x + h);
            let dm = s.derivs(x - h);
            for n in 0..4 {
                let fd = (dp[n] - dm[n]) / (2.0 * h);
                assert!((fd - d[n + 1]).abs() < 1e-6 * d[n + 1].abs().max(1.0), "order {n} at {x}: {fd} vs {}", d[n + 1]);
            }
            let shifted = s.derivs(x + 1.0);
            for n in 0..5 {
                assert!((shifted[n] - d[n]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bump_derivatives() {
        let b = Bump::new(GridBox::new([0.0; 3], [1.0, 1.2, 0.9]), 0.25).unwrap();
        let f = b.field();
        let h = 1e-5;
        let p = [0.1, 0.2, 0.85];
        let j = f.jet(p);
        for ax in 0..3 {
            let mut pp = p;
            let mut pm = p;
            pp[ax] += h;
            pm[ax] -= h;
            let fd = (f.jet(pp).value() - f.jet(pm).value()) / (2.0 * h);
            let mut e = [0; 3];
            e[ax] = 1;
            assert!((fd - j.get(e)).abs() < 1e-6);
        }
        assert_eq!(b.value([0.5, 0.6, 0.45]), 1.0);
        assert_eq!(b.value([-0.1, 0.6, 0.45]), 0.0);
    }

    #[test]
    fn zero_field() {
        let z = pt(0, 1, 2, 0, 3);
        let mut zz = z.clone();
        zz.u11 = XReal::from(-2);
        let eta = WaveDirection { eta_t: XReal::zero(), eta_x: [XReal::one(), XReal::zero()] };
        let co = operator_coeffs(&zz, &eta).unwrap();
        assert_eq!(apply_operator(&co, &SmoothField::zero(), [0.3, 0.1, 0.2]), [0.0; 7]);
        assert_eq!(verify_pde_identity(&co, &SmoothField::zero(), &[[0.0; 3]]).unwrap(), 0.0);
        let low = SmoothField::new(3, |_| Jet::zero(3));
        assert_eq!(
            verify_pde_identity(&co, &low, &[[0.0; 3]]),
            Err(Error::DerivativeOrderUnavailable(3))
        );
    }
}
