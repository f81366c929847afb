//! Fan subsolutions: exact verification of the algebraic system, dissipation
//! profiles, Q-certification, and comparison with the self-similar solution.
//!
//! Profiles store raw plane brackets. The surface factor `1/sqrt(mu^2 + 1)` is
//! positive and plane-local, so dropping it changes no dominance decision.

use crate::error::{Error, Result};
use crate::exactnum::{rat, QuadExt, Rational, XReal};
use crate::hull::{in_w, WDecomposition};
use crate::model::{energy, lift_state, pressure, EulerState, PHPoint, PressureLaw};
use crate::riemann::{selfsim_dissipation, solve_riemann};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub rho: XReal,
    #[serde(flatten)]
    pub z: PHPoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FanSubsolution {
    pub law: PressureLaw,
    pub mu: [XReal; 4],
    pub left: EulerState,
    pub right: EulerState,
    pub regions: [Region; 3],
}

/// On-disk form of a fan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanFile {
    pub gamma: XReal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_star: Option<XReal>,
    pub left: EulerState,
    pub right: EulerState,
    pub mu: Vec<XReal>,
    pub regions: Vec<Region>,
}

impl FanSubsolution {
    pub fn from_file(f: &FanFile) -> Result<Self> {
        let law = match &f.rho_star {
            Some(r) => PressureLaw::with_reference(&f.gamma, r.clone())?,
            None => PressureLaw::new(&f.gamma)?,
        };
        let mu: [XReal; 4] = f
            .mu
            .clone()
            .try_into()
            .map_err(|_| Error::Parse("mu must have four entries".into()))?;
        let regions: [Region; 3] = f
            .regions
            .clone()
            .try_into()
            .map_err(|_| Error::Parse("regions must have three entries".into()))?;
        Ok(FanSubsolution { law, mu, left: f.left.clone(), right: f.right.clone(), regions })
    }

    pub fn to_file(&self) -> FanFile {
        let default = PressureLaw::new(&self.law.gamma_x()).ok();
        let rho_star = match default {
            Some(d) if d.rho_star() == self.law.rho_star() => None,
            _ => Some(self.law.rho_star().clone()),
        };
        FanFile {
            gamma: self.law.gamma_x(),
            rho_star,
            left: self.left.clone(),
            right: self.right.clone(),
            mu: self.mu.to_vec(),
            regions: self.regions.to_vec(),
        }
    }

    /// Records `0..=4`: lifted left boundary, the three regions, lifted right boundary.
    /// Each record carries its density, phase-space point, and energy density.
    pub fn records(&self) -> Result<Vec<(XReal, PHPoint, XReal)>> {
        let (zl, el) = lift_state(&self.law, &self.left)?;
        let (zr, er) = lift_state(&self.law, &self.right)?;
        let mut out = vec![(self.left.rho.clone(), zl, el)];
        for r in &self.regions {
            out.push((r.rho.clone(), r.z.clone(), energy(&self.law, &r.rho, &r.z.q)?));
        }
        out.push((self.right.rho.clone(), zr, er));
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub value: XReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub witness: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominance {
    StrictlyDominates,
    Dominates,
    Equal,
    Incomparable,
    Dominated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub title: String,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Dominance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(title: &str) -> Self {
        VerificationReport { title: title.into(), checks: vec![], verdict: None, notes: vec![] }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn any_inconclusive(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Inconclusive)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| c.status != Status::Pass).collect()
    }

    fn push(&mut self, name: String, outcome: Result<(bool, Vec<Witness>)>) {
        let rec = match outcome {
            Ok((ok, witness)) => CheckRecord {
                name,
                status: if ok { Status::Pass } else { Status::Fail },
                witness,
                detail: None,
            },
            Err(Error::Inconclusive(p)) => CheckRecord {
                name,
                status: Status::Inconclusive,
                witness: vec![],
                detail: Some(format!("undecided at {p} bits")),
            },
            Err(e) => CheckRecord { name, status: Status::Fail, witness: vec![], detail: Some(e.to_string()) },
        };
        self.checks.push(rec);
    }
}

fn w(label: &str, value: XReal) -> Witness {
    Witness { label: label.into(), value }
}

/// Every condition of the algebraic system, each as its own report entry.
pub fn verify_fan(fan: &FanSubsolution) -> VerificationReport {
    let mut rep = VerificationReport::new("fan subsolution conditions");
    let mu = &fan.mu;
    rep.push(
        "order of speeds".into(),
        (|| {
            let mut ok = true;
            let mut wit = vec![];
            for i in 0..3 {
                let d = &mu[i + 1] - &mu[i];
                ok &= d.is_positive()?;
                wit.push(w(&format!("mu{}-mu{}", i + 1, i), d));
            }
            Ok((ok, wit))
        })(),
    );
    for (i, r) in fan.regions.iter().enumerate() {
        rep.push(format!("rho{} > 0", i + 1), r.rho.is_positive().map(|ok| (ok, vec![w("rho", r.rho.clone())])));
    }
    let recs = match fan.records() {
        Ok(r) => r,
        Err(e) => {
            rep.push("boundary lift".into(), Err(e));
            return rep;
        }
    };
    for i in 0..4 {
        let (ri, zi, ei) = &recs[i];
        let (rj, zj, ej) = &recs[i + 1];
        let m = &mu[i];
        let eq = |lhs: XReal, rhs: XReal| -> Result<(bool, Vec<Witness>)> {
            let res = &lhs - &rhs;
            Ok((res.is_zero()?, vec![w("lhs-rhs", res)]))
        };
        rep.push(format!("rh1[{i}] mass"), eq(m * (ri - rj), &zi.m[1] - &zj.m[1]));
        rep.push(format!("rh2[{i}] tangential momentum"), eq(m * (&zi.m[0] - &zj.m[0]), &zi.u12 - &zj.u12));
        rep.push(
            format!("rh3[{i}] normal momentum"),
            eq(m * (&zi.m[1] - &zj.m[1]), &zj.u11 - &zi.u11 + &zi.q - &zj.q),
        );
        let bracket = (ei - ej) * m.neg() + (&zi.f[1] - &zj.f[1]);
        rep.push(
            format!("rh4[{i}] energy"),
            bracket.sign().map(|s| (s >= 0, vec![w("bracket", bracket.clone())])),
        );
    }
    for i in 1..=3 {
        let (rho, z, _) = &recs[i];
        let out = (|| -> Result<[XReal; 2]> {
            let p = pressure(&fan.law, rho)?;
            let pq = &p - &z.q;
            let s1 = (z.m[0].square() + z.m[1].square()).div(rho)? + &pq * XReal::from(2);
            let a = z.m[0].square().div(rho)? - &z.u11 + &pq;
            let b = z.m[1].square().div(rho)? + &z.u11 + &pq;
            let c = (&z.m[0] * &z.m[1]).div(rho)? - &z.u12;
            Ok([s1, a * b - c.square()])
        })();
        match out {
            Ok([s1, s2]) => {
                rep.push(format!("subs1[{i}] trace"), s1.is_negative().map(|ok| (ok, vec![w("value", s1.clone())])));
                rep.push(format!("subs2[{i}] determinant"), s2.is_positive().map(|ok| (ok, vec![w("value", s2.clone())])));
            }
            Err(e) => rep.push(format!("subs[{i}]"), Err(e)),
        }
    }
    rep
}

/// Plane-supported dissipation: strictly increasing speeds with brackets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationProfile {
    entries: Vec<(XReal, XReal)>,
}

impl DissipationProfile {
    /// Sorts by speed and merges planes with equal speed.
    pub fn new(mut entries: Vec<(XReal, XReal)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.to_f64().total_cmp(&b.0.to_f64()));
        let mut out: Vec<(XReal, XReal)> = Vec::with_capacity(entries.len());
        for (s, c) in entries {
            if let Some(last) = out.last_mut() {
                if last.0.eq_value(&s)? {
                    last.1 = &last.1 + &c;
                    continue;
                }
                if !last.0.lt(&s)? {
                    return Err(Error::InadmissibleProfile("speeds out of order".into()));
                }
            }
            out.push((s, c));
        }
        Ok(DissipationProfile { entries: out })
    }

    pub fn entries(&self) -> &[(XReal, XReal)] {
        &self.entries
    }

    /// Bracket on the plane of the given speed, zero off the support.
    pub fn coefficient_at(&self, speed: &XReal) -> Result<XReal> {
        for (s, c) in &self.entries {
            if s.eq_value(speed)? {
                return Ok(c.clone());
            }
        }
        Ok(XReal::zero())
    }
}

/// Brackets `-mu_i (E_i - E_{i+1}) + (F_i2 - F_{i+1,2})` on the four planes.
pub fn fan_dissipation_profile(fan: &FanSubsolution) -> Result<DissipationProfile> {
    let recs = fan.records()?;
    let entries = (0..4)
        .map(|i| {
            let (_, zi, ei) = &recs[i];
            let (_, zj, ej) = &recs[i + 1];
            (fan.mu[i].clone(), (ei - ej) * fan.mu[i].neg() + (&zi.f[1] - &zj.f[1]))
        })
        .collect();
    DissipationProfile::new(entries)
}

/// Plane-wise comparison. `StrictlyDominates`: at least the reference on every
/// plane and strictly more on every plane of the reference support.
/// `Dominates`: at least the reference everywhere and strictly more somewhere.
pub fn compare_profiles(candidate: &DissipationProfile, reference: &DissipationProfile) -> Result<Dominance> {
    for (_, c) in candidate.entries() {
        if c.is_negative()? {
            return Err(Error::InadmissibleProfile("negative candidate bracket".into()));
        }
    }
    let mut planes: Vec<XReal> = candidate.entries().iter().map(|e| e.0.clone()).collect();
    for (s, _) in reference.entries() {
        let mut seen = false;
        for p in &planes {
            if p.eq_value(s)? {
                seen = true;
                break;
            }
        }
        if !seen {
            planes.push(s.clone());
        }
    }
    let (mut more, mut less) = (false, false);
    let mut strict_on_support = true;
    for p in &planes {
        let rc = reference.coefficient_at(p)?;
        let sgn = (candidate.coefficient_at(p)? - &rc).sign()?;
        more |= sgn > 0;
        less |= sgn < 0;
        let on_support = reference.entries().iter().any(|(s, _)| s.eq_value(p).unwrap_or(false));
        if on_support && sgn <= 0 {
            strict_on_support = false;
        }
    }
    Ok(match (more, less) {
        (true, true) => Dominance::Incomparable,
        (false, false) => Dominance::Equal,
        (false, true) => Dominance::Dominated,
        (true, false) if strict_on_support && !reference.entries().is_empty() => Dominance::StrictlyDominates,
        (true, false) => Dominance::Dominates,
    })
}

/// Shortest decimal `x` with `lo < x < hi`, certified exactly.
pub fn decimal_separator(lo: &XReal, hi: &XReal) -> Result<Option<Rational>> {
    if !lo.lt(hi)? {
        return Ok(None);
    }
    let l = lo.to_f64();
    for digits in 0..30u32 {
        let scale = 10f64.powi(digits as i32);
        let base = (l * scale).floor() as i64;
        for step in 0..3 {
            let x = rat(base + step, 1) / Rational::from_integer(10i64.pow(digits).into());
            let xr = XReal::Rational(x.clone());
            if lo.lt(&xr)? && xr.lt(hi)? {
                return Ok(Some(x));
            }
        }
    }
    Ok(None)
}

/// Compares the fan's profile with the self-similar solution of its data.
pub fn beats_selfsimilar(fan: &FanSubsolution) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new("dominance over the self-similar solution");
    rep.notes.push("brackets omit the positive surface factor 1/sqrt(mu^2+1)".into());
    let sol = solve_riemann(&fan.law, &fan.left, &fan.right)?;
    let reference = selfsim_dissipation(&fan.law, &sol)?;
    let cand = fan_dissipation_profile(fan)?;
    rep.checks.push(CheckRecord {
        name: "self-similar solution exact".into(),
        status: if sol.exact { Status::Pass } else { Status::Inconclusive },
        witness: reference.entries().iter().map(|(s, _)| w("speed", s.clone())).collect(),
        detail: None,
    });
    for (s, rc) in reference.entries() {
        let cc = cand.coefficient_at(s)?;
        rep.push(
            format!("plane {} candidate > reference", s),
            (|| {
                let gap = &cc - rc;
                let ok = gap.is_positive()?;
                let mut wit = vec![w("candidate", cc.clone()), w("reference", rc.clone())];
                if ok {
                    if let Some(x) = decimal_separator(rc, &cc)? {
                        wit.push(w("separator", XReal::Rational(x)));
                    }
                }
                Ok((ok, wit))
            })(),
        );
    }
    let verdict = compare_profiles(&cand, &reference);
    rep.push(
        "profile dominance".into(),
        verdict.clone().map(|v| (v == Dominance::StrictlyDominates, vec![])),
    );
    rep.verdict = verdict.ok();
    Ok(rep)
}

/// In-W certificate of one region at cap `Q = q * 2^n`.
#[derive(Clone, Debug)]
pub struct QCertificate {
    pub region: usize,
    pub n: u32,
    pub cap: XReal,
    pub decomposition: WDecomposition,
}

pub const FIND_Q_MAX_DOUBLINGS: u32 = 64;

/// Smallest `Q = q_i 2^n`, `n >= 1`, with a certified in-W witness, per region.
pub fn find_q(fan: &FanSubsolution) -> Result<Vec<QCertificate>> {
    let mut out = Vec::with_capacity(3);
    for (i, r) in fan.regions.iter().enumerate() {
        let mut found = None;
        let mut cap = r.z.q.clone();
        for n in 1..=FIND_Q_MAX_DOUBLINGS {
            cap = &cap * XReal::from(2);
            match in_w(&fan.law, &r.rho, &cap, &r.z) {
                Ok((true, Some(d))) => {
                    found = Some(QCertificate { region: i + 1, n, cap: cap.clone(), decomposition: d });
                    break;
                }
                Ok(_) => {}
                Err(Error::Inconclusive(_)) => return Err(Error::NotCertifiableWithinCap),
                Err(Error::HypothesesViolated(_)) => {}
                Err(e) => return Err(e),
            }
        }
        out.push(found.ok_or(Error::NotCertifiableWithinCap)?);
    }
    Ok(out)
}

/// Independent re-check of a certificate: positive weights summing to one and
/// the flux identity, each exact or certified to a zero enclosure.
pub fn recheck_q_certificate(cert: &QCertificate) -> Result<bool> {
    const WIDTH_BITS: u32 = 100;
    let d = &cert.decomposition;
    for k in &d.kappa {
        if !k.is_positive()? {
            return Ok(false);
        }
    }
    let total = d.kappa.iter().fold(XReal::zero(), |a, k| a + k) - XReal::one();
    if !total.is_zero_within(WIDTH_BITS) {
        return Ok(false);
    }
    Ok(d.residual().iter().all(|r| r.is_zero_within(WIDTH_BITS)))
}

fn q4(den: i64, c: [i64; 4]) -> XReal {
    let cs = c.map(|v| rat(v, den));
    XReal::from_quad(QuadExt::new([5, 1141], cs).expect("valid field"))
}

/// The counterexample fan of the single-shock data `rho = 1, 4`, `gamma = 2`,
/// in Q(sqrt 5, sqrt 1141); basis `1, sqrt 5, sqrt 1141, sqrt 5705`.
pub fn paper_example() -> FanSubsolution {
    let law = PressureLaw::new(&XReal::from(2)).expect("gamma = 2");
    let s5 = XReal::sqrt_int(5).expect("5 is square-free");
    let mu = [
        q4(107500, [-25102, -53750, 77, 0]),
        XReal::ratio(-1, 2) * &s5,
        q4(250, [77, -125, 0, 0]),
        q4(53750, [-12551, -26875, 8316, 0]),
    ];
    let m2 = [
        q4(2687500, [-3 * 225918, 3 * 860000, 3 * 693, 0]),
        q4(5375000, [-27 * 50204, 27 * 80625, 27 * 154, 0]),
        q4(10750000, [-12551, -26875, 8316, 0]),
    ];
    let u11 = [
        q4(288906250000, [-1272258135611, -72858555000, 8316 * 12551, 8316 * 26875]),
        q4(144453125000, [-295698403743, -36429277500, 4158 * 12551, 4158 * 26875]),
        q4(288906250000, [-21181593711, -337308125, 8316 * 12551, 8316 * 26875]),
    ];
    let rho = [XReal::ratio(52, 25), XReal::ratio(319, 100), XReal::ratio(801, 200)];
    let q = [XReal::ratio(398, 43), XReal::from(13), XReal::ratio(691, 43)];
    let f2 = [XReal::ratio(552, 25), XReal::ratio(277, 100), XReal::ratio(7, 25)];
    let regions = std::array::from_fn(|i| Region {
        rho: rho[i].clone(),
        z: PHPoint {
            m: [XReal::zero(), m2[i].clone()],
            u11: u11[i].clone(),
            u12: XReal::zero(),
            q: q[i].clone(),
            f: [XReal::zero(), f2[i].clone()],
        },
    });
    FanSubsolution {
        law,
        mu,
        left: EulerState::new(XReal::one(), [XReal::zero(), XReal::ratio(3, 2) * &s5]),
        right: EulerState::new(XReal::from(4), [XReal::zero(), XReal::zero()]),
        regions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_fan_verifies() {
        let rep = verify_fan(&paper_example());
        for c in &rep.checks {
            assert_eq!(c.status, Status::Pass, "{}", c.name);
        }
        assert_eq!(rep.checks.len(), 1 + 3 + 16 + 6);
    }

    #[test]
    fn swapped_speeds_fail_order() {
        let mut f = paper_example();
        f.mu.swap(1, 2);
        let rep = verify_fan(&f);
        assert_eq!(rep.checks[0].status, Status::Fail);
    }

    #[test]
    fn comparison_cases() {
        let p = |v: &[(i64, i64)]| {
            DissipationProfile::new(v.iter().map(|(s, c)| (XReal::from(*s), XReal::from(*c))).collect()).unwrap()
        };
        assert_eq!(compare_profiles(&p(&[(0, 1)]), &p(&[(1, 1)])).unwrap(), Dominance::Incomparable);
        assert_eq!(compare_profiles(&p(&[(0, 1)]), &p(&[(0, 1)])).unwrap(), Dominance::Equal);
        assert_eq!(compare_profiles(&p(&[(0, 2)]), &p(&[(0, 1)])).unwrap(), Dominance::StrictlyDominates);
        assert_eq!(compare_profiles(&p(&[(0, 1), (1, 1)]), &p(&[(0, 1)])).unwrap(), Dominance::Dominates);
        assert_eq!(compare_profiles(&p(&[(0, 1)]), &p(&[(0, 2)])).unwrap(), Dominance::Dominated);
        let merged = p(&[(1, 2), (0, 1), (1, 3)]);
        assert_eq!(merged.entries().len(), 2);
        assert_eq!(merged.entries()[1].1, XReal::from(5));
    }

    #[test]
    fn separator_examples() {
        let s5 = XReal::sqrt_int(5).unwrap();
        let lo = XReal::ratio(27, 4) * &s5;
        let hi = (XReal::from(83033) - XReal::from(8050) * &s5) * XReal::ratio(1, 4300);
        assert_eq!(decimal_separator(&lo, &hi).unwrap(), Some(rat(151, 10)));
        assert_eq!(decimal_separator(&hi, &lo).unwrap(), None);
    }

    #[test]
    fn file_round_trip() {
        let f = paper_example();
        let file = f.to_file();
        let s = serde_json::to_string(&file).unwrap();
        let back: FanFile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, file);
        assert_eq!(FanSubsolution::from_file(&back).unwrap(), f);
    }
}
