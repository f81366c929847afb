//! End-to-end acceptance run: one line per criterion, then a combined assert.

mod common;

use common::*;
use std::time::{Duration, Instant};
use wildfan_core::convexint::{build_oscillation, Bump, GridBox, OscillationParams};
use wildfan_core::exactnum::{rat, QuadExt};
use wildfan_core::fan::{
    beats_selfsimilar, fan_dissipation_profile, find_q, paper_example, recheck_q_certificate, verify_fan, Dominance,
};
use wildfan_core::model::{lift_state, pressure, EulerState, PressureLaw};
use wildfan_core::riemann::{selfsim_dissipation, solve_riemann, WaveKind};
use wildfan_core::search::{certify, search_all, SearchConfig};
use wildfan_core::XReal;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn e(err: wildfan_core::Error) -> String {
    err.to_string()
}

fn q4(den: i64, c: [i64; 4]) -> XReal {
    XReal::from_quad(QuadExt::new([5, 1141], c.map(|v| rat(v, den))).unwrap())
}

fn s5() -> XReal {
    XReal::sqrt_int(5).unwrap()
}

fn reference() -> XReal {
    XReal::ratio(27, 4) * s5()
}

fn paper_states() -> (PressureLaw, EulerState, EulerState) {
    let law = PressureLaw::new(&XReal::from(2)).unwrap();
    let left = EulerState::new(XReal::one(), [XReal::zero(), XReal::ratio(3, 2) * s5()]);
    let right = EulerState::new(XReal::from(4), [XReal::zero(), XReal::zero()]);
    (law, left, right)
}

fn within(t: Instant, limit: Duration) -> Result<Duration, String> {
    let d = t.elapsed();
    ensure!(d < limit, "took {d:?}, limit {limit:?}");
    Ok(d)
}

fn fan_conditions() -> Outcome {
    let t = Instant::now();
    let rep = verify_fan(&paper_example());
    let d = within(t, Duration::from_secs(1))?;
    ensure!(!rep.any_inconclusive(), "inconclusive entries present");
    ensure!(rep.passed(), "failed: {:?}", rep.failures().iter().map(|c| &c.name).collect::<Vec<_>>());
    Ok(format!("{} checks exact in {d:?}", rep.checks.len()))
}

fn single_shock() -> Outcome {
    let (law, left, right) = paper_states();
    let sol = solve_riemann(&law, &left, &right).map_err(e)?;
    ensure!(sol.exact, "solution not exact");
    ensure!(sol.waves.len() == 1, "{} waves", sol.waves.len());
    let w = &sol.waves[0];
    let WaveKind::Shock { speed } = &w.kind else { return Err("wave is not a shock".into()) };
    ensure!(speed.eq_value(&(XReal::ratio(-1, 2) * s5())).map_err(e)?, "speed {speed}");
    let (l, r) = (&w.left, &w.right);
    let flux2 = |s: &EulerState| -> Result<[XReal; 3], String> {
        let p = pressure(&law, &s.rho).map_err(e)?;
        let v2 = s.m[1].div(&s.rho).map_err(e)?;
        Ok([s.m[1].clone(), &s.m[1] * &v2 + p, &s.m[0] * &v2])
    };
    let (fl, fr) = (flux2(l)?, flux2(r)?);
    let ul = [l.rho.clone(), l.m[1].clone(), l.m[0].clone()];
    let ur = [r.rho.clone(), r.m[1].clone(), r.m[0].clone()];
    for i in 0..3 {
        let res = speed * &(&ur[i] - &ul[i]) - (&fr[i] - &fl[i]);
        ensure!(res.is_zero().map_err(e)?, "jump residual {i} is {res}");
    }
    let prof = selfsim_dissipation(&law, &sol).map_err(e)?;
    let [(_, c)] = prof.entries() else { return Err("profile is not a single entry".into()) };
    ensure!(c.eq_value(&reference()).map_err(e)?, "bracket {c}");
    Ok(format!("shock at {speed}, bracket {c}"))
}

fn profile_coefficients() -> Outcome {
    let fan = paper_example();
    let prof = fan_dissipation_profile(&fan).map_err(e)?;
    let want = [
        q4(7396000, [-167847142, 74863000, 13937, 0]),
        q4(4300, [83033, -8050, 0, 0]),
        q4(21500, [73863, -33000, 0, 0]),
        q4(2311250, [684803, 80625, -24948, 0]),
    ];
    ensure!(prof.entries().len() == 4, "{} entries", prof.entries().len());
    for (i, w) in want.iter().enumerate() {
        let got = prof.coefficient_at(&fan.mu[i]).map_err(e)?;
        ensure!(got.eq_value(w).map_err(e)?, "plane {i}: {got} != {w}");
    }
    Ok("4 of 4 planes equal".into())
}

fn strict_chain() -> Outcome {
    let t = Instant::now();
    let wild = q4(4300, [83033, -8050, 0, 0]);
    let sep = XReal::ratio(151, 10);
    ensure!((&wild - &sep).sign().map_err(e)? > 0, "wild plane not above 151/10");
    ensure!((&sep - &reference()).sign().map_err(e)? > 0, "151/10 not above the reference");
    let rep = beats_selfsimilar(&paper_example()).map_err(e)?;
    let d = within(t, Duration::from_secs(1))?;
    ensure!(rep.verdict == Some(Dominance::StrictlyDominates), "verdict {:?}", rep.verdict);
    ensure!(!rep.any_inconclusive() && rep.passed(), "dominance checks did not all pass");
    Ok(format!("{wild} > 151/10 > {} in {d:?}", reference()))
}

fn hull_suite() -> Outcome {
    let mut r = rng(5);
    let n = 128;
    for i in 0..n {
        check_split(&v_instance(&mut r)).map_err(|m| format!("instance {i}: {m}"))?;
    }
    Ok(format!("{n} instances exact"))
}

fn wavecone_suite() -> Outcome {
    let mut r = rng(6);
    let n = 128;
    for i in 0..n {
        let (_, rho, z1, z2) = k_pair(&mut r);
        check_k_pair(&rho, &z1, &z2).map_err(|m| format!("pair {i}: {m}"))?;
    }
    Ok(format!("{n} pairs annihilated"))
}

fn oscillation() -> Outcome {
    let t = Instant::now();
    let law = PressureLaw::new(&XReal::from(2)).unwrap();
    let lift = |m: [i64; 2]| lift_state(&law, &EulerState::new(XReal::one(), m.map(XReal::from))).unwrap().0;
    let (z1, z2) = (lift([1, 0]), lift([0, 1]));
    let (tau1, delta) = (0.4, 0.02);
    let z_star = z1.scale(&XReal::ratio(2, 5)).add(&z2.scale(&XReal::ratio(3, 5)));
    let bump = Bump::new(GridBox::new([0.0; 3], [0.9731, 1.0419, 0.9977]), 0.2).map_err(e)?;
    let mut sups = Vec::new();
    for k in [8.0, 16.0, 32.0] {
        let par = OscillationParams {
            z_star: z_star.clone(),
            z1: z1.clone(),
            z2: z2.clone(),
            tau1,
            bump,
            k,
            delta,
            grid_n: 48,
        };
        let d = build_oscillation(&par).map_err(e)?.diagnostics;
        ensure!(d.pde_residual < 1e-8 * d.pde_scale, "k={k}: residual {:e} vs scale {:e}", d.pde_residual, d.pde_scale);
        let dev = (d.fraction1 - tau1).abs().max((d.fraction2 - (1.0 - tau1)).abs());
        ensure!(dev <= 6.0 * delta, "k={k}: fractions {} {}", d.fraction1, d.fraction2);
        sups.push(d.commutator_sup);
    }
    let ratios: Vec<f64> = sups.windows(2).map(|w| w[1] / w[0]).collect();
    for q in &ratios {
        ensure!((0.3..=0.7).contains(q), "commutator ratio {q}");
    }
    let d = within(t, Duration::from_secs(60))?;
    Ok(format!("ratios {:.3} {:.3} in {d:.1?}", ratios[0], ratios[1]))
}

fn riemann_suite() -> Outcome {
    let mut r = rng(8);
    let (mut solved, mut tries) = (0, 0);
    while solved < 200 {
        tries += 1;
        ensure!(tries <= 2000, "too many vacuum draws");
        if check_riemann(&mut r).map_err(|m| format!("problem {tries}: {m}"))? {
            solved += 1;
        }
    }
    Ok(format!("{solved} problems solved"))
}

fn search_reproduction() -> Outcome {
    let t = Instant::now();
    let (law, left, right) = paper_states();
    let cfg = SearchConfig::default();
    ensure!(cfg.restarts <= 64 && cfg.rng_seed == 0, "config outside the allowed budget");
    let pool = search_all(&law, &left, &right, &cfg).map_err(e)?;
    let mut tried = 0;
    for cand in &pool {
        tried += 1;
        let Some(fan) = certify(&law, &left, &right, cand, &cfg).map_err(e)? else { continue };
        within(t, Duration::from_secs(600))?;
        let prof = fan_dissipation_profile(&fan).map_err(e)?;
        let sigma = &fan.mu[1];
        ensure!(sigma.eq_value(&(XReal::ratio(-1, 2) * s5())).map_err(e)?, "sigma plane moved to {sigma}");
        let c = prof.coefficient_at(sigma).map_err(e)?;
        ensure!((&c - &reference()).sign().map_err(e)? > 0, "sigma-plane coefficient {c} not above the reference");
        ensure!(
            c.to_f64() > reference().to_f64() * (1.0 + 1e-6),
            "sigma-plane margin below relative 1e-6"
        );
        for (s, v) in prof.entries() {
            ensure!(v.sign().map_err(e)? >= 0, "negative coefficient at {s}");
        }
        return Ok(format!(
            "seed {} certified after {tried} candidates, sigma plane {:.4} in {:.1?}",
            cand.seed,
            c.to_f64(),
            t.elapsed()
        ));
    }
    Err(format!("none of {} candidates certified", pool.len()))
}

fn q_certificates() -> Outcome {
    let certs = find_q(&paper_example()).map_err(e)?;
    ensure!(certs.len() == 3, "{} certificates", certs.len());
    for c in &certs {
        ensure!(recheck_q_certificate(c).map_err(e)?, "region {} fails recheck", c.region);
    }
    let caps: Vec<String> = certs.iter().map(|c| format!("n={}", c.n)).collect();
    Ok(format!("regions 1-3 certified ({})", caps.join(", ")))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("built-in fan conditions", fan_conditions),
        ("single exact shock", single_shock),
        ("fan profile coefficients", profile_coefficients),
        ("strict dominance chain", strict_chain),
        ("hull split suite", hull_suite),
        ("wave cone suite", wavecone_suite),
        ("oscillation diagnostics", oscillation),
        ("riemann suite", riemann_suite),
        ("search and certify", search_reproduction),
        ("cap certificates", q_certificates),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                println!("FAIL {:>2} {name}: {msg}", i + 1);
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
