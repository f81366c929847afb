//! Human-readable tables and CSV for the reports.

use crate::commands::{FanReport, OscReport, RiemannReport, SearchReport};
use std::fmt::Write;
use wildfan_core::fan::{Status, VerificationReport};
use wildfan_core::riemann::WaveKind;
use wildfan_core::XReal;

fn status(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Inconclusive => "UNDECIDED",
    }
}

fn checks_table(out: &mut String, rep: &VerificationReport, witnesses: bool) {
    let _ = writeln!(out, "{}", rep.title);
    for c in &rep.checks {
        let mut line = format!("  {:<9} {}", status(c.status), c.name);
        if witnesses || c.status != Status::Pass {
            for w in &c.witness {
                let _ = write!(line, "  {}={}", w.label, w.value);
            }
        }
        if let Some(d) = &c.detail {
            let _ = write!(line, "  ({d})");
        }
        let _ = writeln!(out, "{line}");
    }
    for n in &rep.notes {
        let _ = writeln!(out, "  note: {n}");
    }
}

fn opt(x: &Option<XReal>) -> String {
    x.as_ref().map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn approx(x: &Option<XReal>) -> String {
    x.as_ref().map_or_else(String::new, |v| format!("{:.12}", v.to_f64()))
}

pub fn fan_table(r: &FanReport) -> String {
    let mut out = String::new();
    checks_table(&mut out, &r.conditions, false);
    if let Some(d) = &r.dominance {
        checks_table(&mut out, d, true);
    }
    if let Some(e) = &r.comparison_error {
        let _ = writeln!(out, "comparison unavailable: {e}");
    }
    let _ = writeln!(out, "dissipation brackets");
    let rows: Vec<[String; 4]> = r
        .planes
        .iter()
        .map(|p| {
            let plane = p.plane.map_or_else(|| "-".to_string(), |i| format!("mu{i}"));
            [plane, p.speed.to_string(), opt(&p.fan), opt(&p.self_similar)]
        })
        .collect();
    let head = ["plane", "speed", "fan", "self-similar"].map(String::from);
    let mut width = [0usize; 4];
    for row in std::iter::once(&head).chain(rows.iter()) {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    for row in std::iter::once(&head).chain(rows.iter()) {
        let mut line = String::from(" ");
        for (w, c) in width.iter().zip(row) {
            let pad = w - c.chars().count();
            let _ = write!(line, " {c}{}", " ".repeat(pad));
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    match r.verdict {
        Some(v) => {
            let _ = writeln!(out, "verdict: {v:?}");
        }
        None => {
            let _ = writeln!(out, "verdict: none");
        }
    }
    out
}

pub fn fan_csv(r: &FanReport) -> String {
    let mut out = String::from("plane,speed,fan,self_similar,fan_approx,self_similar_approx\n");
    for p in &r.planes {
        let plane = p.plane.map_or_else(String::new, |i| i.to_string());
        let _ = writeln!(
            out,
            "{plane},\"{}\",\"{}\",\"{}\",{},{}",
            p.speed,
            opt(&p.fan),
            opt(&p.self_similar),
            approx(&p.fan),
            approx(&p.self_similar)
        );
    }
    out
}

fn kind_name(k: &WaveKind) -> &'static str {
    match k {
        WaveKind::Shock { .. } => "shock",
        WaveKind::Rarefaction { .. } => "rarefaction",
        WaveKind::Slip { .. } => "slip",
    }
}

fn speeds(k: &WaveKind) -> (&XReal, &XReal) {
    match k {
        WaveKind::Shock { speed } | WaveKind::Slip { speed } => (speed, speed),
        WaveKind::Rarefaction { speed_lo, speed_hi } => (speed_lo, speed_hi),
    }
}

pub fn riemann_table(r: &RiemannReport) -> String {
    let s = &r.solution;
    let mut out = format!("self-similar solution ({})\n", if s.exact { "exact" } else { "floating point" });
    if s.waves.is_empty() {
        out.push_str("  no waves\n");
    }
    for w in &s.waves {
        let (lo, hi) = speeds(&w.kind);
        let speed = if lo == hi { format!("speed {lo}") } else { format!("speeds {lo} .. {hi}") };
        let _ = writeln!(out, "  {}-{}  {}  rho {} -> {}", w.family, kind_name(&w.kind), speed, w.left.rho, w.right.rho);
    }
    if !r.profile.is_empty() {
        out.push_str("dissipation brackets\n");
        for b in &r.profile {
            let _ = writeln!(out, "  speed {}  bracket {}", b.speed, b.bracket);
        }
    }
    out
}

pub fn riemann_csv(r: &RiemannReport) -> String {
    let mut out = String::from("family,kind,speed_lo,speed_hi,rho_left,rho_right\n");
    for w in &r.solution.waves {
        let (lo, hi) = speeds(&w.kind);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            w.family,
            kind_name(&w.kind),
            lo.to_f64(),
            hi.to_f64(),
            w.left.rho.to_f64(),
            w.right.rho.to_f64()
        );
    }
    out
}

pub fn search_table(r: &SearchReport) -> String {
    let mut out = format!(
        "search: {} restarts from seed {}, {} feasible\n",
        r.config.restarts, r.config.rng_seed, r.feasible
    );
    if let Some(c) = &r.candidate {
        let _ = writeln!(
            out,
            "best candidate: seed {}  objective {:.6}  gain {:.6}  min margin {:.3e}",
            c.seed,
            c.objective,
            c.gain,
            c.min_margin()
        );
    }
    match &r.report {
        Some(rep) => {
            out.push_str("certified fan\n");
            out.push_str(&fan_table(rep));
        }
        None => out.push_str("no candidate certified\n"),
    }
    out
}

pub fn osc_table(r: &OscReport) -> String {
    let mut out = String::from("oscillation diagnostics\n");
    for d in &r.diagnostics {
        let _ = writeln!(
            out,
            "  k={:<4} fraction1 {:.4}  fraction2 {:.4}  commutator {:.4e}  average {:.3e}  pde {:.2e}/{:.2e}",
            d.k, d.fraction1, d.fraction2, d.commutator_sup, d.avg_norm, d.pde_residual, d.pde_scale
        );
    }
    for c in &r.checks {
        let _ = writeln!(out, "  {:<4} {}  value {:.4e}  bound {:.4e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    out
}
