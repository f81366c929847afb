//! Subcommand bodies. Each returns a serializable report plus its outcome.

use crate::render::{fan_csv, fan_table, osc_table, riemann_csv, riemann_table, search_table};
use crate::Format;
use serde::Serialize;
use serde_json::Value;
use std::fmt;
use std::path::Path;
use wildfan_core::convexint::{build_oscillation, Bump, GridBox, OscDiagnostics, OscillationParams};
use wildfan_core::fan::{
    beats_selfsimilar, fan_dissipation_profile, paper_example, verify_fan as check_fan, Dominance,
    DissipationProfile, FanFile, FanSubsolution, Status, VerificationReport,
};
use wildfan_core::model::{lift_state, EulerState, PressureLaw};
use wildfan_core::riemann::{selfsim_dissipation, solve_riemann, RiemannData, SelfSimilarSolution};
use wildfan_core::search::{certify, search_all, Candidate, SearchConfig};
use wildfan_core::{Error, XReal};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(s) => write!(f, "{s}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Core(Error::Parse(_)) => 2,
            CliError::Core(Error::Inconclusive(_) | Error::NotCertifiableWithinCap) => 3,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Inconclusive => 3,
        }
    }
}

pub struct Output {
    pub outcome: Outcome,
    pub json: Value,
    pub table: String,
    pub csv: String,
}

impl Output {
    fn new<T: Serialize>(outcome: Outcome, report: &T, table: String, csv: String) -> Result<Self, CliError> {
        let json = serde_json::to_value(report).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(Output { outcome, json, table, csv })
    }

    /// JSON keys come out sorted, so a parse and re-serialize is byte-identical.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.json).expect("value serializes") + "\n",
            Format::Table => self.table.clone(),
            Format::Csv => self.csv.clone(),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaneRow {
    /// Interface index of the fan, absent for a reference-only plane.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plane: Option<usize>,
    pub speed: XReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fan: Option<XReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_similar: Option<XReal>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FanReport {
    pub conditions: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison_error: Option<String>,
    pub planes: Vec<PlaneRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Dominance>,
}

fn lookup(prof: &DissipationProfile, speed: &XReal) -> Result<Option<XReal>, Error> {
    for (s, c) in prof.entries() {
        if s.eq_value(speed)? {
            return Ok(Some(c.clone()));
        }
    }
    Ok(None)
}

fn plane_rows(fan: &FanSubsolution, reference: Option<&DissipationProfile>) -> Result<Vec<PlaneRow>, Error> {
    let prof = fan_dissipation_profile(fan)?;
    let mut rows = Vec::new();
    for (i, mu) in fan.mu.iter().enumerate() {
        let self_similar = match reference {
            Some(r) => lookup(r, mu)?,
            None => None,
        };
        rows.push(PlaneRow { plane: Some(i), speed: mu.clone(), fan: lookup(&prof, mu)?, self_similar });
    }
    if let Some(r) = reference {
        for (s, c) in r.entries() {
            if lookup(&prof, s)?.is_none() && !fan.mu.iter().any(|m| m.eq_value(s).unwrap_or(false)) {
                rows.push(PlaneRow { plane: None, speed: s.clone(), fan: None, self_similar: Some(c.clone()) });
            }
        }
    }
    Ok(rows)
}

pub fn fan_report(fan: &FanSubsolution) -> Result<FanReport, Error> {
    let conditions = check_fan(fan);
    let reference = solve_riemann(&fan.law, &fan.left, &fan.right).and_then(|s| selfsim_dissipation(&fan.law, &s));
    let (dominance, comparison_error) = match beats_selfsimilar(fan) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let planes = plane_rows(fan, reference.as_ref().ok())?;
    let verdict = dominance.as_ref().and_then(|d| d.verdict);
    Ok(FanReport { conditions, dominance, comparison_error, planes, verdict })
}

/// A definite failure outranks an undecided check.
fn outcome_of(rep: &VerificationReport) -> Outcome {
    if rep.checks.iter().any(|c| c.status == Status::Fail) {
        Outcome::Fail
    } else if rep.any_inconclusive() {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    }
}

fn conditions_outcome(r: &FanReport) -> Outcome {
    outcome_of(&r.conditions)
}

fn report_failures(r: &FanReport) {
    for c in r.conditions.failures() {
        let label = if c.status == Status::Fail { "failed" } else { "undecided" };
        eprintln!("{label}: {}", c.name);
    }
}

fn write_fan(path: &Path, fan: &FanSubsolution) -> Result<(), CliError> {
    let value = serde_json::to_value(fan.to_file()).map_err(|e| CliError::Input(e.to_string()))?;
    let text = serde_json::to_string_pretty(&value).expect("value serializes") + "\n";
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn verify_example(out: Option<&Path>) -> Result<Output, CliError> {
    let fan = paper_example();
    if let Some(p) = out {
        write_fan(p, &fan)?;
    }
    let rep = fan_report(&fan)?;
    report_failures(&rep);
    let dom = rep.dominance.as_ref();
    let outcome = match (conditions_outcome(&rep), dom.map(outcome_of)) {
        (Outcome::Pass, Some(Outcome::Pass)) if rep.verdict == Some(Dominance::StrictlyDominates) => Outcome::Pass,
        (Outcome::Pass, Some(Outcome::Inconclusive)) => Outcome::Inconclusive,
        (Outcome::Pass, _) => Outcome::Fail,
        (o, _) => o,
    };
    Output::new(outcome, &rep, fan_table(&rep), fan_csv(&rep))
}

pub fn verify_fan(path: &Path) -> Result<Output, CliError> {
    let file: FanFile = read_json(path)?;
    let fan = FanSubsolution::from_file(&file)?;
    let rep = fan_report(&fan)?;
    report_failures(&rep);
    Output::new(conditions_outcome(&rep), &rep, fan_table(&rep), fan_csv(&rep))
}

#[derive(Clone, Debug, Serialize)]
pub struct Bracket {
    pub speed: XReal,
    pub bracket: XReal,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiemannReport {
    pub solution: SelfSimilarSolution,
    pub profile: Vec<Bracket>,
}

pub fn riemann(path: &Path) -> Result<Output, CliError> {
    let data: RiemannData = read_json(path)?;
    let law = data.law()?;
    let solution = solve_riemann(&law, &data.left, &data.right)?;
    let prof = selfsim_dissipation(&law, &solution)?;
    let profile = prof
        .entries()
        .iter()
        .map(|(s, c)| Bracket { speed: s.clone(), bracket: c.clone() })
        .collect();
    let rep = RiemannReport { solution, profile };
    Output::new(Outcome::Pass, &rep, riemann_table(&rep), riemann_csv(&rep))
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub config: SearchConfig,
    /// Restarts ending at a feasible point.
    pub feasible: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<Candidate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fan: Option<FanFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<FanReport>,
}

pub fn search(path: &Path, cfg: &SearchConfig, out: Option<&Path>) -> Result<Output, CliError> {
    let data: RiemannData = read_json(path)?;
    let law = data.law()?;
    let all = search_all(&law, &data.left, &data.right, cfg)?;
    let mut found = None;
    for c in &all {
        if let Some(fan) = certify(&law, &data.left, &data.right, c, cfg)? {
            found = Some((c.clone(), fan));
            break;
        }
    }
    let mut rep = SearchReport { config: cfg.clone(), feasible: all.len(), candidate: None, fan: None, report: None };
    let outcome = match found {
        Some((c, fan)) => {
            if let Some(p) = out {
                write_fan(p, &fan)?;
            }
            rep.candidate = Some(c);
            rep.report = Some(fan_report(&fan)?);
            rep.fan = Some(fan.to_file());
            Outcome::Pass
        }
        None => {
            rep.candidate = all.into_iter().next();
            Outcome::Fail
        }
    };
    let table = search_table(&rep);
    let csv = match &rep.report {
        Some(r) => fan_csv(r),
        None => String::from("plane,speed,fan,self_similar,fan_approx,self_similar_approx\n"),
    };
    Output::new(outcome, &rep, table, csv)
}

/// Two states lifted to phase space, an exact weight, and the grid setup.
#[derive(Clone, Debug, serde::Deserialize)]
pub struct OscillateFile {
    pub gamma: XReal,
    pub z1: EulerState,
    pub z2: EulerState,
    pub tau1: XReal,
    pub delta: f64,
    pub ks: Vec<f64>,
    pub grid_n: usize,
    pub box_lo: [f64; 3],
    pub box_hi: [f64; 3],
    pub frame: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OscCheck {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OscReport {
    pub diagnostics: Vec<OscDiagnostics>,
    pub commutator_ratios: Vec<f64>,
    pub checks: Vec<OscCheck>,
}

pub const PDE_RELATIVE_TOL: f64 = 1e-8;
pub const FRACTION_DELTAS: f64 = 6.0;
pub const RATIO_RANGE: (f64, f64) = (0.3, 0.7);

pub fn oscillate(path: &Path) -> Result<Output, CliError> {
    let f: OscillateFile = read_json(path)?;
    let law = PressureLaw::new(&f.gamma)?;
    let z1 = lift_state(&law, &f.z1)?.0;
    let z2 = lift_state(&law, &f.z2)?.0;
    let t1 = f.tau1.clone();
    let z_star = z1.scale(&t1).add(&z2.scale(&(XReal::one() - &t1)));
    let bump = Bump::new(GridBox::new(f.box_lo, f.box_hi), f.frame)?;
    let tau1 = t1.to_f64();
    let mut diagnostics = Vec::new();
    let mut checks = Vec::new();
    for &k in &f.ks {
        let par = OscillationParams {
            z_star: z_star.clone(),
            z1: z1.clone(),
            z2: z2.clone(),
            tau1,
            bump,
            k,
            delta: f.delta,
            grid_n: f.grid_n,
        };
        let d = build_oscillation(&par)?.diagnostics;
        let bound = PDE_RELATIVE_TOL * d.pde_scale;
        checks.push(OscCheck { name: format!("k={k} pde residual"), pass: d.pde_residual < bound, value: d.pde_residual, bound });
        let dev = (d.fraction1 - tau1).abs().max((d.fraction2 - (1.0 - tau1)).abs());
        let bound = FRACTION_DELTAS * f.delta;
        checks.push(OscCheck { name: format!("k={k} plateau fractions"), pass: dev <= bound, value: dev, bound });
        diagnostics.push(d);
    }
    let mut commutator_ratios = Vec::new();
    for w in diagnostics.windows(2) {
        let r = w[1].commutator_sup / w[0].commutator_sup;
        let (lo, hi) = RATIO_RANGE;
        checks.push(OscCheck {
            name: format!("commutator ratio k={} -> {}", w[0].k, w[1].k),
            pass: (lo..=hi).contains(&r),
            value: r,
            bound: hi,
        });
        commutator_ratios.push(r);
    }
    let outcome = if checks.iter().all(|c| c.pass) { Outcome::Pass } else { Outcome::Fail };
    let rep = OscReport { diagnostics, commutator_ratios, checks };
    let mut csv = format!("{}\n", OscDiagnostics::CSV_HEADER);
    for d in &rep.diagnostics {
        csv.push_str(&d.csv_row());
        csv.push('\n');
    }
    Output::new(outcome, &rep, osc_table(&rep), csv)
}
