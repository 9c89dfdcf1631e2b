//! Subcommand dispatch. Every command builds its artifacts in memory; the
//! caller writes them only once the whole computation has succeeded.

use std::f64::consts::TAU;

use copop_core::counting::{verify_change_of_variables, ChangeOfVariables, CountingFunction};
use copop_core::diagnostics::{
    check_berezin_bound, closed_range_probe, essential_norm_profile_with, schatten_integral, test_family,
    BerezinCheck, ClosedRangeReport, CompactnessVerdict, EssentialNormProfile, SchattenReport,
};
use copop_core::operator::{
    build_matrix, default_truncation, hs_norm_basis_with_mode, hs_norm_integral, hs_report, matrix_singular_values,
    moments_for_radius, schatten_from_matrix, BasisHs, IntegralHs, NormMode, SeriesVerdict,
};
use copop_core::quadrature::QuadratureRule;
use copop_core::selfmaps::SelfMap;
use copop_core::weights::{check_admissible, check_l1, compute_moments, AdmissibilityReport, L1Report, MomentTable, W4Kind, Weight, DEFAULT_DELTA_CANDIDATES};
use copop_core::{fmt_f64, CopopError, C64};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, HsMode, RunConfig};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Admissible,
    Moments,
    Counting,
    VerifyCov,
    Hs,
    Essnorm,
    Schatten,
    ClosedRange,
    Matrix,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Admissible => "admissible",
            Command::Moments => "moments",
            Command::Counting => "counting",
            Command::VerifyCov => "verify-cov",
            Command::Hs => "hs",
            Command::Essnorm => "essnorm",
            Command::Schatten => "schatten",
            Command::ClosedRange => "closed-range",
            Command::Matrix => "matrix",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Admissibility verdicts carried by every report.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub admissible: bool,
    pub w1: bool,
    pub w2: bool,
    pub w3: bool,
    pub w4: W4Kind,
    pub delta: Option<f64>,
    pub l1: bool,
    pub l1_infimum: f64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    config_digest: &'a str,
    weight: String,
    map: String,
    admissibility: &'a Stamp,
    result: T,
}

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub weight: Weight,
    pub map: SelfMap,
    pub rule: QuadratureRule,
    digest: String,
    admissibility: AdmissibilityReport,
    l1: L1Report,
    stamp: Stamp,
    artifacts: Vec<Artifact>,
}

impl<'a> Context<'a> {
    /// Builds the weight and map and runs the admissibility checks that
    /// every report is stamped with.
    pub fn new(cfg: &'a RunConfig) -> anyhow::Result<Self> {
        let weight = cfg.build_weight()?;
        let map = cfg.build_map()?;
        let rule = cfg.rule()?;
        let a = &cfg.admissibility;
        let admissibility = check_admissible(&weight, a.grid_size, &DEFAULT_DELTA_CANDIDATES, a.r0)?;
        let l1 = check_l1(&weight, a.l1_kmax)?;
        let stamp = Stamp {
            admissible: admissibility.admissible,
            w1: admissibility.w1,
            w2: admissibility.w2,
            w3: admissibility.w3,
            w4: admissibility.w4,
            delta: admissibility.delta,
            l1: l1.holds,
            l1_infimum: l1.infimum,
        };
        Ok(Self {
            cfg,
            weight,
            map,
            rule,
            digest: cfg.digest(),
            admissibility,
            l1,
            stamp,
            artifacts: Vec::new(),
        })
    }

    fn json<T: Serialize>(&mut self, name: &str, command: &str, result: T) -> anyhow::Result<()> {
        if !self.cfg.wants(Format::Json) {
            return Ok(());
        }
        let env = Envelope {
            schema: SCHEMA,
            command,
            config_digest: &self.digest,
            weight: self.weight.describe(),
            map: self.map.describe(),
            admissibility: &self.stamp,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        self.artifacts.push(Artifact {
            name: name.to_string(),
            contents: text,
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, contents: String) {
        if self.cfg.wants(Format::Csv) {
            self.artifacts.push(Artifact {
                name: name.to_string(),
                contents,
            });
        }
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.artifacts
    }
}

/// Runs `cmd` and returns its artifacts.
pub fn run(cmd: Command, cfg: &RunConfig) -> anyhow::Result<Vec<Artifact>> {
    let mut ctx = Context::new(cfg)?;
    match cmd {
        Command::Admissible => {
            admissible(&mut ctx)?;
        }
        Command::Moments => {
            moments(&mut ctx)?;
        }
        Command::Counting => {
            counting(&mut ctx)?;
        }
        Command::VerifyCov => {
            verify_cov(&mut ctx)?;
        }
        Command::Hs => {
            hs(&mut ctx)?;
        }
        Command::Essnorm => {
            essnorm(&mut ctx)?;
        }
        Command::Schatten => {
            schatten(&mut ctx)?;
        }
        Command::ClosedRange => {
            closed_range(&mut ctx)?;
        }
        Command::Matrix => {
            matrix(&mut ctx)?;
        }
        Command::All => all(&mut ctx)?,
    }
    Ok(ctx.into_artifacts())
}

fn all(ctx: &mut Context<'_>) -> anyhow::Result<()> {
    let admissible = admissible(ctx)?;
    let moments = moments(ctx)?;
    let counting = counting(ctx)?;
    let cov = verify_cov(ctx)?;
    let hs = hs(ctx)?;
    let matrix = matrix(ctx)?;
    let essnorm = essnorm(ctx)?;
    let schatten = schatten(ctx)?;
    let closed_range = closed_range(ctx)?;
    let summary = json!({
        "admissible": admissible,
        "moments": moments,
        "counting": counting,
        "verify_cov": cov,
        "hs": hs,
        "matrix": matrix,
        "essnorm": essnorm,
        "schatten": schatten,
        "closed_range": closed_range,
    });
    ctx.json("summary.json", "all", summary)
}

fn admissible(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let report = json!({ "conditions": ctx.admissibility, "l1": ctx.l1 });
    ctx.json("admissible.json", "admissible", &report)?;
    Ok(json!(ctx.stamp.admissible))
}

#[derive(Serialize)]
struct MomentsSummary {
    nmax: usize,
    radial_nodes: usize,
    quadrature_error: f64,
    closed_form_deviation: Option<f64>,
}

fn moments(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let m = &ctx.cfg.moments;
    let table = compute_moments(&ctx.weight, m.nmax, m.radial_nodes)?;
    let summary = MomentsSummary {
        nmax: table.nmax,
        radial_nodes: table.radial_nodes,
        quadrature_error: table.quadrature_error,
        closed_form_deviation: table.closed_form_deviation,
    };
    ctx.json("moments.json", "moments", &summary)?;
    ctx.csv("moments.csv", table.to_csv());
    Ok(json!(summary.quadrature_error))
}

#[derive(Serialize)]
struct CountingSummary {
    points: usize,
    max_counting: f64,
    max_tau: f64,
    argmax_tau: C64,
    points_at_phi0: usize,
    max_preimages: usize,
}

fn counting(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let n = CountingFunction::new(&ctx.map, &ctx.weight)?;
    let k = ctx.cfg.grids.counting_angles;
    let mut csv = String::from("re,im,N,tau\n");
    let mut s = CountingSummary {
        points: 0,
        max_counting: 0.0,
        max_tau: 0.0,
        argmax_tau: C64::new(0.0, 0.0),
        points_at_phi0: 0,
        max_preimages: 0,
    };
    for &r in &ctx.cfg.grids.radii {
        for j in 0..k {
            let z = C64::from_polar(r, TAU * j as f64 / k as f64);
            let sample = n.sample(z)?;
            let tau = sample.value / ctx.weight.value(r);
            csv.push_str(&format!("{},{},{},{}\n", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(sample.value), fmt_f64(tau)));
            s.points += 1;
            s.max_counting = s.max_counting.max(sample.value);
            if tau > s.max_tau {
                s.max_tau = tau;
                s.argmax_tau = z;
            }
            s.points_at_phi0 += sample.at_phi0 as usize;
            s.max_preimages = s.max_preimages.max(sample.preimage_count);
        }
    }
    ctx.json("counting.json", "counting", &s)?;
    ctx.csv("counting.csv", csv);
    Ok(json!(s.max_tau))
}

#[derive(Serialize)]
struct CovCase {
    f: &'static str,
    #[serde(flatten)]
    result: ChangeOfVariables,
}

/// Tolerance on the relative difference of the change-of-variables check.
pub const COV_TOLERANCE: f64 = 1e-3;

fn verify_cov(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let fs: [(&'static str, fn(C64) -> f64); 3] = [
        ("1", |_| 1.0),
        ("|z|^2", |z| z.norm_sqr()),
        ("Re z + 1", |z| z.re + 1.0),
    ];
    let mut cases = Vec::new();
    for (label, f) in fs {
        cases.push(CovCase {
            f: label,
            result: verify_change_of_variables(&ctx.map, &ctx.weight, f, ctx.rule)?,
        });
    }
    let holds = cases.iter().all(|c| c.result.relative_difference <= COV_TOLERANCE);
    let report = json!({ "tolerance": COV_TOLERANCE, "cases": cases, "holds": holds });
    ctx.json("verify_cov.json", "verify-cov", &report)?;
    Ok(json!(holds))
}

#[derive(Serialize)]
struct BasisSummary {
    value: f64,
    partial_sum: f64,
    tail_estimate: f64,
    truncation_tail: f64,
    decay_exponent: Option<f64>,
    verdict: SeriesVerdict,
    nmax: usize,
    truncation: usize,
    mode: NormMode,
}

#[derive(Serialize)]
struct HsJson<'a> {
    basis: BasisSummary,
    integral: &'a IntegralHs,
    gap: f64,
    gap_tolerance: f64,
    verdict: SeriesVerdict,
}

fn summarize(b: &BasisHs) -> BasisSummary {
    BasisSummary {
        value: b.value,
        partial_sum: b.partial_sum,
        tail_estimate: b.tail_estimate,
        truncation_tail: b.truncation_tail,
        decay_exponent: b.decay_exponent,
        verdict: b.verdict,
        nmax: b.nmax,
        truncation: b.truncation,
        mode: b.mode,
    }
}

/// Moment table deep enough for both Hilbert-Schmidt routes.
pub fn hs_moments(cfg: &RunConfig, phi: &SelfMap, w: &Weight) -> copop_core::Result<MomentTable> {
    let m = default_truncation(phi, cfg.operator.nmax);
    let rmax = *cfg.grids.r_sequence.last().expect("validated non-empty");
    moments_for_radius(w, rmax, m, cfg.moments.radial_nodes)
}

fn hs(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let table = hs_moments(cfg, &ctx.map, &ctx.weight)?;
    let mode = match cfg.operator.mode {
        HsMode::DerivativeOnly => NormMode::DerivativeOnly,
        HsMode::Full => NormMode::Full,
    };
    let basis = hs_norm_basis_with_mode(&ctx.map, &table, cfg.operator.nmax, None, mode)?;
    let integral = hs_norm_integral(&ctx.map, &ctx.weight, &table, ctx.rule, &cfg.grids.r_sequence)?;
    let report = hs_report(basis, integral);
    let verdict = match report.verdict {
        SeriesVerdict::Finite if report.relative_gap > cfg.tolerances.hs_gap_tol => SeriesVerdict::Inconclusive,
        v => v,
    };
    let mut terms = String::from("n,term\n");
    for (i, t) in report.basis.terms.iter().enumerate() {
        terms.push_str(&format!("{},{}\n", i + 1, fmt_f64(*t)));
    }
    let mut radial = String::from("R,integral\n");
    for (r, v) in report.integral.radii.iter().zip(&report.integral.values) {
        radial.push_str(&format!("{},{}\n", fmt_f64(*r), fmt_f64(*v)));
    }
    let out = HsJson {
        basis: summarize(&report.basis),
        integral: &report.integral,
        gap: report.relative_gap,
        gap_tolerance: cfg.tolerances.hs_gap_tol,
        verdict,
    };
    ctx.json("hs.json", "hs", &out)?;
    ctx.csv("hs_terms.csv", terms);
    ctx.csv("hs_integral.csv", radial);
    Ok(json!(verdict))
}

fn essnorm(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let profile: EssentialNormProfile = essential_norm_profile_with(
        &ctx.map,
        &ctx.weight,
        &cfg.grids.radii,
        cfg.grids.angles,
        cfg.tolerances.compact_tol,
        cfg.tolerances.notcompact_tol,
    )?;
    let verdict: CompactnessVerdict = profile.verdict;
    let report = json!({
        "compact_tol": cfg.tolerances.compact_tol,
        "notcompact_tol": cfg.tolerances.notcompact_tol,
        "profile": profile,
    });
    ctx.json("essnorm.json", "essnorm", &report)?;
    ctx.csv("essnorm.csv", profile.to_csv());
    Ok(json!(verdict))
}

/// Points at which the Berezin bound is spot-checked.
const BEREZIN_POINTS: [[f64; 2]; 3] = [[0.6, 0.0], [0.0, 0.8], [-0.9, 0.1]];

#[derive(Serialize)]
struct BerezinSpot {
    z: C64,
    r: f64,
    #[serde(flatten)]
    check: BerezinCheck,
}

fn schatten(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let mut reports: Vec<SchattenReport> = Vec::new();
    for &p in &cfg.schatten.p {
        let report = schatten_integral(&ctx.map, &ctx.weight, p, ctx.rule, &cfg.grids.r_sequence)?;
        ctx.csv(&format!("schatten_p{}.csv", fmt_f64(p)), report.to_csv());
        reports.push(report);
    }
    let r = cfg.schatten.berezin_r;
    let mut spots = Vec::new();
    for [x, y] in BEREZIN_POINTS {
        let z = C64::new(x, y);
        spots.push(BerezinSpot {
            z,
            r,
            check: check_berezin_bound(&ctx.map, &ctx.weight, z, r, ctx.rule)?,
        });
    }
    let verdicts: Vec<Value> = reports.iter().map(|s| json!({ "p": s.p, "verdict": s.verdict })).collect();
    ctx.json("schatten.json", "schatten", json!({ "reports": reports, "berezin": spots }))?;
    Ok(Value::Array(verdicts))
}

fn closed_range(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let c = &ctx.cfg.closed_range;
    let delta = match c.delta.or(ctx.admissibility.delta) {
        Some(d) => d,
        None => anyhow::bail!("no W2 witness δ for this weight; pass --delta"),
    };
    let a_grid: Vec<C64> = c.a_grid.iter().map(|a| C64::new(a[0], a[1])).collect();
    let family = test_family(c.nmax_monomials, &a_grid, delta);
    let report: ClosedRangeReport = closed_range_probe(&ctx.map, &ctx.weight, &family, ctx.rule, c.normalize_origin)?;
    ctx.json("closed_range.json", "closed-range", json!({ "delta": delta, "probe": report }))?;
    ctx.csv("closed_range.csv", report.to_csv());
    Ok(json!(report.verdict))
}

#[derive(Serialize)]
struct SchattenNorm {
    p: f64,
    norm: f64,
}

fn matrix(ctx: &mut Context<'_>) -> anyhow::Result<Value> {
    let cfg = ctx.cfg;
    let size = cfg.operator.matrix_size;
    let table = compute_moments(&ctx.weight, size, cfg.moments.radial_nodes)?;
    let mat = build_matrix(&ctx.map, &table, size)?;
    let sv = matrix_singular_values(&mat, false)?;
    let mut norms = Vec::new();
    for &p in &cfg.schatten.p {
        norms.push(SchattenNorm {
            p,
            norm: schatten_from_matrix(&mat, p, true)?,
        });
    }
    let hs = schatten_from_matrix(&mat, 2.0, true)?.powi(2);
    let mut svc = String::from("index,sigma\n");
    for (i, s) in sv.iter().enumerate() {
        svc.push_str(&format!("{i},{}\n", fmt_f64(*s)));
    }
    let report = json!({
        "size": mat.size,
        "truncation_tail": mat.truncation_tail,
        "largest_singular_value": sv.first().copied(),
        "hs_squared_without_constants": hs,
        "schatten_without_constants": norms,
    });
    ctx.json("matrix.json", "matrix", &report)?;
    ctx.csv("matrix.csv", mat.to_csv());
    ctx.csv("singular_values.csv", svc);
    Ok(json!(hs))
}

/// Maps library errors to the failure message printed by the binary.
pub fn describe_error(e: &anyhow::Error) -> String {
    match e.downcast_ref::<CopopError>() {
        Some(c) => format!("computation failed: {c}"),
        None => format!("computation failed: {e}"),
    }
}
