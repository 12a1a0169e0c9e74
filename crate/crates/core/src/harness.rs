//! Experiment orchestration: build fields, optional Gauduchon gauge, flow,
//! verifications, and report emission.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bochner::{
    bochner_general_residual, bochner_parabolic_residual, bochner_weyl_residual, ricci_cond_spectrum, syineq_check,
    ResidualReport, RicciCondSpectrum, SyIneqReport,
};
use crate::complex::{hermitian_tension, pluriharmonic_residual, ComplexDomain};
use crate::config::{AbelianSuite, Command, ExperimentConfig, Verification};
use crate::error::{Error, Result};
use crate::flow::{flow_run, flow_run_observed, Flow, FlowReport, FlowState, Outcome};
use crate::lie::{build_algebra, max_abelian, rank_bound};
use crate::map::{rank_profile, MapField};
use crate::metric::{MetricField, MetricSpec};
use crate::parallel::{parallel_section_detect, DetectorConfig};
use crate::stencil::sup_abs;
use crate::weyl::{classify_higgs, codifferential_sup, gauduchon_fix, GauduchonConfig, HiggsField, WeylClass};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GauduchonSummary {
    pub converged: bool,
    pub iterations: usize,
    /// `sup |d^*Theta|` after the gauge change.
    pub residual: f64,
    pub codifferential_before: f64,
    pub factor_min: f64,
    pub factor_max: f64,
}

/// Distance inequality evaluated at every monitor step of the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyIneqTrace {
    pub evaluations: usize,
    pub min_margin: f64,
    pub worst_step: usize,
    pub worst: SyIneqReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSummary {
    /// `analytic` when `exp(-V) g` is built in closed form, `rescaled` otherwise.
    pub metric: String,
    pub harmonic: FlowReport,
    /// `sup_x d(u_W(x), u_H(x))` between the final maps.
    pub max_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub tolerance: f64,
    pub histogram: Vec<usize>,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelSummary {
    pub shift: f64,
    pub quotient: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub weyl_class: Option<WeylClass>,
    pub rank: Option<RankSummary>,
    pub parallel_section: Option<ParallelSummary>,
    pub ricci_cond: Option<RicciCondSpectrum>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelianRow {
    pub algebra: String,
    pub nu: usize,
    pub rank_bound: usize,
    pub certified: bool,
    pub max_bracket_norm: f64,
    pub centralizer_dim: usize,
    pub half_dim_bound: f64,
}

pub const ABELIAN_COLUMNS: [&str; 7] = [
    "algebra",
    "nu",
    "rank_bound",
    "certified",
    "max_bracket_norm",
    "centralizer_dim",
    "half_dim_bound",
];

pub const RESIDUAL_COLUMNS: [&str; 8] = [
    "identity",
    "grid",
    "spacing",
    "sup_residual",
    "l2_residual",
    "worst_index",
    "worst_residual",
    "solution_defect",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub command: String,
    pub name: String,
    pub provenance: Provenance,
    pub gauduchon: Option<GauduchonSummary>,
    pub flow: Option<FlowReport>,
    pub residuals: Vec<ResidualReport>,
    /// Scalar outcomes of checks without a residual report.
    pub checks: BTreeMap<String, f64>,
    pub syineq: Option<SyIneqTrace>,
    pub exact_equivalence: Option<EquivalenceSummary>,
    pub classification: Classification,
    pub abelian: Vec<AbelianRow>,
    pub warnings: Vec<String>,
    /// Failures of individual stages; the report is partial when non-empty.
    pub errors: Vec<String>,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig, command: Command) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            command: command.name().into(),
            name: cfg.name.clone(),
            provenance: Provenance {
                config_hash: cfg.hash(),
                seed: cfg.seed,
                version: env!("CARGO_PKG_VERSION").into(),
            },
            gauduchon: None,
            flow: None,
            residuals: Vec::new(),
            checks: BTreeMap::new(),
            syineq: None,
            exact_equivalence: None,
            classification: Classification::default(),
            abelian: Vec::new(),
            warnings: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// 1 on any stage error, the flow outcome code after a flow, 3 for an
    /// unconverged gauge solve, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            return 1;
        }
        if let Some(f) = &self.flow {
            return f.outcome.exit_code();
        }
        match &self.gauduchon {
            Some(g) if !g.converged => 3,
            _ => 0,
        }
    }

    fn record<T>(&mut self, stage: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("{stage}: {e}"));
                None
            }
        }
    }

    fn push_residual(&mut self, r: ResidualReport) {
        self.warnings
            .extend(r.warnings.iter().map(|w| format!("{}: {w}", r.identity)));
        self.residuals.push(r);
    }
}

/// Fields built from a configuration.
pub struct Fields {
    pub g: MetricField,
    pub theta: HiggsField,
    pub u0: Option<MapField>,
}

pub fn build_fields(cfg: &ExperimentConfig) -> Result<Fields> {
    let domain = cfg.domain()?;
    let grid = cfg.grid()?;
    let g = domain.metric.build(&grid, domain.stencil)?;
    let theta = cfg.higgs.build(&g)?;
    let u0 = match (&cfg.target, &cfg.initial_map) {
        (Some(t), Some(m)) => Some(m.build(&grid, t, &cfg.equivariance)?),
        _ => None,
    };
    Ok(Fields { g, theta, u0 })
}

pub struct RunOutput {
    pub report: ExperimentReport,
    pub final_map: Option<MapField>,
    pub wall_time_s: f64,
}

/// Runs the pipeline for `command`. Configuration and field-construction errors are
/// returned; failures of later stages are recorded in the report.
pub fn run_experiment(cfg: &ExperimentConfig, command: Command) -> Result<RunOutput> {
    let start = Instant::now();
    cfg.validate_for(command)?;
    let mut report = ExperimentReport::new(cfg, command);
    if command == Command::Abelian {
        report.abelian = abelian_table(&cfg.abelian.clone().unwrap_or_default(), cfg.seed)?;
        return Ok(RunOutput {
            report,
            final_map: None,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }

    let Fields { mut g, mut theta, u0 } = build_fields(cfg)?;
    let gauge = match command {
        Command::Gauduchon => Some(cfg.gauduchon.clone().unwrap_or_default()),
        _ => cfg.gauduchon.clone(),
    };
    if let Some(gc) = gauge {
        if let Some((g2, t2)) = gauge_fields(&mut report, &g, &theta, &gc) {
            g = g2;
            theta = t2;
        }
    }

    let mut final_map = None;
    let mut last_state = None;
    let mut u = u0.clone();
    if command == Command::Flow {
        let u0 = u0.as_ref().expect("validated");
        let flow = Flow::new(&g, &theta)?;
        let mut trace: Option<SyIneqTrace> = None;
        let want_syineq = cfg.verify.contains(&Verification::Syineq);
        let mut syineq_error = None;
        let mut observer = |s: &FlowState| -> Result<()> {
            if !want_syineq || syineq_error.is_some() {
                return Ok(());
            }
            match syineq_check(&s.u, u0, &g, &theta) {
                Ok(r) => {
                    let t = trace.get_or_insert_with(|| SyIneqTrace {
                        evaluations: 0,
                        min_margin: f64::INFINITY,
                        worst_step: s.step,
                        worst: r.clone(),
                    });
                    t.evaluations += 1;
                    if r.min_margin < t.min_margin {
                        t.min_margin = r.min_margin;
                        t.worst_step = s.step;
                        t.worst = r;
                    }
                }
                Err(e) => syineq_error = Some(e),
            }
            Ok(())
        };
        let run = flow_run_observed(u0, &flow, &cfg.flow, &mut observer);
        if let Some(e) = syineq_error {
            report.errors.push(format!("syineq: {e}"));
        }
        report.syineq = trace;
        if let Some(run) = report.record("flow", run) {
            if let Some(m) = &run.report.message {
                report.warnings.push(format!("flow: {m}"));
            }
            report.flow = Some(run.report);
            u = Some(run.state.u.clone());
            final_map = Some(run.state.u.clone());
            last_state = Some((flow, run.state));
        }
    }

    for check in &cfg.verify {
        match check {
            Verification::Syineq => {}
            Verification::BochnerParabolic => {
                if let Some((flow, state)) = &last_state {
                    let r = flow
                        .resolve_dt(cfg.flow.dt)
                        .and_then(|dt| flow.step(state, dt))
                        .and_then(|next| bochner_parabolic_residual(state, Some(&next), &g, &theta));
                    if let Some((a, b)) = report.record("bochner_parabolic", r) {
                        report.push_residual(a);
                        report.push_residual(b);
                    }
                }
            }
            Verification::ExactEquivalence => {
                if let (Some(flow_report), Some(uf)) = (&report.flow, &final_map) {
                    let r = exact_equivalence(cfg, &g, u0.as_ref().expect("validated"), uf, flow_report);
                    report.exact_equivalence = report.record("exact_equivalence", r);
                }
            }
            _ => {
                let u = u.as_ref();
                run_check(&mut report, check, u, &g, &theta, cfg.seed);
            }
        }
    }

    if command == Command::Classify {
        let have = |f: fn(&Verification) -> bool| cfg.verify.iter().any(f);
        let u = u.as_ref();
        if !have(|v| matches!(v, Verification::WeylClass)) {
            run_check(&mut report, &Verification::WeylClass, u, &g, &theta, cfg.seed);
        }
        if !have(|v| matches!(v, Verification::RankProfile { .. })) {
            let v = Verification::RankProfile {
                tolerance: crate::map::RANK_TOL,
            };
            run_check(&mut report, &v, u, &g, &theta, cfg.seed);
        }
        if !have(|v| matches!(v, Verification::RicciCond { .. })) {
            let v = Verification::RicciCond { rank_tolerance: 1e-10 };
            run_check(&mut report, &v, u, &g, &theta, cfg.seed);
        }
        if let Some(suite) = &cfg.abelian {
            let rows = abelian_table(suite, cfg.seed);
            report.abelian = report.record("abelian", rows).unwrap_or_default();
        }
    }

    Ok(RunOutput {
        report,
        final_map: if cfg.output.write_map { final_map } else { None },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn gauge_fields(
    report: &mut ExperimentReport,
    g: &MetricField,
    theta: &HiggsField,
    gc: &GauduchonConfig,
) -> Option<(MetricField, HiggsField)> {
    let before = codifferential_sup(g, theta);
    let res = report.record("gauduchon", gauduchon_fix(g, theta, gc))?;
    report.gauduchon = Some(GauduchonSummary {
        converged: res.converged,
        iterations: res.iterations,
        residual: res.residual,
        codifferential_before: before,
        factor_min: res.f.iter().copied().fold(f64::INFINITY, f64::min),
        factor_max: res.f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    });
    if !res.converged {
        report
            .warnings
            .push(format!("gauduchon: not converged, residual {:e}", res.residual));
    }
    report.record("gauduchon", res.apply(g, theta))
}

fn run_check(
    report: &mut ExperimentReport,
    check: &Verification,
    u: Option<&MapField>,
    g: &MetricField,
    theta: &HiggsField,
    seed: u64,
) {
    let name = check.name();
    let need_map = || u.ok_or_else(|| Error::Config(format!("check '{name}' needs an initial map")));
    let complex = || ComplexDomain::new(g.clone());
    match check {
        Verification::BochnerGeneral => {
            let r = need_map().and_then(|u| bochner_general_residual(u, g));
            if let Some(r) = report.record(name, r) {
                report.push_residual(r);
            }
        }
        Verification::BochnerWeyl => {
            let r = need_map().and_then(|u| bochner_weyl_residual(u, g, theta));
            if let Some(w) = report.record(name, r) {
                report.push_residual(w.bell);
                report.push_residual(w.blemma);
            }
        }
        Verification::Sampson => {
            let r = need_map().and_then(|u| crate::sampson::sampson_residual(u, &complex()?, theta));
            if let Some(r) = report.record(name, r) {
                report.push_residual(r);
            }
        }
        Verification::HermitianTension => {
            let r = need_map().and_then(|u| Ok(hermitian_tension(u, &complex()?)?.sup_norm(u.target())));
            if let Some(v) = report.record(name, r) {
                report.checks.insert("hermitian_tension_sup".into(), v);
            }
        }
        Verification::Pluriharmonic => {
            let r = need_map().and_then(|u| pluriharmonic_residual(u, &complex()?, theta));
            if let Some(v) = report.record(name, r) {
                report.checks.insert("pluriharmonic_sup".into(), sup_abs(&v));
            }
        }
        Verification::RicciCond { rank_tolerance } => {
            let r = ricci_cond_spectrum(g, theta, *rank_tolerance);
            report.classification.ricci_cond = report.record(name, r);
        }
        Verification::ParallelSection { shift, max_iterations } => {
            let config = DetectorConfig {
                shift: *shift,
                max_iterations: *max_iterations,
                seed,
                ..Default::default()
            };
            let r = need_map().and_then(|u| parallel_section_detect(u, g, &config));
            report.classification.parallel_section = report.record(name, r).map(|p| ParallelSummary {
                shift: *shift,
                quotient: p.quotient,
                iterations: p.iterations,
            });
        }
        Verification::RankProfile { tolerance } => {
            let r = need_map().and_then(|u| rank_profile(u, g, *tolerance));
            report.classification.rank = report.record(name, r).map(|p| RankSummary {
                tolerance: *tolerance,
                histogram: p.histogram,
                max: p.max,
            });
        }
        Verification::WeylClass => {
            let r = classify_higgs(theta, g);
            report.classification.weyl_class = report.record(name, r);
        }
        Verification::Syineq | Verification::BochnerParabolic | Verification::ExactEquivalence => {
            unreachable!("flow checks are handled by the pipeline")
        }
    }
}

/// `exp(-V) g`, in closed form when the domain metric is flat or conformally flat.
fn harmonic_metric(cfg: &ExperimentConfig, g: &MetricField) -> Result<(MetricField, &'static str)> {
    let domain = cfg.domain()?;
    let v = cfg
        .higgs
        .potential()
        .ok_or_else(|| Error::Config("exact equivalence needs an exact Higgs field".into()))?;
    let half = v.clone().scaled(-0.5);
    let closed = match &domain.metric {
        MetricSpec::Flat => Some(MetricSpec::Conformal {
            phi: half,
            exact_derivatives: true,
        }),
        MetricSpec::Conformal {
            phi,
            exact_derivatives,
        } => Some(MetricSpec::Conformal {
            phi: phi.clone().plus(half),
            exact_derivatives: *exact_derivatives,
        }),
        _ => None,
    };
    if let (Some(spec), None) = (closed, &cfg.gauduchon) {
        return Ok((spec.build(g.grid(), domain.stencil)?, "analytic"));
    }
    let grid = g.grid();
    let f: Vec<f64> = (0..grid.len()).map(|p| -v.value(&grid.coords(p))).collect();
    Ok((g.rescaled(&f)?, "rescaled"))
}

fn exact_equivalence(
    cfg: &ExperimentConfig,
    g: &MetricField,
    u0: &MapField,
    weyl_final: &MapField,
    weyl: &FlowReport,
) -> Result<EquivalenceSummary> {
    if cfg.gauduchon.is_some() {
        return Err(Error::Unsupported("exact equivalence after a Gauduchon gauge change".into()));
    }
    let (gh, how) = harmonic_metric(cfg, g)?;
    let run = flow_run(u0, &gh, &HiggsField::zero(&gh), &cfg.flow)?;
    let target = u0.target();
    let max_distance = weyl_final
        .values()
        .iter()
        .zip(run.state.u.values())
        .map(|(a, b)| target.dist(a, b))
        .fold(0.0, f64::max);
    if weyl.outcome != Outcome::Converged || run.report.outcome != Outcome::Converged {
        return Err(Error::SolverFailure {
            what: format!(
                "exact equivalence needs two converged flows (weyl: {:?}, harmonic: {:?})",
                weyl.outcome, run.report.outcome
            ),
            iterations: run.report.steps,
            residual: run.report.final_sup_tension,
        });
    }
    Ok(EquivalenceSummary {
        metric: how.into(),
        harmonic: run.report,
        max_distance,
    })
}

pub fn abelian_table(suite: &AbelianSuite, seed: u64) -> Result<Vec<AbelianRow>> {
    let mut rows = Vec::new();
    for entry in &suite.algebras {
        for &size in &entry.sizes {
            let cd = build_algebra(entry.algebra, size)?;
            let r = max_abelian(&cd, suite.strategy, suite.trials, seed)?;
            rows.push(AbelianRow {
                algebra: r.algebra.clone(),
                nu: r.nu,
                rank_bound: rank_bound(&r),
                certified: r.certified,
                max_bracket_norm: r.witness.max_bracket_norm,
                centralizer_dim: r.centralizer_dim,
                half_dim_bound: r.half_dim_bound,
            });
        }
    }
    Ok(rows)
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Writes `report.json`, `residuals.csv`, and `series.csv` / `abelian.csv` when present.
/// Output depends only on the report.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(&path, json)?;
    files.push(path);

    let path = dir.join("residuals.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(RESIDUAL_COLUMNS)?;
    for r in &report.residuals {
        let grid: Vec<String> = r.grid.iter().map(|n| n.to_string()).collect();
        w.write_record([
            r.identity.clone(),
            grid.join("x"),
            fmt(r.spacing),
            fmt(r.sup_residual),
            fmt(r.l2_residual),
            r.worst_index.to_string(),
            fmt(r.worst_residual),
            r.solution_defect.map(fmt).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    files.push(path);

    if let Some(flow) = &report.flow {
        let path = dir.join("series.csv");
        flow.write_series_csv(&path)?;
        files.push(path);
    }

    if !report.abelian.is_empty() {
        let path = dir.join("abelian.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(ABELIAN_COLUMNS)?;
        for r in &report.abelian {
            w.write_record([
                r.algebra.clone(),
                r.nu.to_string(),
                r.rank_bound.to_string(),
                r.certified.to_string(),
                fmt(r.max_bracket_norm),
                r.centralizer_dim.to_string(),
                fmt(r.half_dim_bound),
            ])?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// `report.json` and friends, plus `final_map.csv` and the isolated `timing.json`.
pub fn emit_run(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = emit_report(&out.report, dir)?;
    if let Some(u) = &out.final_map {
        let path = dir.join("final_map.csv");
        u.write_csv(&path)?;
        files.push(path);
    }
    let mut timing = BTreeMap::new();
    timing.insert("wall_time_s", out.wall_time_s);
    if let Some(f) = &out.report.flow {
        timing.insert("flow_wall_time_s", f.wall_time_s);
    }
    let path = dir.join("timing.json");
    std::fs::write(&path, serde_json::to_string_pretty(&timing)? + "\n")?;
    files.push(path);
    Ok(files)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_config(verify: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
            "name": "circle",
            "domain": {{"grid": {{"sizes": [16, 4], "lengths": [6.283185307179586, 1.0]}}}},
            "target": {{"kind": "circle", "radius": 1.0}},
            "initial_map": {{"family": "perturbed_linear", "winding": [[1.0, 0.0]],
                "perturbation": [{{"waves": [{{"amplitude": 0.3, "wavevector": [1.0, 0.0]}}]}}]}},
            "flow": {{"dt": {{"policy": "cfl", "lambda": 0.5}}}},
            "verify": {verify}
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn empty_verification_list_gives_empty_residuals() {
        let out = run_experiment(&circle_config("[]"), Command::Verify).unwrap();
        assert!(out.report.residuals.is_empty());
        let dir = tempfile::tempdir().unwrap();
        emit_report(&out.report, dir.path()).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(v["residuals"], serde_json::json!([]));
        assert_eq!(out.report.exit_code(), 0);
    }

    #[test]
    fn residual_csv_matches_json() {
        let cfg = circle_config(r#"[{"check": "bochner_general"}, {"check": "bochner_weyl"}]"#);
        let out = run_experiment(&cfg, Command::Verify).unwrap();
        assert_eq!(out.report.residuals.len(), 3);
        let dir = tempfile::tempdir().unwrap();
        emit_report(&out.report, dir.path()).unwrap();
        let back = read_report(&dir.path().join("report.json")).unwrap();
        let mut rd = csv::Reader::from_path(dir.path().join("residuals.csv")).unwrap();
        let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        for (row, r) in rows.iter().zip(&back.residuals) {
            assert_eq!(&row[0], r.identity.as_str());
            assert_eq!(row[3].parse::<f64>().unwrap(), r.sup_residual);
            assert_eq!(row[4].parse::<f64>().unwrap(), r.l2_residual);
            assert_eq!(row[5].parse::<usize>().unwrap(), r.worst_index);
            assert_eq!(row[6].parse::<f64>().unwrap(), r.worst_residual);
        }
    }

    #[test]
    fn flow_run_is_reproducible_and_reemission_is_byte_identical() {
        let cfg = circle_config(r#"[{"check": "syineq"}, {"check": "bochner_parabolic"}]"#);
        let a = run_experiment(&cfg, Command::Flow).unwrap();
        let b = run_experiment(&cfg, Command::Flow).unwrap();
        assert_eq!(a.report.exit_code(), 0);
        assert!(a.report.errors.is_empty(), "{:?}", a.report.errors);
        assert!(a.report.syineq.as_ref().unwrap().evaluations > 1);
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        emit_run(&a, d1.path()).unwrap();
        emit_run(&b, d2.path()).unwrap();
        for f in ["report.json", "residuals.csv", "series.csv", "final_map.csv"] {
            assert_eq!(
                std::fs::read(d1.path().join(f)).unwrap(),
                std::fs::read(d2.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let back = read_report(&d1.path().join("report.json")).unwrap();
        let d3 = tempfile::tempdir().unwrap();
        emit_report(&back, d3.path()).unwrap();
        for f in ["report.json", "residuals.csv", "series.csv"] {
            assert_eq!(
                std::fs::read(d1.path().join(f)).unwrap(),
                std::fs::read(d3.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn stage_failures_are_reported_not_raised() {
        // a 3-dimensional domain is not complex
        let mut cfg = circle_config(r#"[{"check": "hermitian_tension"}, {"check": "weyl_class"}]"#);
        cfg.domain.as_mut().unwrap().grid.sizes = vec![8, 4, 4];
        cfg.domain.as_mut().unwrap().grid.lengths = vec![6.283185307179586, 1.0, 1.0];
        cfg.initial_map = Some(crate::map::MapSpec::Linear {
            winding: vec![vec![1.0, 0.0, 0.0]],
        });
        let out = run_experiment(&cfg, Command::Verify).unwrap();
        assert_eq!(out.report.errors.len(), 1);
        assert!(out.report.classification.weyl_class.is_some());
        assert_eq!(out.report.exit_code(), 1);
    }

    #[test]
    fn abelian_table_default_suite() {
        let rows = abelian_table(&AbelianSuite::default(), 7).unwrap();
        let bounds: Vec<(String, usize)> = rows.iter().map(|r| (r.algebra.clone(), r.rank_bound)).collect();
        assert_eq!(bounds[0], ("so(1,3)".to_string(), 2));
        assert_eq!(bounds[3], ("su(1,2)".to_string(), 4));
        assert_eq!(bounds[6], ("sp(1,2)".to_string(), 4));
        assert!(rows[..3].iter().all(|r| r.certified));
    }
}
