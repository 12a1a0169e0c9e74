//! Explicit geodesic-Euler heat flow `du/dt = tau^W(u)` with monitors and
//! outcome classification.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{differential_norm_sq, energy_from_differential, DifferentialField, MapField, TensionOperator};
use crate::metric::MetricField;
use crate::target::{scale, Vector};
use crate::weyl::HiggsField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// A fraction of the explicit stability bound.
    Cfl { lambda: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Cfl { lambda: 0.25 }
    }
}

fn d_tolerance() -> f64 {
    1e-8
}
fn d_max_steps() -> usize {
    1_000_000
}
fn d_monitor_every() -> usize {
    10
}
fn d_window() -> usize {
    200
}
fn d_window_rel_sd() -> f64 {
    1e-3
}
fn d_guard() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default)]
    pub dt: DtPolicy,
    /// Stop when `sup |tau^W| < tolerance`.
    #[serde(default = "d_tolerance")]
    pub tolerance: f64,
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub max_time: Option<f64>,
    #[serde(default = "d_monitor_every")]
    pub monitor_every: usize,
    /// Number of monitor samples inspected by the traveling-wave test.
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default = "d_window_rel_sd")]
    pub window_rel_sd: f64,
    /// Abort once any pointwise `|du|` exceeds this.
    #[serde(default = "d_guard")]
    pub divergence_guard: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt: DtPolicy::default(),
            tolerance: d_tolerance(),
            max_steps: d_max_steps(),
            max_time: None,
            monitor_every: d_monitor_every(),
            window: d_window(),
            window_rel_sd: d_window_rel_sd(),
            divergence_guard: d_guard(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match self.dt {
            DtPolicy::Cfl { lambda } if !(lambda > 0.0 && lambda <= 0.5) => {
                return bad("CFL fraction must lie in (0, 0.5]")
            }
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => return bad("dt must be positive"),
            _ => {}
        }
        if !(self.tolerance > 0.0) || !(self.window_rel_sd > 0.0) || !(self.divergence_guard > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.monitor_every == 0 || self.window < 2 {
            return bad("monitor cadence must be >= 1 and the window >= 2");
        }
        if let Some(t) = self.max_time {
            if !(t > 0.0) {
                return bad("max_time must be positive");
            }
        }
        Ok(())
    }
}

/// `h_min^2 / (2 n sup g^aa)`.
pub fn cfl_bound(g: &MetricField) -> f64 {
    let h = g.grid().min_spacing();
    h * h / (2.0 * g.dim() as f64 * g.sup_inverse_diagonal())
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub step: usize,
    pub u: MapField,
    /// `du/dt = tau^W(u)`.
    pub velocity: Vec<Vector>,
    pub du: DifferentialField,
}

impl FlowState {
    pub fn sup_velocity_sq(&self) -> f64 {
        let t = self.u.target();
        self.velocity.iter().map(|v| t.norm_sq(v)).fold(0.0, f64::max)
    }

    /// Pointwise `|du|^2` with respect to `g`.
    pub fn du_norm_sq(&self, g: &MetricField) -> Vec<f64> {
        let t = self.u.target();
        let n = g.dim();
        self.du
            .iter()
            .enumerate()
            .map(|(p, d)| differential_norm_sq(t, g.inverse(p), d, n))
            .collect()
    }
}

/// A tension operator bound to its metric, with the explicit stability bound.
#[derive(Clone, Debug)]
pub struct Flow {
    op: TensionOperator,
    metric: MetricField,
    bound: f64,
    guard: f64,
}

impl Flow {
    pub fn new(g: &MetricField, theta: &HiggsField) -> Result<Self> {
        Ok(Self::with_operator(TensionOperator::weyl(g, theta)?, g))
    }

    pub fn with_operator(op: TensionOperator, g: &MetricField) -> Self {
        Flow {
            op,
            metric: g.clone(),
            bound: cfl_bound(g),
            guard: d_guard(),
        }
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn operator(&self) -> &TensionOperator {
        &self.op
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn stability_bound(&self) -> f64 {
        self.bound
    }

    pub fn resolve_dt(&self, policy: DtPolicy) -> Result<f64> {
        match policy {
            DtPolicy::Cfl { lambda } => Ok(lambda * self.bound),
            DtPolicy::Fixed { dt } => {
                if dt > self.bound * (1.0 + 1e-12) {
                    Err(Error::StepRejected { dt, bound: self.bound })
                } else {
                    Ok(dt)
                }
            }
        }
    }

    pub fn initial_state(&self, u0: &MapField) -> Result<FlowState> {
        let (velocity, du) = self.op.apply_with_differential(u0)?;
        let s = FlowState {
            t: 0.0,
            step: 0,
            u: u0.clone(),
            velocity,
            du,
        };
        self.check(&s)?;
        Ok(s)
    }

    fn check(&self, s: &FlowState) -> Result<()> {
        let finite = s.u.values().iter().all(|v| v.iter().all(|x| x.is_finite()))
            && s.velocity.iter().all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::Diverged(format!("non-finite values at step {}", s.step)));
        }
        let sup = s.du_norm_sq(&self.metric).into_iter().fold(0.0, f64::max);
        if !sup.is_finite() || sup.sqrt() > self.guard {
            return Err(Error::Diverged(format!(
                "|du| = {:e} exceeds the guard at step {}",
                sup.sqrt(),
                s.step
            )));
        }
        Ok(())
    }

    /// One geodesic Euler step `u <- exp_u(dt tau^W(u))`.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        if dt > self.bound * (1.0 + 1e-12) {
            return Err(Error::StepRejected { dt, bound: self.bound });
        }
        let target = state.u.target();
        let values: Vec<Vector> = state
            .u
            .values()
            .par_iter()
            .zip(state.velocity.par_iter())
            .map(|(p, v)| target.exp_unchecked(p, &scale(dt, &target.project_tangent(p, v))))
            .collect();
        let u = state.u.with_values(values);
        let (velocity, du) = self.op.apply_with_differential(&u)?;
        let s = FlowState {
            t: state.t + dt,
            step: state.step + 1,
            u,
            velocity,
            du,
        };
        self.check(&s)?;
        Ok(s)
    }
}

/// Single step with a freshly assembled operator.
pub fn flow_step(state: &FlowState, g: &MetricField, theta: &HiggsField, dt: f64) -> Result<FlowState> {
    Flow::new(g, theta)?.step(state, dt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    TravelingWave,
    BudgetExhausted,
    Diverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Converged => 0,
            Outcome::TravelingWave => 2,
            Outcome::BudgetExhausted => 3,
            Outcome::Diverged => 1,
        }
    }
}

/// One row of the monitor series. `rho` is the pointwise distance to the initial map
/// in the model cover; the ratios track the pointwise bounds of the flow estimates
/// with the unknown constants left free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub sup_tension: f64,
    pub sup_velocity_sq: f64,
    pub rho_sup: f64,
    pub rho_inf: f64,
    pub sup_du_sq: f64,
    /// `sup |du|^2 / sup_{s<=t} ∫|du|^2`.
    pub c2_ratio: f64,
    /// `sup rho^2 / sup_{s<=t} (inf rho^2 + sup rho)`, absent while the denominator vanishes.
    pub c3_ratio: Option<f64>,
    /// `sup |du| / (1 + sup_{s<=t} sup rho^(1/2))`.
    pub c4_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub outcome: Outcome,
    pub message: Option<String>,
    pub steps: usize,
    pub final_time: f64,
    pub dt: f64,
    pub tolerance: f64,
    pub final_sup_tension: f64,
    pub final_energy: f64,
    /// Largest one-step increase of `sup |du/dt|^2`.
    pub max_velocity_sq_increase: f64,
    /// Largest increase of the energy between consecutive monitor samples.
    pub max_energy_increase: f64,
    pub samples: Vec<MonitorSample>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

pub const SERIES_COLUMNS: [&str; 7] = [
    "step",
    "t",
    "energy",
    "sup_tension",
    "sup_velocity_sq",
    "rho_sup",
    "rho_inf",
];

impl FlowReport {
    pub fn write_series_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SERIES_COLUMNS)?;
        for s in &self.samples {
            w.write_record([
                s.step.to_string(),
                format!("{:e}", s.t),
                format!("{:e}", s.energy),
                format!("{:e}", s.sup_tension),
                format!("{:e}", s.sup_velocity_sq),
                format!("{:e}", s.rho_sup),
                format!("{:e}", s.rho_inf),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Mean of `sup |du/dt|` over the last `window` samples.
    pub fn asymptotic_speed(&self, window: usize) -> Option<f64> {
        let k = self.samples.len();
        if k == 0 {
            return None;
        }
        let tail = &self.samples[k.saturating_sub(window)..];
        Some(tail.iter().map(|s| s.sup_tension).sum::<f64>() / tail.len() as f64)
    }
}

pub struct FlowRun {
    pub report: FlowReport,
    pub state: FlowState,
}

#[derive(Default)]
struct Tracker {
    max_integral: f64,
    max_c3_denominator: f64,
    max_sqrt_rho: f64,
}

impl Tracker {
    fn sample(&mut self, s: &FlowState, u0: &MapField, g: &MetricField) -> MonitorSample {
        let target = s.u.target();
        let (energy, density) = energy_from_differential(target, g, &s.du);
        let sup_du_sq = 2.0 * density.iter().cloned().fold(0.0, f64::max);
        let rho: Vec<f64> = s
            .u
            .values()
            .par_iter()
            .zip(u0.values().par_iter())
            .map(|(a, b)| target.dist(a, b))
            .collect();
        let rho_sup = rho.iter().cloned().fold(0.0, f64::max);
        let rho_inf = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        self.max_integral = self.max_integral.max(2.0 * energy);
        self.max_c3_denominator = self.max_c3_denominator.max(rho_inf * rho_inf + rho_sup);
        self.max_sqrt_rho = self.max_sqrt_rho.max(rho_sup.sqrt());
        let v2 = s.sup_velocity_sq();
        MonitorSample {
            step: s.step,
            t: s.t,
            energy,
            sup_tension: v2.sqrt(),
            sup_velocity_sq: v2,
            rho_sup,
            rho_inf,
            sup_du_sq,
            c2_ratio: if self.max_integral > 0.0 {
                sup_du_sq / self.max_integral
            } else {
                0.0
            },
            c3_ratio: (self.max_c3_denominator > 0.0).then(|| rho_sup * rho_sup / self.max_c3_denominator),
            c4_ratio: sup_du_sq.sqrt() / (1.0 + self.max_sqrt_rho),
        }
    }
}

fn is_traveling(samples: &[MonitorSample], config: &FlowConfig) -> bool {
    if samples.len() < config.window {
        return false;
    }
    let tail = &samples[samples.len() - config.window..];
    let k = tail.len() as f64;
    let mean = tail.iter().map(|s| s.sup_tension).sum::<f64>() / k;
    if mean <= config.tolerance {
        return false;
    }
    let var = tail.iter().map(|s| (s.sup_tension - mean).powi(2)).sum::<f64>() / k;
    var.sqrt() / mean < config.window_rel_sd
}

/// Runs the flow from `u0`, calling `observer` at every monitor step.
pub fn flow_run_observed(
    u0: &MapField,
    flow: &Flow,
    config: &FlowConfig,
    observer: &mut dyn FnMut(&FlowState) -> Result<()>,
) -> Result<FlowRun> {
    config.validate()?;
    let start = Instant::now();
    let flow = flow.clone().with_guard(config.divergence_guard);
    let dt = flow.resolve_dt(config.dt)?;
    let g = flow.metric().clone();
    let mut tracker = Tracker::default();
    let mut samples = Vec::new();
    let mut state = flow.initial_state(u0)?;
    let mut v2 = state.sup_velocity_sq();
    let mut max_increase = f64::NEG_INFINITY;
    let mut message = None;

    let outcome = loop {
        let monitor = state.step % config.monitor_every == 0;
        if monitor {
            samples.push(tracker.sample(&state, u0, &g));
            observer(&state)?;
        }
        if v2.sqrt() < config.tolerance {
            break Outcome::Converged;
        }
        if monitor && is_traveling(&samples, config) {
            break Outcome::TravelingWave;
        }
        let over_time = config.max_time.map_or(false, |t| state.t >= t * (1.0 - 1e-12));
        if state.step >= config.max_steps || over_time {
            break Outcome::BudgetExhausted;
        }
        match flow.step(&state, dt) {
            Ok(next) => {
                let nv2 = next.sup_velocity_sq();
                max_increase = max_increase.max(nv2 - v2);
                v2 = nv2;
                state = next;
            }
            Err(Error::Diverged(m)) => {
                message = Some(m);
                break Outcome::Diverged;
            }
            Err(e) => return Err(e),
        }
    };
    if samples.last().map_or(true, |s| s.step != state.step) {
        samples.push(tracker.sample(&state, u0, &g));
        observer(&state)?;
    }
    let max_energy_increase = samples
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let last = samples.last().expect("at least one sample");
    let report = FlowReport {
        outcome,
        message,
        steps: state.step,
        final_time: state.t,
        dt,
        tolerance: config.tolerance,
        final_sup_tension: last.sup_tension,
        final_energy: last.energy,
        max_velocity_sq_increase: if max_increase.is_finite() { max_increase } else { 0.0 },
        max_energy_increase: if max_energy_increase.is_finite() {
            max_energy_increase
        } else {
            0.0
        },
        samples,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(FlowRun { report, state })
}

pub fn flow_run(u0: &MapField, g: &MetricField, theta: &HiggsField, config: &FlowConfig) -> Result<FlowRun> {
    flow_run_observed(u0, &Flow::new(g, theta)?, config, &mut |_| Ok(()))
}
