//! Locally constrained curvature flows of radial graphs.
//!
//! The graph evolves by `dr/dt = eta v` with normal speed
//!
//! * classical: `eta = lambda' E_{m-1}(k) / E_m(k) - u`
//! * shifted:   `eta = (lambda' - u) E_{m-1}(k~) / E_m(k~) - u`
//!
//! Time stepping is explicit with a parabolic step bound. A step whose
//! result is non-finite, leaves the cone, or loses h-convexity is retried
//! with half the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::FunctionalReport;
use crate::surface::{
    geometry, max_gradient_sq, min_shifted_curvature, GeometryFields, RadialGraph, CONVEXITY_TOL,
};
use crate::symfun::quotient_with_derivative;

/// Floor for the step size; reaching it is flagged in the series.
pub const DT_FLOOR: f64 = 1e-12;
/// Largest allowed drop of the minimum shifted curvature during a step.
pub const STEP_CONVEXITY_TOL: f64 = 1e-6;
/// Slack on the radial barrier.
pub const C0_TOL: f64 = 1e-6;
const MAX_HALVINGS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Classical,
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Rk2,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub family: Family,
    pub m: usize,
    pub integrator: Integrator,
    pub cfl_safety: f64,
    pub t_max: f64,
    pub stop_grad_sq: f64,
    pub record_every: f64,
}

impl FlowSpec {
    pub fn new(family: Family, m: usize, t_max: f64) -> Self {
        Self {
            family,
            m,
            integrator: Integrator::Rk4,
            cfl_safety: 0.5,
            t_max,
            stop_grad_sq: 1e-10,
            record_every: t_max / 200.0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m < 1 || self.m > n {
            return Err(Error::Config(format!("flow index m = {} outside 1..={n}", self.m)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety = {} outside (0, 1]", self.cfl_safety)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::Config(format!("t_max = {} must be positive", self.t_max)));
        }
        if !(self.record_every > 0.0) {
            return Err(Error::Config(format!("record_every = {} must be positive", self.record_every)));
        }
        if !(self.stop_grad_sq >= 0.0) {
            return Err(Error::Config("stop_grad_sq must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Horizon,
    Blowup,
    ConvexityLost,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::Horizon => "horizon",
            Status::Blowup => "blowup",
            Status::ConvexityLost => "convexity_lost",
        })
    }
}

/// Speed field and the curvature quotient at each point.
#[derive(Debug, Clone)]
pub struct SpeedField {
    pub eta: Vec<f64>,
    /// `F = E_m / E_{m-1}` of the relevant curvature tuple.
    pub f: Vec<f64>,
    /// `max_i dF/dk_i`.
    pub f_dot_max: Vec<f64>,
}

/// Speed at a single grid point.
pub fn speed(fields: &GeometryFields, p: usize, spec: &FlowSpec) -> Result<f64> {
    speed_parts(fields, p, spec).map(|(eta, _, _)| eta)
}

fn speed_parts(fields: &GeometryFields, p: usize, spec: &FlowSpec) -> Result<(f64, f64, f64)> {
    let (lp, u) = (fields.lambda_p[p], fields.u[p]);
    let (tuple, coef) = match spec.family {
        Family::Classical => (fields.kappa[p].clone(), lp),
        Family::Shifted => (fields.shifted(p), lp - u),
    };
    let (f, grad) = quotient_with_derivative(&tuple, spec.m).map_err(|e| match e {
        Error::Cone { index, value, .. } => Error::Cone { index, value, point: Some(p) },
        other => other,
    })?;
    let dmax = grad.iter().copied().fold(0.0, f64::max);
    Ok((coef / f - u, f, dmax))
}

pub fn speeds(fields: &GeometryFields, spec: &FlowSpec) -> Result<SpeedField> {
    let len = fields.len();
    let mut out = SpeedField {
        eta: Vec::with_capacity(len),
        f: Vec::with_capacity(len),
        f_dot_max: Vec::with_capacity(len),
    };
    for p in 0..len {
        let (eta, f, d) = speed_parts(fields, p, spec)?;
        out.eta.push(eta);
        out.f.push(f);
        out.f_dot_max.push(d);
    }
    Ok(out)
}

/// Parabolic step bound `cfl * h^2 / (2 n D)`, and whether the floor was hit.
pub fn stable_dt(fields: &GeometryFields, sp: &SpeedField, spec: &FlowSpec, spacing: f64) -> (f64, bool) {
    let mut d: f64 = 0.0;
    for p in 0..fields.len() {
        let coef = match spec.family {
            Family::Classical => fields.lambda_p[p],
            Family::Shifted => fields.lambda_p[p] - fields.u[p],
        };
        let l = fields.lambda[p];
        let local = coef.abs() / (sp.f[p] * sp.f[p]) * sp.f_dot_max[p] / (l * l);
        d = d.max(local);
    }
    let dt = spec.cfl_safety * spacing * spacing / (2.0 * fields.n as f64 * d);
    if !(dt >= DT_FLOOR) {
        (DT_FLOOR, true)
    } else {
        (dt, false)
    }
}

/// `dr/dt` on a graph, with its geometry and speeds.
fn rate(g: &RadialGraph, spec: &FlowSpec) -> Result<(Vec<f64>, GeometryFields, SpeedField)> {
    let fields = geometry(g)?;
    let sp = speeds(&fields, spec)?;
    let k = sp.eta.iter().zip(&fields.v).map(|(e, v)| e * v).collect();
    Ok((k, fields, sp))
}

fn axpy(r: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    r.iter().zip(k).map(|(x, y)| x + a * y).collect()
}

fn single_step(g: &RadialGraph, k1: &[f64], spec: &FlowSpec, dt: f64) -> Result<RadialGraph> {
    let r = &g.r;
    let next = match spec.integrator {
        Integrator::Euler => axpy(r, dt, k1),
        Integrator::Rk2 => {
            let (k2, _, _) = rate(&g.with_values(axpy(r, 0.5 * dt, k1))?, spec)?;
            axpy(r, dt, &k2)
        }
        Integrator::Rk4 => {
            let (k2, _, _) = rate(&g.with_values(axpy(r, 0.5 * dt, k1))?, spec)?;
            let (k3, _, _) = rate(&g.with_values(axpy(r, 0.5 * dt, &k2))?, spec)?;
            let (k4, _, _) = rate(&g.with_values(axpy(r, dt, &k3))?, spec)?;
            r.iter()
                .enumerate()
                .map(|(i, x)| x + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    };
    g.with_values(next)
}

/// Result of an accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub graph: RadialGraph,
    pub fields: GeometryFields,
    pub speeds: SpeedField,
    pub dt_used: f64,
    pub halvings: u32,
}

/// One explicit step with rejection and halving.
///
/// `guard_convexity` additionally rejects results whose minimum shifted
/// curvature falls below `-1e-6`. After 20 halvings the last failure is
/// returned: [`Error::Convexity`] for lost h-convexity, otherwise the
/// numerical error that caused the rejection.
pub fn step(g: &RadialGraph, spec: &FlowSpec, dt: f64, guard_convexity: bool) -> Result<StepOutcome> {
    let (k1, _, _) = rate(g, spec)?;
    step_with_rate(g, &k1, spec, dt, guard_convexity)
}

fn step_with_rate(
    g: &RadialGraph,
    k1: &[f64],
    spec: &FlowSpec,
    dt: f64,
    guard_convexity: bool,
) -> Result<StepOutcome> {
    let mut h = dt;
    let mut last = Error::NonFinite("step".into());
    for halvings in 0..=MAX_HALVINGS {
        let attempt = single_step(g, k1, spec, h).and_then(|next| {
            let (_, fields, sp) = rate(&next, spec)?;
            if guard_convexity {
                let min_shifted = min_shifted_curvature(&fields);
                if min_shifted < -STEP_CONVEXITY_TOL {
                    return Err(Error::Convexity { min_shifted });
                }
            }
            Ok((next, fields, sp))
        });
        match attempt {
            Ok((graph, fields, speeds)) => {
                return Ok(StepOutcome { graph, fields, speeds, dt_used: h, halvings })
            }
            Err(e) => last = e,
        }
        h *= 0.5;
    }
    Err(last)
}

/// One recorded state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub report: FunctionalReport,
    pub min_shift_curv: f64,
    pub max_grad_sq: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Step size that led to this state; 0 for the initial record.
    pub dt: f64,
    pub f_min: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeSeries {
    pub n: usize,
    pub spec: FlowSpec,
    pub records: Vec<Record>,
    pub status: Status,
    /// Error behind a `blowup` or `convexity_lost` status.
    pub failure: Option<String>,
    /// `r_min` never fell and `r_max` never rose by more than `1e-6`.
    pub c0_barrier_ok: bool,
    pub dt_floor_hit: bool,
    pub steps: usize,
    pub rejections: usize,
}

impl TimeSeries {
    pub fn initial(&self) -> &Record {
        &self.records[0]
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("series has an initial record")
    }

    /// Values of a flat functional key (or a record field) over time.
    pub fn column(&self, key: &str) -> Option<Vec<f64>> {
        self.records.iter().map(|r| record_value(r, key)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

pub fn record_value(r: &Record, key: &str) -> Option<f64> {
    match key {
        "t" => Some(r.t),
        "min_shift_curv" => Some(r.min_shift_curv),
        "max_grad_sq" => Some(r.max_grad_sq),
        "r_min" => Some(r.r_min),
        "r_max" => Some(r.r_max),
        "dt" => Some(r.dt),
        "f_min" => Some(r.f_min),
        "f_max" => Some(r.f_max),
        _ => r.report.get(key),
    }
}

fn make_record(
    t: f64,
    g: &RadialGraph,
    fields: &GeometryFields,
    sp: &SpeedField,
    dt: f64,
) -> Result<Record> {
    Ok(Record {
        t,
        report: FunctionalReport::from_fields(g, fields)?,
        min_shift_curv: min_shifted_curvature(fields),
        max_grad_sq: max_gradient_sq(fields),
        r_min: g.r_min(),
        r_max: g.r_max(),
        dt,
        f_min: sp.f.iter().copied().fold(f64::INFINITY, f64::min),
        f_max: sp.f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Integrate until the gradient criterion or the time horizon is met.
pub fn run(g0: &RadialGraph, spec: &FlowSpec) -> Result<(TimeSeries, RadialGraph)> {
    let n = g0.n();
    spec.validate(n)?;
    let (mut k, mut fields, mut sp) = rate(g0, spec)?;
    let guard_convexity = min_shifted_curvature(&fields) >= -CONVEXITY_TOL;
    let spacing = g0.grid.min_spacing();
    let (r_min0, r_max0) = (g0.r_min(), g0.r_max());

    let mut series = TimeSeries {
        n,
        spec: spec.clone(),
        records: vec![make_record(0.0, g0, &fields, &sp, 0.0)?],
        status: Status::Horizon,
        failure: None,
        c0_barrier_ok: true,
        dt_floor_hit: false,
        steps: 0,
        rejections: 0,
    };
    let mut g = g0.clone();
    let mut t = 0.0;
    let mut next_record = spec.record_every;
    let mut last_dt = 0.0;
    let eps_t = 1e-12 * spec.record_every;

    loop {
        if max_gradient_sq(&fields) < spec.stop_grad_sq {
            series.status = Status::Converged;
            break;
        }
        if t >= spec.t_max - eps_t {
            series.status = Status::Horizon;
            break;
        }
        let (mut dt, floored) = stable_dt(&fields, &sp, spec, spacing);
        series.dt_floor_hit |= floored;
        dt = dt.min(next_record - t).min(spec.t_max - t);
        match step_with_rate(&g, &k, spec, dt, guard_convexity) {
            Ok(out) => {
                series.rejections += out.halvings as usize;
                series.steps += 1;
                t += out.dt_used;
                last_dt = out.dt_used;
                g = out.graph;
                fields = out.fields;
                sp = out.speeds;
                k = sp.eta.iter().zip(&fields.v).map(|(e, v)| e * v).collect();
            }
            Err(e) => {
                series.status = match e {
                    Error::Convexity { .. } => Status::ConvexityLost,
                    _ => Status::Blowup,
                };
                series.failure = Some(e.to_string());
                series.rejections += MAX_HALVINGS as usize + 1;
                break;
            }
        }
        if g.r_min() < r_min0 - C0_TOL || g.r_max() > r_max0 + C0_TOL {
            series.c0_barrier_ok = false;
        }
        if t >= next_record - eps_t {
            series.records.push(make_record(t, &g, &fields, &sp, last_dt)?);
            while next_record <= t + eps_t {
                next_record += spec.record_every;
            }
        }
    }
    if series.last().t < t {
        series.records.push(make_record(t, &g, &fields, &sp, last_dt)?);
    }
    Ok((series, g))
}

/// Spherical-measure mean of `r`.
pub fn mean_radius(g: &RadialGraph) -> f64 {
    let total: f64 = g.grid.weights.iter().sum();
    g.grid.integrate_sphere(&g.r) / total
}

/// `2 (n - 1) / (n (lambda'(r) - lambda(r)))`.
pub fn alpha0(n: usize, r_inf: f64) -> f64 {
    let nf = n as f64;
    2.0 * (nf - 1.0) / (nf * (-r_inf).exp())
}
