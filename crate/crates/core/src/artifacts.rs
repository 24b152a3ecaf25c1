//! Run pipeline and serialized outputs: series CSV and summary JSON.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::config::RunConfig;
use crate::flow::{alpha0, mean_radius, run, Family, Status, TimeSeries};
use crate::functionals::evaluate;
use crate::hypgeom::{BallTables, Profile};
use crate::surface::RadialGraph;
use crate::verify::{
    decay_fit, inequality_suite, monotonicity_verdict, Direction, InequalityRecord, Verdict,
};
use crate::{Error, Result};

/// Relative drift allowed in the conserved quermassintegral.
pub const DRIFT_TOL: f64 = 1e-6;
/// Per-record slack for monotone functionals.
pub const MONOTONE_SLACK: f64 = 1e-9;

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// JSON formatter writing every float with 17 significant digits.
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with 17-significant-digit floats; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

/// Keys of the series CSV, in column order.
pub fn series_columns(series: &TimeSeries) -> Vec<String> {
    let n = series.n;
    let n_lk = series.initial().report.int_lk.len();
    let mut cols = vec!["t".to_string(), "area".to_string()];
    cols.extend((0..=n).map(|k| format!("W{k}")));
    cols.extend((0..=n).map(|k| format!("Wt{k}")));
    cols.extend((0..n_lk).map(|k| format!("intLk_{k}")));
    cols.extend(["min_shift_curv", "max_grad_sq", "r_min", "r_max", "dt"].map(String::from));
    cols
}

pub fn write_series_csv<W: Write>(series: &TimeSeries, mut out: W) -> Result<()> {
    let cols = series_columns(series);
    writeln!(out, "{}", cols.join(","))?;
    for rec in &series.records {
        let row: Vec<String> = cols
            .iter()
            .map(|c| {
                let v = crate::flow::record_value(rec, c).expect("series column exists");
                format!("{v:.16e}")
            })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: RunConfig,
    pub status: Status,
    pub failure: Option<String>,
    pub steps: usize,
    pub rejections: usize,
    pub records: usize,
    pub t_final: f64,
    pub c0_barrier_ok: bool,
    pub dt_floor_hit: bool,
    pub final_radius: f64,
    pub final_r_min: f64,
    pub final_r_max: f64,
    /// Ball radius with the same conserved quantity as the initial surface.
    pub predicted_radius: Option<f64>,
    pub conserved_key: String,
    pub conserved_drift: f64,
    pub monotone_key: String,
    pub monotone_violation: Option<f64>,
    pub alpha0: Option<f64>,
    pub alpha_fit: Option<f64>,
    pub r_squared: Option<f64>,
    pub violated_inequalities: usize,
    pub passed: bool,
    pub inequalities: Vec<InequalityRecord>,
}

pub struct RunOutput {
    pub series: TimeSeries,
    pub final_graph: RadialGraph,
    pub summary: Summary,
}

fn keys(family: Family, m: usize) -> (String, String) {
    match family {
        Family::Classical => (format!("W{m}"), format!("W{}", m + 1)),
        Family::Shifted => (format!("Wt{m}"), format!("Wt{}", m + 1)),
    }
}

/// Run the flow described by `cfg` and evaluate its verdicts.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let g0 = cfg.initial_graph()?;
    let spec = cfg.flow.spec();
    let (series, g) = run(&g0, &spec)?;
    let n = cfg.n;
    let m = spec.m;
    let tables = BallTables::shared(n)?;

    let (conserved_key, monotone_key) = keys(spec.family, m);
    let col = |key: &str| series.column(key).expect("functional key exists");
    let conserved = col(&conserved_key);
    let c0 = conserved[0];
    let conserved_drift = conserved
        .iter()
        .map(|v| (v - c0).abs() / c0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let monotone_violation = if m < n {
        monotonicity_verdict(&series, &monotone_key, Direction::Nonincreasing).ok()
    } else {
        None
    };

    let profile = match spec.family {
        Family::Classical => Profile::Quermass(m),
        Family::Shifted => Profile::ShiftedQuermass(m),
    };
    let predicted_radius = tables.invert_monotone(profile, c0).ok();
    let fit = if series.status == Status::Converged { decay_fit(&series).ok() } else { None };
    let a0 = match spec.family {
        Family::Shifted => predicted_radius.map(|r| alpha0(n, r)),
        Family::Classical => None,
    };

    let (fields, report) = evaluate(&g)?;
    let inequalities = inequality_suite(&fields, &report, cfg.tolerances)?;
    let violated = inequalities.iter().filter(|r| r.verdict == Verdict::Violated).count();

    let last = series.last();
    let passed = violated == 0
        && conserved_drift <= DRIFT_TOL
        && monotone_violation.is_none_or(|v| v <= MONOTONE_SLACK)
        && series.c0_barrier_ok
        && !matches!(series.status, Status::Blowup | Status::ConvexityLost);

    let summary = Summary {
        config: cfg.clone(),
        status: series.status,
        failure: series.failure.clone(),
        steps: series.steps,
        rejections: series.rejections,
        records: series.records.len(),
        t_final: last.t,
        c0_barrier_ok: series.c0_barrier_ok,
        dt_floor_hit: series.dt_floor_hit,
        final_radius: mean_radius(&g),
        final_r_min: last.r_min,
        final_r_max: last.r_max,
        predicted_radius,
        conserved_key,
        conserved_drift,
        monotone_key,
        monotone_violation,
        alpha0: a0,
        alpha_fit: fit.map(|f| f.alpha),
        r_squared: fit.map(|f| f.r_squared),
        violated_inequalities: violated,
        passed,
        inequalities,
    };
    Ok(RunOutput { series, final_graph: g, summary })
}

/// Write `series.csv` and `summary.json` into the configured output directory.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(&cfg.out_dir)?;
    let csv_path = cfg.out_dir.join(SERIES_FILE);
    let json_path = cfg.out_dir.join(SUMMARY_FILE);
    let mut csv = Vec::new();
    write_series_csv(&out.series, &mut csv)?;
    fs::write(&csv_path, csv)?;
    let mut json = to_json(&out.summary)?;
    json.push('\n');
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}
