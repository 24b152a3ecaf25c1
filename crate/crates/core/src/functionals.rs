//! Integral functionals of radial graphs.
//!
//! All surface integrals are quadratures against `d mu = lambda^n v d sigma`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypgeom::{alternating_sum, binomial, gauss_bonnet_constant, BallTables};
use crate::surface::{geometry, GeometryFields, RadialGraph};
use crate::symfun::elementary_all;

/// Quadrature of a pointwise integrand `f(p)` against `d mu`.
pub fn integrate<F: Fn(usize) -> f64>(fields: &GeometryFields, f: F) -> Result<f64> {
    let total: f64 = fields
        .area_weight
        .iter()
        .enumerate()
        .map(|(p, w)| w * f(p))
        .sum();
    if !total.is_finite() {
        return Err(Error::NonFinite("surface integral".into()));
    }
    Ok(total)
}

/// Enclosed volume `int_{S^n} int_0^{r} sinh^n`.
pub fn volume(g: &RadialGraph) -> Result<f64> {
    let tables = BallTables::shared(g.n())?;
    let inner: Vec<f64> = g.r.iter().map(|&r| tables.radial_volume(r)).collect();
    Ok(g.grid.integrate_sphere(&inner))
}

/// `W_0..W_n` from the volume, the area and `int E_k`.
pub fn quermass_from_integrals(n: usize, vol: f64, area: f64, int_e: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    w[0] = vol;
    w[1] = area / n as f64;
    for k in 1..n {
        w[k + 1] = (int_e[k] - k as f64 * w[k - 1]) / (n - k) as f64;
    }
    w
}

/// `W~_k = sum_i (-1)^{k-i} C(k,i) W_i` for every `k`.
pub fn shifted_from_quermass(w: &[f64]) -> Vec<f64> {
    (0..w.len()).map(|k| alternating_sum(w, k)).collect()
}

/// Everything measured on one surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub n: usize,
    pub area: f64,
    pub volume: f64,
    /// `W_0..W_n`.
    pub w: Vec<f64>,
    /// `W~_0..W~_n`.
    pub wt: Vec<f64>,
    /// `int E_k`, `k = 0..n`.
    pub int_e: Vec<f64>,
    /// `int lambda' E_k`.
    pub int_lp_e: Vec<f64>,
    /// `int u E_k`.
    pub int_u_e: Vec<f64>,
    /// `int (lambda' - u) E_k(k~)`.
    pub int_shift_lp_e: Vec<f64>,
    /// `int u E_k(k~)`.
    pub int_u_shift_e: Vec<f64>,
    /// `int L_k`, `k = 0..n/2`, unshifted expansion.
    pub int_lk: Vec<f64>,
    /// `int L_k` from the shifted expansion.
    pub int_lk_shifted: Vec<f64>,
    /// `int u L_k`.
    pub int_u_lk: Vec<f64>,
    /// `int L~_k`.
    pub int_ltk: Vec<f64>,
    /// `rho_m = int (lambda' E_m - u E_{m+1})`, `m = 0..n-1`.
    pub rho: Vec<f64>,
    /// `rho~_m = int ((lambda' - u) E_m(k~) - u E_{m+1}(k~))`.
    pub rho_t: Vec<f64>,
}

impl FunctionalReport {
    pub fn from_fields(g: &RadialGraph, fields: &GeometryFields) -> Result<Self> {
        let n = fields.n;
        let half = n / 2;
        let len = fields.len();
        let per_point: Vec<(Vec<f64>, Vec<f64>)> = (0..len)
            .map(|p| (elementary_all(&fields.kappa[p]), elementary_all(&fields.shifted(p))))
            .collect();
        let e = |p: usize, k: usize| per_point[p].0[k];
        let et = |p: usize, k: usize| per_point[p].1[k];
        let lk_unshifted = |p: usize, k: usize| {
            gauss_bonnet_constant(n, k)
                * (0..=k)
                    .map(|j| sign(j) * binomial(k, j) * e(p, 2 * k - 2 * j))
                    .sum::<f64>()
        };
        let lk_shifted = |p: usize, k: usize| {
            gauss_bonnet_constant(n, k)
                * (0..=k)
                    .map(|j| 2f64.powi(j as i32) * binomial(k, j) * et(p, 2 * k - j))
                    .sum::<f64>()
        };
        let ltk = |p: usize, k: usize| {
            (0..=k)
                .map(|i| sign(i) * binomial(k, i) * e(p, 2 * k - 2 * i))
                .sum::<f64>()
        };
        let lp = &fields.lambda_p;
        let u = &fields.u;

        let mut int_e = Vec::with_capacity(n + 1);
        let mut int_lp_e = Vec::with_capacity(n + 1);
        let mut int_u_e = Vec::with_capacity(n + 1);
        let mut int_shift_lp_e = Vec::with_capacity(n + 1);
        let mut int_u_shift_e = Vec::with_capacity(n + 1);
        for k in 0..=n {
            int_e.push(integrate(fields, |p| e(p, k))?);
            int_lp_e.push(integrate(fields, |p| lp[p] * e(p, k))?);
            int_u_e.push(integrate(fields, |p| u[p] * e(p, k))?);
            int_shift_lp_e.push(integrate(fields, |p| (lp[p] - u[p]) * et(p, k))?);
            int_u_shift_e.push(integrate(fields, |p| u[p] * et(p, k))?);
        }
        let mut int_lk = Vec::with_capacity(half + 1);
        let mut int_lk_shifted = Vec::with_capacity(half + 1);
        let mut int_u_lk = Vec::with_capacity(half + 1);
        let mut int_ltk = Vec::with_capacity(half + 1);
        for k in 0..=half {
            int_lk.push(integrate(fields, |p| lk_unshifted(p, k))?);
            int_lk_shifted.push(integrate(fields, |p| lk_shifted(p, k))?);
            int_u_lk.push(integrate(fields, |p| u[p] * lk_unshifted(p, k))?);
            int_ltk.push(integrate(fields, |p| ltk(p, k))?);
        }
        let mut rho = Vec::with_capacity(n);
        let mut rho_t = Vec::with_capacity(n);
        for m in 0..n {
            rho.push(integrate(fields, |p| lp[p] * e(p, m) - u[p] * e(p, m + 1))?);
            rho_t.push(integrate(fields, |p| {
                (lp[p] - u[p]) * et(p, m) - u[p] * et(p, m + 1)
            })?);
        }

        let area = int_e[0];
        let vol = volume(g)?;
        let w = quermass_from_integrals(n, vol, area, &int_e);
        let wt = shifted_from_quermass(&w);
        Ok(Self {
            n,
            area,
            volume: vol,
            w,
            wt,
            int_e,
            int_lp_e,
            int_u_e,
            int_shift_lp_e,
            int_u_shift_e,
            int_lk,
            int_lk_shifted,
            int_u_lk,
            int_ltk,
            rho,
            rho_t,
        })
    }

    /// Flat `(key, value)` list in a fixed order.
    pub fn flat(&self) -> Vec<(String, f64)> {
        let mut out = vec![("area".to_string(), self.area), ("volume".to_string(), self.volume)];
        let mut push = |prefix: &str, v: &[f64], offset: usize| {
            for (i, x) in v.iter().enumerate() {
                out.push((format!("{prefix}{}", i + offset), *x));
            }
        };
        push("W", &self.w, 0);
        push("Wt", &self.wt, 0);
        push("intE_", &self.int_e, 0);
        push("intLpE_", &self.int_lp_e, 0);
        push("intUE_", &self.int_u_e, 0);
        push("intShiftLpE_", &self.int_shift_lp_e, 0);
        push("intUShiftE_", &self.int_u_shift_e, 0);
        push("intLk_", &self.int_lk, 0);
        push("intULk_", &self.int_u_lk, 0);
        push("intLtk_", &self.int_ltk, 0);
        push("rho_", &self.rho, 0);
        push("rhot_", &self.rho_t, 0);
        out
    }

    /// Value by flat key, e.g. `"W2"` or `"intLpE_1"`.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.flat().into_iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

fn sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Geometry and functionals in one pass.
pub fn evaluate(g: &RadialGraph) -> Result<(GeometryFields, FunctionalReport)> {
    let fields = geometry(g)?;
    let report = FunctionalReport::from_fields(g, &fields)?;
    Ok((fields, report))
}

/// `(W_0..W_n, W~_0..W~_n)`.
pub fn quermassintegrals(g: &RadialGraph) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, r) = evaluate(g)?;
    Ok((r.w, r.wt))
}

/// `(rho_0..rho_{n-1}, rho~_0..rho~_{n-1})`.
pub fn minkowski_residuals(g: &RadialGraph) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, r) = evaluate(g)?;
    Ok((r.rho, r.rho_t))
}

/// Weighted curvature integrals of a single index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureIntegrals {
    pub e: f64,
    pub lp_e: f64,
    pub u_e: f64,
    pub shift_lp_e: f64,
    pub u_shift_e: f64,
    /// Present when `2k <= n`.
    pub lk: Option<f64>,
    pub u_lk: Option<f64>,
}

pub fn curvature_integrals(report: &FunctionalReport, k: usize) -> Result<CurvatureIntegrals> {
    if k > report.n {
        return Err(Error::Domain(format!("curvature index k = {k} exceeds n = {}", report.n)));
    }
    Ok(CurvatureIntegrals {
        e: report.int_e[k],
        lp_e: report.int_lp_e[k],
        u_e: report.int_u_e[k],
        shift_lp_e: report.int_shift_lp_e[k],
        u_shift_e: report.int_u_shift_e[k],
        lk: report.int_lk.get(k).copied(),
        u_lk: report.int_u_lk.get(k).copied(),
    })
}
