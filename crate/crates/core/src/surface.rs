//! Star-shaped hypersurfaces as radial graphs `r(theta)` over the unit sphere,
//! and their pointwise geometry.
//!
//! Two discretizations are supported:
//!
//! * `Axisymmetric`: any `n >= 2`, `r` depends only on the polar angle.
//!   `N` cells with centres `theta_j = (j + 1/2) pi / N`.
//! * `Full2d`: `n = 2` only, an `N x 2N` latitude-longitude grid.
//!
//! Derivatives use fourth-order central differences. Ghost cells beyond the
//! poles come from the reflection `r(-theta, psi) = r(theta, psi + pi)`.
//! Sphere integrals use weights that integrate the cosine interpolant of the
//! integrand exactly against `sin^{n-1} theta`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeom::{sphere_area, warp, warp_deriv};

/// Smallest admissible number of polar cells.
pub const MIN_CELLS: usize = 16;
/// Discrete h-convexity slack used when validating initial data.
pub const CONVEXITY_TOL: f64 = 1e-8;

const DISCRIMINANT_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Axisymmetric,
    Full2d,
}

/// Grid geometry and quadrature weights; shared between all graphs on it.
#[derive(Debug)]
pub struct Grid {
    pub n: usize,
    pub mode: Mode,
    pub n_theta: usize,
    /// Longitudinal cells; 1 in axisymmetric mode.
    pub n_psi: usize,
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    sin_theta: Vec<f64>,
    cos_theta: Vec<f64>,
    cot_theta: Vec<f64>,
    /// Spherical measure weight per grid point, summing to `w_n`.
    pub weights: Vec<f64>,
}

impl Grid {
    /// Cached grid for `(n, mode, N)`.
    pub fn shared(n: usize, mode: Mode, n_theta: usize) -> Result<Arc<Grid>> {
        type Key = (usize, Mode, usize);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Grid>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (n, mode, n_theta);
        if let Some(g) = cache.lock().expect("grid cache poisoned").get(&key) {
            return Ok(Arc::clone(g));
        }
        let grid = Arc::new(Grid::new(n, mode, n_theta)?);
        cache
            .lock()
            .expect("grid cache poisoned")
            .entry(key)
            .or_insert_with(|| Arc::clone(&grid));
        Ok(grid)
    }

    pub fn new(n: usize, mode: Mode, n_theta: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension n = {n} must be at least 2")));
        }
        if mode == Mode::Full2d && n != 2 {
            return Err(Error::Domain(format!("full2d mode requires n = 2, got {n}")));
        }
        if n_theta < MIN_CELLS {
            return Err(Error::Resolution { min: MIN_CELLS, got: n_theta });
        }
        let n_psi = match mode {
            Mode::Axisymmetric => 1,
            Mode::Full2d => 2 * n_theta,
        };
        let h = PI / n_theta as f64;
        let theta: Vec<f64> = (0..n_theta).map(|j| (j as f64 + 0.5) * h).collect();
        let psi: Vec<f64> = (0..n_psi).map(|k| 2.0 * PI * k as f64 / n_psi as f64).collect();
        let sin_theta: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let cos_theta: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let cot_theta: Vec<f64> = theta.iter().map(|t| t.cos() / t.sin()).collect();
        let polar = polar_weights(n - 1, &theta);
        let weights = match mode {
            Mode::Axisymmetric => {
                let area = sphere_area(n - 1);
                polar.iter().map(|w| w * area).collect()
            }
            Mode::Full2d => {
                let dpsi = 2.0 * PI / n_psi as f64;
                polar
                    .iter()
                    .flat_map(|&w| std::iter::repeat_n(w * dpsi, n_psi))
                    .collect()
            }
        };
        Ok(Self { n, mode, n_theta, n_psi, theta, psi, sin_theta, cos_theta, cot_theta, weights })
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_psi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtheta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn dpsi(&self) -> f64 {
        2.0 * PI / self.n_psi as f64
    }

    /// Smallest physical grid spacing on the unit sphere.
    pub fn min_spacing(&self) -> f64 {
        match self.mode {
            Mode::Axisymmetric => self.dtheta(),
            Mode::Full2d => self.dtheta().min(self.sin_theta[0] * self.dpsi()),
        }
    }

    /// `(theta index, psi index)` of flat index `p`.
    pub fn split(&self, p: usize) -> (usize, usize) {
        (p / self.n_psi, p % self.n_psi)
    }

    /// Quadrature of pointwise values against the round measure of `S^n`.
    pub fn integrate_sphere(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }
}

/// Weights `w_j` with `sum_j w_j g(theta_j) = int_0^pi g sin^p` for every
/// even cosine polynomial `g` of degree `< N`.
fn polar_weights(p: usize, theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    // I_k = int_0^pi sin^p cos(k t) dt; zero for odd k.
    let mut moments = vec![0.0; n];
    let mut i0 = if p % 2 == 0 { PI } else { 2.0 };
    let mut q = if p % 2 == 0 { 0 } else { 1 };
    while q < p {
        q += 2;
        i0 *= (q - 1) as f64 / q as f64;
    }
    moments[0] = i0;
    let pf = p as f64;
    let mut k = 0;
    while k + 2 < n {
        let kf = k as f64;
        moments[k + 2] = moments[k] * (kf - pf) / (kf + pf + 2.0);
        k += 2;
    }
    theta
        .iter()
        .map(|&t| {
            let mut s = 0.5 * moments[0];
            for (k, mk) in moments.iter().enumerate().skip(2).step_by(2) {
                s += mk * (k as f64 * t).cos();
            }
            2.0 * s / n as f64
        })
        .collect()
}

/// A radial graph `r > 0` sampled on a grid.
#[derive(Debug, Clone)]
pub struct RadialGraph {
    pub grid: Arc<Grid>,
    /// Row-major in `(theta, psi)`.
    pub r: Vec<f64>,
}

impl RadialGraph {
    pub fn new(grid: Arc<Grid>, r: Vec<f64>) -> Result<Self> {
        if r.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} radial values, got {}",
                grid.len(),
                r.len()
            )));
        }
        if let Some(p) = r.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("radial function at grid point {p}")));
        }
        if let Some(p) = r.iter().position(|&x| x <= 0.0) {
            return Err(Error::Domain(format!("radial function must be positive, r = {} at grid point {p}", r[p])));
        }
        Ok(Self { grid, r })
    }

    /// Same grid, new values.
    pub fn with_values(&self, r: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), r)
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn mode(&self) -> Mode {
        self.grid.mode
    }

    pub fn r_min(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn r_max(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Pointwise geometric quantities of a radial graph.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub n: usize,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_p: Vec<f64>,
    /// `|D phi|^2 = |D r|^2 / lambda^2` on the round sphere.
    pub grad_sq: Vec<f64>,
    pub v: Vec<f64>,
    /// Support function `lambda / v`.
    pub u: Vec<f64>,
    /// Principal curvatures per point, ascending.
    pub kappa: Vec<Vec<f64>>,
    /// `lambda^n v` times the spherical quadrature weight.
    pub area_weight: Vec<f64>,
}

impl GeometryFields {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Shifted curvatures `k - 1` at point `p`.
    pub fn shifted(&self, p: usize) -> Vec<f64> {
        self.kappa[p].iter().map(|k| k - 1.0).collect()
    }
}

pub fn make_sphere(n: usize, mode: Mode, n_theta: usize, r0: f64) -> Result<RadialGraph> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Domain(format!("sphere radius {r0} must be positive")));
    }
    let grid = Grid::shared(n, mode, n_theta)?;
    let r = vec![r0; grid.len()];
    RadialGraph::new(grid, r)
}

/// `r0 + eps cos(j theta)` (axisymmetric), or
/// `r0 + eps (cos(j theta) + sin^j(theta) cos(j psi)) / 2` (full2d).
///
/// Any integer `j` gives a smooth function on the sphere, since
/// `cos(j theta)` is a polynomial in `cos theta`.
pub fn make_perturbed_sphere(
    n: usize,
    mode: Mode,
    n_theta: usize,
    r0: f64,
    eps: f64,
    j: u32,
) -> Result<RadialGraph> {
    let base = make_sphere(n, mode, n_theta, r0)?;
    let grid = Arc::clone(&base.grid);
    let jf = j as f64;
    let r = (0..grid.len())
        .map(|p| {
            let (it, ip) = grid.split(p);
            let t = grid.theta[it];
            match mode {
                Mode::Axisymmetric => r0 + eps * (jf * t).cos(),
                Mode::Full2d => {
                    let zonal = (jf * t).cos();
                    let sectoral = grid.sin_theta[it].powi(j as i32) * (jf * grid.psi[ip]).cos();
                    r0 + 0.5 * eps * (zonal + sectoral)
                }
            }
        })
        .collect();
    validated(base.with_values(r)?)
}

/// `r0 + eps sum_{l=1}^{modes} a_l cos(l theta)` with `a_l ~ U(-1, 1) / l^2`,
/// seeded. Axisymmetric only.
pub fn make_random_sphere(
    n: usize,
    n_theta: usize,
    r0: f64,
    eps: f64,
    modes: usize,
    seed: u64,
) -> Result<RadialGraph> {
    let base = make_sphere(n, Mode::Axisymmetric, n_theta, r0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (1..=modes)
        .map(|l| rng.gen_range(-1.0..1.0) / (l * l) as f64)
        .collect();
    let r = base
        .grid
        .theta
        .iter()
        .map(|&t| {
            r0 + eps
                * coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * ((i + 1) as f64 * t).cos())
                    .sum::<f64>()
        })
        .collect();
    validated(base.with_values(r)?)
}

/// Rejects graphs that are not h-convex within [`CONVEXITY_TOL`].
pub fn validated(g: RadialGraph) -> Result<RadialGraph> {
    let fields = geometry(&g)?;
    let min_shifted = min_shifted_curvature(&fields);
    if min_shifted < -CONVEXITY_TOL {
        return Err(Error::Convexity { min_shifted });
    }
    Ok(g)
}

#[inline]
fn d1(m2: f64, m1: f64, p1: f64, p2: f64, h: f64) -> f64 {
    (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)
}

#[inline]
fn d2(m2: f64, m1: f64, c: f64, p1: f64, p2: f64, h: f64) -> f64 {
    (16.0 * (m1 + p1 - 2.0 * c) - (m2 + p2 - 2.0 * c)) / (12.0 * h * h)
}

/// Polar derivatives `(r_theta, r_thetatheta)` of an axisymmetric profile.
pub fn polar_derivatives(r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = r.len();
    let h = PI / n as f64;
    let mut ext = Vec::with_capacity(n + 4);
    ext.push(r[1]);
    ext.push(r[0]);
    ext.extend_from_slice(r);
    ext.push(r[n - 1]);
    ext.push(r[n - 2]);
    let mut rt = vec![0.0; n];
    let mut rtt = vec![0.0; n];
    for j in 0..n {
        let (a, b, c, d, e) = (ext[j], ext[j + 1], ext[j + 2], ext[j + 3], ext[j + 4]);
        rt[j] = d1(a, b, d, e, h);
        rtt[j] = d2(a, b, c, d, e, h);
    }
    (rt, rtt)
}

struct Partials {
    t: Vec<f64>,
    tt: Vec<f64>,
    p: Vec<f64>,
    pp: Vec<f64>,
    tp: Vec<f64>,
}

fn full2d_partials(grid: &Grid, r: &[f64]) -> Partials {
    let (nt, np) = (grid.n_theta, grid.n_psi);
    let half = np / 2;
    let (ht, hp) = (grid.dtheta(), grid.dpsi());
    // value at theta row `i` (may be -2..nt+1), psi column `k`
    let at = |i: isize, k: usize| -> f64 {
        let k = k % np;
        if i < 0 {
            r[(-i - 1) as usize * np + (k + half) % np]
        } else if i >= nt as isize {
            let mirrored = 2 * nt as isize - 1 - i;
            r[mirrored as usize * np + (k + half) % np]
        } else {
            r[i as usize * np + k]
        }
    };
    let len = nt * np;
    let mut out = Partials {
        t: vec![0.0; len],
        tt: vec![0.0; len],
        p: vec![0.0; len],
        pp: vec![0.0; len],
        tp: vec![0.0; len],
    };
    for i in 0..nt {
        let ii = i as isize;
        for k in 0..np {
            let idx = i * np + k;
            let c = r[idx];
            let (a, b, d, e) = (at(ii - 2, k), at(ii - 1, k), at(ii + 1, k), at(ii + 2, k));
            out.t[idx] = d1(a, b, d, e, ht);
            out.tt[idx] = d2(a, b, c, d, e, ht);
            let (a, b, d, e) = (
                at(ii, k + np - 2),
                at(ii, k + np - 1),
                at(ii, k + 1),
                at(ii, k + 2),
            );
            out.p[idx] = d1(a, b, d, e, hp);
            out.pp[idx] = d2(a, b, c, d, e, hp);
        }
    }
    for i in 0..nt {
        for k in 0..np {
            let row = |kk: usize| out.t[i * np + kk % np];
            out.tp[i * np + k] = d1(
                row(k + np - 2),
                row(k + np - 1),
                row(k + 1),
                row(k + 2),
                hp,
            );
        }
    }
    out
}

/// Pointwise geometry of a radial graph.
pub fn geometry(g: &RadialGraph) -> Result<GeometryFields> {
    let grid = &g.grid;
    let n = grid.n;
    let len = grid.len();
    let r = g.r.clone();
    let lambda: Vec<f64> = r.iter().map(|&x| warp(x)).collect();
    let lambda_p: Vec<f64> = r.iter().map(|&x| warp_deriv(x)).collect();
    let mut grad_sq = vec![0.0; len];
    let mut kappa = Vec::with_capacity(len);

    match grid.mode {
        Mode::Axisymmetric => {
            let (rt, rtt) = polar_derivatives(&r);
            for j in 0..len {
                let (l, lp) = (lambda[j], lambda_p[j]);
                let phi1 = rt[j] / l;
                let phi2 = rtt[j] / l - lp * rt[j] * rt[j] / (l * l);
                let w2 = 1.0 + phi1 * phi1;
                let v = w2.sqrt();
                grad_sq[j] = phi1 * phi1;
                let meridian = (lp * w2 - phi2) / (l * v * w2);
                let rotational = (lp - grid.cot_theta[j] * phi1) / (l * v);
                let mut k = vec![rotational; n];
                k[0] = meridian;
                k.sort_by(|a, b| a.total_cmp(b));
                kappa.push(k);
            }
        }
        Mode::Full2d => {
            let d = full2d_partials(grid, &r);
            for p in 0..len {
                let (it, _) = grid.split(p);
                let (s, cot) = (grid.sin_theta[it], grid.cot_theta[it]);
                let (l, lp) = (lambda[p], lambda_p[p]);
                let (ft, fp) = (d.t[p] / l, d.p[p] / l);
                let sec = |a: f64, b: f64| lp * a * b / (l * l);
                let ftt = d.tt[p] / l - sec(d.t[p], d.t[p]);
                let ftp = d.tp[p] / l - sec(d.t[p], d.p[p]);
                let fpp = d.pp[p] / l - sec(d.p[p], d.p[p]);
                // covariant Hessian on the round S^2
                let h_tt = ftt;
                let h_tp = ftp - cot * fp;
                let h_pp = fpp + s * grid.cos_theta[it] * ft;
                let inv_pp = 1.0 / (s * s);
                let gsq = ft * ft + fp * fp * inv_pp;
                grad_sq[p] = gsq;
                let w2 = 1.0 + gsq;
                let v = w2.sqrt();
                // raised gradient
                let (up_t, up_p) = (ft, fp * inv_pp);
                // P^{jk} = e^{jk} - phi^j phi^k / v^2
                let p_tt = 1.0 - up_t * up_t / w2;
                let p_tp = -up_t * up_p / w2;
                let p_pp = inv_pp - up_p * up_p / w2;
                // A_i^j = sum_k P^{jk} Hess_{ik}
                let a_tt = p_tt * h_tt + p_tp * h_tp;
                let a_pp = p_tp * h_tp + p_pp * h_pp;
                let a_tp = p_tp * h_tt + p_pp * h_tp; // i = t, j = p
                let a_pt = p_tt * h_tp + p_tp * h_pp; // i = p, j = t
                let scale = -1.0 / (l * v);
                let diag = lp / (l * v);
                let m11 = scale * a_tt + diag;
                let m22 = scale * a_pp + diag;
                let m12 = scale * a_tp;
                let m21 = scale * a_pt;
                let tr = m11 + m22;
                let det = m11 * m22 - m12 * m21;
                let mut disc = 0.25 * tr * tr - det;
                let mag = (0.25 * tr * tr).max(det.abs()).max(1.0);
                if disc < 0.0 {
                    if disc >= -DISCRIMINANT_SLACK * mag {
                        disc = 0.0;
                    } else {
                        return Err(Error::NonFinite(format!(
                            "complex Weingarten eigenvalues at grid point {p}"
                        )));
                    }
                }
                let root = disc.sqrt();
                kappa.push(vec![0.5 * tr - root, 0.5 * tr + root]);
            }
        }
    }

    let mut v = vec![0.0; len];
    let mut u = vec![0.0; len];
    let mut area_weight = vec![0.0; len];
    for p in 0..len {
        v[p] = (1.0 + grad_sq[p]).sqrt();
        u[p] = lambda[p] / v[p];
        area_weight[p] = lambda[p].powi(n as i32) * v[p] * grid.weights[p];
    }
    if let Some(p) = (0..len).find(|&p| !u[p].is_finite() || kappa[p].iter().any(|k| !k.is_finite())) {
        return Err(Error::NonFinite(format!("geometry at grid point {p}")));
    }
    Ok(GeometryFields { n, r, lambda, lambda_p, grad_sq, v, u, kappa, area_weight })
}

/// `min_i min_p (k_i - 1)`.
pub fn min_shifted_curvature(fields: &GeometryFields) -> f64 {
    fields
        .kappa
        .iter()
        .map(|k| k[0] - 1.0)
        .fold(f64::INFINITY, f64::min)
}

/// `max_p |D phi|^2`.
pub fn max_gradient_sq(fields: &GeometryFields) -> f64 {
    fields.grad_sq.iter().copied().fold(0.0, f64::max)
}

/// Tab-separated snapshot: one row per grid point with
/// `theta [psi] r kappa_1..kappa_n u v`.
pub fn write_snapshot<W: Write>(g: &RadialGraph, fields: &GeometryFields, mut out: W) -> Result<()> {
    let grid = &g.grid;
    let mut header = String::from("theta");
    if grid.mode == Mode::Full2d {
        header.push_str("\tpsi");
    }
    header.push_str("\tr");
    for i in 1..=grid.n {
        let _ = write!(header, "\tkappa_{i}");
    }
    header.push_str("\tu\tv\n");
    out.write_all(header.as_bytes())?;
    for p in 0..grid.len() {
        let (it, ip) = grid.split(p);
        let mut line = format!("{:.16e}", grid.theta[it]);
        if grid.mode == Mode::Full2d {
            let _ = write!(line, "\t{:.16e}", grid.psi[ip]);
        }
        let _ = write!(line, "\t{:.16e}", g.r[p]);
        for k in &fields.kappa[p] {
            let _ = write!(line, "\t{k:.16e}");
        }
        let _ = writeln!(line, "\t{:.16e}\t{:.16e}", fields.u[p], fields.v[p]);
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}
