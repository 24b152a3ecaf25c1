//! Warped-product primitives of hyperbolic space and geodesic-ball profiles.
//!
//! Hyperbolic space is written as `dr^2 + sinh(r)^2 g_{S^n}`. Every profile
//! here is the value of some functional on the geodesic ball (or sphere) of
//! radius `r`, as a function of `r`:
//!
//! | profile | value on `B_r` |
//! |---|---|
//! | `f_k` | quermassintegral `W_k` |
//! | `f~_k` | shifted quermassintegral `W~_k` |
//! | `g_k` | `C(n,2k) (2k)! w_n sinh^{n-2k} r` |
//! | `h_k` | `w_n cosh^{k+1} r sinh^{n-k} r` |
//! | `h~_k` | `w_n (cosh r - sinh r)^{k+1} sinh^{n-k} r` |
//! | `g~_k` | `C(n,2k) (2k)! w_n sinh^{n+1-2k} r` |
//!
//! Only `f_0` and `f~_k` need quadrature. They are tabulated once per
//! dimension on a uniform radius lattice, and evaluated by adding a single
//! adaptive Gauss-Kronrod panel to the nearest lattice value below.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Warping function `sinh r`.
#[inline]
pub fn warp(r: f64) -> f64 {
    r.sinh()
}

/// Derivative of the warping function, `cosh r`.
#[inline]
pub fn warp_deriv(r: f64) -> f64 {
    r.cosh()
}

/// Potential `cosh r - 1` whose gradient is the conformal Killing field `sinh(r) d/dr`.
#[inline]
pub fn potential(r: f64) -> f64 {
    // cosh r - 1 = 2 sinh^2(r/2), no cancellation near 0
    let s = (0.5 * r).sinh();
    2.0 * s * s
}

/// Area of the unit n-sphere in R^{n+1}, `2 pi^{(n+1)/2} / Gamma((n+1)/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let a = 0.5 * (n as f64 + 1.0);
    (std::f64::consts::LN_2 + a * std::f64::consts::PI.ln() - ln_gamma(a)).exp()
}

/// Binomial coefficient as a float. Exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// `C(n,2k) (2k)!`, the normalisation of the k-th Gauss-Bonnet curvature.
pub fn gauss_bonnet_constant(n: usize, k: usize) -> f64 {
    binomial(n, 2 * k) * factorial(2 * k)
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature with a relative tolerance.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        if !val.is_finite() || err <= tol.max(val.abs() * 1e-15) || depth == 0 {
            return val;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth - 1) + recurse(f, m, b, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (estimate, _) = gk15(f, a, b);
    let tol = rel_tol * estimate.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, tol, 18)
}

/// The six families of geodesic-ball profiles, each carrying its index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// `f_k`
    Quermass(usize),
    /// `f~_k`
    ShiftedQuermass(usize),
    /// `g_k`
    GaussBonnet(usize),
    /// `h_k`
    Weighted(usize),
    /// `h~_k`
    ShiftedWeighted(usize),
    /// `g~_k`
    WeightedGaussBonnet(usize),
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Quermass(k) => write!(f, "f_{k}"),
            Profile::ShiftedQuermass(k) => write!(f, "ft_{k}"),
            Profile::GaussBonnet(k) => write!(f, "g_{k}"),
            Profile::Weighted(k) => write!(f, "h_{k}"),
            Profile::ShiftedWeighted(k) => write!(f, "ht_{k}"),
            Profile::WeightedGaussBonnet(k) => write!(f, "gt_{k}"),
        }
    }
}

const TABLE_STEP: f64 = 0.125;
const TABLE_LEN: usize = 129;
const QUAD_TOL: f64 = 1e-15;

/// Ball profiles for a fixed dimension `n`.
///
/// Immutable once built; share freely between threads.
#[derive(Debug)]
pub struct BallTables {
    n: usize,
    omega: f64,
    /// `cumulative[k][i] = int_0^{i*step} e^{-k s} sinh^{n-k}(s) ds`.
    /// Row 0 is the volume integrand, row k the shifted quermassintegral one.
    cumulative: Vec<Vec<f64>>,
}

impl BallTables {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension n = {n} must be at least 2")));
        }
        let omega = sphere_area(n);
        let cumulative = (0..=n)
            .map(|k| {
                let f = move |s: f64| shifted_integrand(n, k, s);
                let mut row = Vec::with_capacity(TABLE_LEN);
                let mut acc = 0.0;
                row.push(0.0);
                for i in 1..TABLE_LEN {
                    let a = (i - 1) as f64 * TABLE_STEP;
                    acc += integrate_adaptive(&f, a, a + TABLE_STEP, QUAD_TOL);
                    row.push(acc);
                }
                row
            })
            .collect();
        Ok(Self { n, omega, cumulative })
    }

    /// Process-wide cached tables for dimension `n`.
    pub fn shared(n: usize) -> Result<Arc<BallTables>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<BallTables>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = cache.lock().expect("ball table cache poisoned").get(&n) {
            return Ok(Arc::clone(t));
        }
        let tables = Arc::new(BallTables::new(n)?);
        cache
            .lock()
            .expect("ball table cache poisoned")
            .entry(n)
            .or_insert_with(|| Arc::clone(&tables));
        Ok(tables)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `w_n`, area of the unit n-sphere.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn check_radius(r: f64) -> Result<()> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius {r} must be positive and finite")));
        }
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k > self.n {
            return Err(Error::Domain(format!("index k = {k} exceeds n = {}", self.n)));
        }
        Ok(())
    }

    /// `int_0^r e^{-k s} sinh^{n-k} s ds`, from the table plus one panel.
    fn tabulated(&self, k: usize, r: f64) -> f64 {
        let n = self.n;
        let f = move |s: f64| shifted_integrand(n, k, s);
        let i = ((r / TABLE_STEP).floor() as usize).min(TABLE_LEN - 1);
        let base = i as f64 * TABLE_STEP;
        self.cumulative[k][i] + integrate_adaptive(&f, base, r, QUAD_TOL)
    }

    /// `int_0^r sinh^n s ds`, the radial volume density integrated out to `r`.
    pub fn radial_volume(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.tabulated(0, r)
    }

    /// Enclosed volume of `B_r`, `f_0(r) = w_n int_0^r sinh^n`.
    pub fn volume(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        Ok(self.omega * self.tabulated(0, r))
    }

    /// `int_{dB_r} E_k dmu = w_n cosh^k r sinh^{n-k} r`, which is also `f_k'(r)`.
    fn sphere_curvature_integral(&self, k: usize, r: f64) -> f64 {
        self.omega * warp_deriv(r).powi(k as i32) * warp(r).powi((self.n - k) as i32)
    }

    /// All of `f_0(r), ..., f_n(r)` by the quermassintegral recursion.
    pub fn quermass_all(&self, r: f64) -> Result<Vec<f64>> {
        Self::check_radius(r)?;
        let n = self.n;
        let mut w = vec![0.0; n + 1];
        w[0] = self.volume(r)?;
        w[1] = self.omega * warp(r).powi(n as i32) / n as f64;
        for k in 1..n {
            let kf = k as f64;
            let nk = (n - k) as f64;
            w[k + 1] = self.sphere_curvature_integral(k, r) / nk - kf / nk * w[k - 1];
        }
        Ok(w)
    }

    /// `f_k(r)`: the k-th quermassintegral of the geodesic ball of radius `r`.
    pub fn ball_quermass(&self, k: usize, r: f64) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.quermass_all(r)?[k])
    }

    /// `f~_k(r)`: shifted quermassintegral of `B_r`.
    ///
    /// Equal to the alternating binomial sum of the `f_i`, but evaluated as
    /// `w_n int_0^r e^{-k s} sinh^{n-k} s ds`, which avoids the cancellation
    /// the sum suffers at large `r` (all `f_i` grow like `e^{nr}` while
    /// `f~_k` grows like `e^{(n-2k)r}`).
    pub fn ball_quermass_shifted(&self, k: usize, r: f64) -> Result<f64> {
        self.check_index(k)?;
        Self::check_radius(r)?;
        Ok(self.omega * self.tabulated(k, r))
    }

    /// `f~_k(r)` from the alternating binomial sum of `f_0..f_k`.
    pub fn ball_quermass_shifted_by_sum(&self, k: usize, r: f64) -> Result<f64> {
        self.check_index(k)?;
        let f = self.quermass_all(r)?;
        Ok(alternating_sum(&f, k))
    }

    fn check_profile(&self, p: Profile) -> Result<()> {
        let n = self.n;
        match p {
            Profile::Quermass(k)
            | Profile::ShiftedQuermass(k)
            | Profile::Weighted(k)
            | Profile::ShiftedWeighted(k) => self.check_index(k),
            Profile::GaussBonnet(k) | Profile::WeightedGaussBonnet(k) => {
                if 2 * k > n {
                    Err(Error::Domain(format!("{p} needs 2k <= n = {n}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Value of a profile at `r > 0`.
    pub fn eval(&self, p: Profile, r: f64) -> Result<f64> {
        self.check_profile(p)?;
        Self::check_radius(r)?;
        Ok(self.eval_unchecked(p, r))
    }

    fn eval_unchecked(&self, p: Profile, r: f64) -> f64 {
        let n = self.n as i32;
        let w = self.omega;
        let (s, c) = (warp(r), warp_deriv(r));
        match p {
            Profile::Quermass(k) => self.quermass_all(r).map(|v| v[k]).unwrap_or(f64::NAN),
            Profile::ShiftedQuermass(k) => w * self.tabulated(k, r),
            Profile::GaussBonnet(k) => {
                gauss_bonnet_constant(self.n, k) * w * s.powi(n - 2 * k as i32)
            }
            Profile::Weighted(k) => w * c.powi(k as i32 + 1) * s.powi(n - k as i32),
            Profile::ShiftedWeighted(k) => {
                w * exp_sinh_pow(k as f64 + 1.0, n - k as i32, r)
            }
            Profile::WeightedGaussBonnet(k) => {
                gauss_bonnet_constant(self.n, k) * w * s.powi(n + 1 - 2 * k as i32)
            }
        }
    }

    /// Value at `r = 0`, the infimum of an increasing profile.
    fn value_at_zero(&self, p: Profile) -> f64 {
        let n = self.n;
        let w = self.omega;
        match p {
            Profile::Quermass(_) | Profile::ShiftedQuermass(_) => 0.0,
            Profile::GaussBonnet(k) => {
                if 2 * k == n {
                    gauss_bonnet_constant(n, k) * w
                } else {
                    0.0
                }
            }
            Profile::Weighted(k) | Profile::ShiftedWeighted(k) => {
                if k == n {
                    w
                } else {
                    0.0
                }
            }
            Profile::WeightedGaussBonnet(_) => 0.0,
        }
    }

    /// Analytic derivative of a profile in `r`.
    pub fn deriv(&self, p: Profile, r: f64) -> Result<f64> {
        self.check_profile(p)?;
        Self::check_radius(r)?;
        let n = self.n as i32;
        let w = self.omega;
        let (s, c) = (warp(r), warp_deriv(r));
        let pow = |x: f64, e: i32| if e < 0 { 0.0 } else { x.powi(e) };
        Ok(match p {
            Profile::Quermass(k) => self.sphere_curvature_integral(k, r),
            Profile::ShiftedQuermass(k) => w * exp_sinh_pow(k as f64, n - k as i32, r),
            Profile::GaussBonnet(k) => {
                let e = n - 2 * k as i32;
                gauss_bonnet_constant(self.n, k) * w * e as f64 * pow(s, e - 1) * c
            }
            Profile::Weighted(k) => {
                let (a, b) = (k as i32 + 1, n - k as i32);
                w * (a as f64 * pow(c, a - 1) * pow(s, b + 1) + b as f64 * pow(c, a + 1) * pow(s, b - 1))
            }
            Profile::ShiftedWeighted(k) => {
                let (a, b) = (k as f64 + 1.0, n - k as i32);
                w * (-a * r).exp() * (b as f64 * pow(s, b - 1) * c - a * pow(s, b))
            }
            Profile::WeightedGaussBonnet(k) => {
                let e = n + 1 - 2 * k as i32;
                gauss_bonnet_constant(self.n, k) * w * e as f64 * pow(s, e - 1) * c
            }
        })
    }

    /// Whether the profile is strictly increasing on `(0, inf)` for this `n`.
    pub fn is_strictly_increasing(&self, p: Profile) -> bool {
        let n = self.n;
        match p {
            Profile::Quermass(k) | Profile::ShiftedQuermass(k) | Profile::Weighted(k) => k <= n,
            Profile::GaussBonnet(k) => 2 * k < n,
            Profile::ShiftedWeighted(k) => 2 * k + 1 <= n,
            Profile::WeightedGaussBonnet(k) => 2 * k <= n,
        }
    }

    /// Solve `profile(r) = y` for `r`.
    ///
    /// Bracketing bisection seeds a Newton iteration on the analytic
    /// derivative; Newton steps leaving the bracket fall back to bisection.
    pub fn invert_monotone(&self, p: Profile, y: f64) -> Result<f64> {
        self.check_profile(p)?;
        if !self.is_strictly_increasing(p) {
            return Err(Error::NotMonotone(format!("{p} (n = {})", self.n)));
        }
        let lower = self.value_at_zero(p);
        let upper = self.supremum(p);
        if !(y > lower) || !(y < upper) {
            return Err(Error::Range { value: y, lower, upper });
        }

        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        while self.eval_unchecked(p, hi) < y {
            lo = hi;
            hi *= 2.0;
            if hi > 700.0 {
                return Err(Error::Range { value: y, lower, upper });
            }
        }

        // Coarse bisection to get inside Newton's basin.
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if self.eval_unchecked(p, mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut r = 0.5 * (lo + hi);
        for _ in 0..100 {
            let fr = self.eval_unchecked(p, r) - y;
            if fr == 0.0 {
                return Ok(r);
            }
            if fr < 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let d = self.deriv(p, r)?;
            let mut next = r - fr / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 4.0 * f64::EPSILON * r || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            r = next;
        }
        Ok(r)
    }

    /// `sup` of an increasing profile on `(0, inf)`.
    fn supremum(&self, p: Profile) -> f64 {
        match p {
            Profile::ShiftedWeighted(k) if 2 * k + 1 == self.n => {
                // e^{-(k+1) r} sinh^{k+1} r -> 2^{-(k+1)}
                self.omega * 0.5f64.powi(k as i32 + 1)
            }
            Profile::ShiftedQuermass(k) if 2 * k > self.n => {
                // integrand decays; the profile is bounded by the full integral
                self.omega * self.tabulated(k, (TABLE_LEN - 1) as f64 * TABLE_STEP)
                    + self.omega
                        * integrate_adaptive(
                            &|s: f64| shifted_integrand(self.n, k, s),
                            (TABLE_LEN - 1) as f64 * TABLE_STEP,
                            200.0,
                            QUAD_TOL,
                        )
            }
            _ => f64::INFINITY,
        }
    }
}

/// `e^{-k s} sinh^{n-k} s`; its integral from 0 is `f~_k / w_n`.
fn shifted_integrand(n: usize, k: usize, s: f64) -> f64 {
    exp_sinh_pow(k as f64, (n - k) as i32, s)
}

/// `e^{-a s} sinh^j s`, written as `2^{-j} e^{(j - a) s} (1 - e^{-2s})^j` so
/// that it neither overflows nor forms `inf * 0` at large `s`.
fn exp_sinh_pow(a: f64, j: i32, s: f64) -> f64 {
    0.5f64.powi(j) * ((j as f64 - a) * s).exp() * (-(-2.0 * s).exp_m1()).powi(j)
}

/// `sum_{i=0}^k (-1)^{k-i} C(k,i) values[i]`.
pub fn alternating_sum(values: &[f64], k: usize) -> f64 {
    (0..=k)
        .map(|i| {
            let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(k, i) * values[i]
        })
        .sum()
}
