//! Verdicts: geometric inequalities on a surface, monotonicity and decay
//! along a flow, and an algebraic identity battery.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::TimeSeries;
use crate::functionals::FunctionalReport;
use crate::hypgeom::{gauss_bonnet_constant, BallTables, Profile};
use crate::surface::{GeometryFields, CONVEXITY_TOL};
use crate::symfun::{
    elementary_all, first_cone_failure, gauss_bonnet_shifted, gauss_bonnet_unshifted, gbw_pair,
    in_cone, maclaurin_gap, newton_tensor_diag, quotient_with_derivative,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Equality,
    Violated,
    HypothesesUnmet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eq_tol: f64,
    pub viol_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eq_tol: 1e-6, viol_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRecord {
    pub id: String,
    /// Index assignment, e.g. `"k=2,l=1"`.
    pub indices: String,
    pub hypotheses_ok: bool,
    pub reasons: Vec<String>,
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
    pub verdict: Verdict,
}

/// Classify a gap. Equality takes precedence over violation.
pub fn classify(hypotheses_ok: bool, relative_gap: f64, tol: &Tolerances) -> Verdict {
    if !hypotheses_ok {
        Verdict::HypothesesUnmet
    } else if relative_gap.abs() <= tol.eq_tol {
        Verdict::Equality
    } else if relative_gap < -tol.viol_tol {
        Verdict::Violated
    } else {
        Verdict::Holds
    }
}

/// Surface-wide facts the hypotheses are checked against.
struct Hypotheses {
    h_convex: bool,
    min_shifted: f64,
    /// Largest `m` with shifted curvatures in `Gamma_m^+` everywhere.
    shifted_cone: usize,
    mean_convex: bool,
}

impl Hypotheses {
    fn new(fields: &GeometryFields) -> Self {
        let n = fields.n;
        let min_shifted = fields
            .kappa
            .iter()
            .map(|k| k[0] - 1.0)
            .fold(f64::INFINITY, f64::min);
        let shifted_cone = (0..fields.len())
            .map(|p| {
                first_cone_failure(&fields.shifted(p), n)
                    .map(|(i, _)| i - 1)
                    .unwrap_or(n)
            })
            .min()
            .unwrap_or(0);
        let mean_convex = fields.kappa.iter().all(|k| in_cone(k, 1));
        Self { h_convex: min_shifted >= -CONVEXITY_TOL, min_shifted, shifted_cone, mean_convex }
    }

    fn h_convex_reason(&self) -> Option<String> {
        (!self.h_convex).then(|| format!("not h-convex: min shifted curvature {:.3e}", self.min_shifted))
    }

    fn cone_reason(&self, m: usize) -> Option<String> {
        (self.shifted_cone < m)
            .then(|| format!("shifted curvatures not in Gamma_{m}^+ (largest cone {})", self.shifted_cone))
    }
}

struct Builder<'a> {
    tables: &'a BallTables,
    tol: Tolerances,
    out: Vec<InequalityRecord>,
}

impl Builder<'_> {
    /// Push one record. `rhs` is only evaluated when every hypothesis holds.
    fn push<F>(&mut self, id: &str, indices: String, reasons: Vec<String>, lhs: f64, rhs: F)
    where
        F: FnOnce(&BallTables) -> Result<f64>,
    {
        let mut reasons = reasons;
        let mut rhs_value = f64::NAN;
        if reasons.is_empty() {
            match rhs(self.tables) {
                Ok(v) => rhs_value = v,
                Err(e) => reasons.push(format!("right-hand side undefined: {e}")),
            }
        }
        let ok = reasons.is_empty();
        let gap = if ok { (lhs - rhs_value) / rhs_value.abs().max(1.0) } else { f64::NAN };
        self.out.push(InequalityRecord {
            id: id.to_string(),
            indices,
            hypotheses_ok: ok,
            reasons,
            lhs,
            rhs: rhs_value,
            relative_gap: gap,
            verdict: classify(ok, gap, &self.tol),
        });
    }
}

fn reasons(items: impl IntoIterator<Item = Option<String>>) -> Vec<String> {
    items.into_iter().flatten().collect()
}

/// `outer(inner^{-1}(y))`.
fn compose(t: &BallTables, outer: Profile, inner: Profile, y: f64) -> Result<f64> {
    let r = t.invert_monotone(inner, y)?;
    t.eval(outer, r)
}

/// Evaluate every registered inequality on one surface.
pub fn inequality_suite(
    fields: &GeometryFields,
    report: &FunctionalReport,
    tol: Tolerances,
) -> Result<Vec<InequalityRecord>> {
    let n = fields.n;
    let tables = BallTables::shared(n)?;
    let hyp = Hypotheses::new(fields);
    let mut b = Builder { tables: &tables, tol, out: Vec::new() };
    let rep = report;

    // AF: W_k >= f_k o f_l^{-1}(W_l)
    for k in 1..=n {
        for l in 0..k {
            b.push("AF", format!("k={k},l={l}"), reasons([hyp.h_convex_reason()]), rep.w[k], |t| {
                compose(t, Profile::Quermass(k), Profile::Quermass(l), rep.w[l])
            });
        }
    }

    // GWW: int L_k >= g_k o f_m^{-1}(W_m), 0 <= m <= 2k+1 <= n
    for k in 0..=n / 2 {
        for m in 0..=(2 * k + 1).min(n) {
            let range = (2 * k + 1 > n).then(|| format!("needs 2k+1 <= n, have 2k+1 = {}", 2 * k + 1));
            b.push(
                "GWW",
                format!("k={k},m={m}"),
                reasons([range, hyp.h_convex_reason()]),
                rep.int_lk[k],
                |t| compose(t, Profile::GaussBonnet(k), Profile::Quermass(m), rep.w[m]),
            );
        }
    }

    // WAF: int lambda' E_k >= h_k o f_m^{-1}(W_m)
    for k in 1..=n {
        for m in 0..=k {
            b.push("WAF", format!("k={k},m={m}"), reasons([hyp.h_convex_reason()]), rep.int_lp_e[k], |t| {
                compose(t, Profile::Weighted(k), Profile::Quermass(m), rep.w[m])
            });
        }
    }

    // GWW-CONJ: area form of WAF with m = 1
    for k in 1..=n {
        b.push("GWW-CONJ", format!("k={k}"), reasons([hyp.h_convex_reason()]), rep.int_lp_e[k], |t| {
            compose(t, Profile::Weighted(k), Profile::Quermass(1), rep.area / n as f64)
        });
    }

    // BHW: int (lambda' E_1 - u) >= w_n (|M| / w_n)^{(n-1)/n}
    let mean = (!hyp.mean_convex).then(|| "not strictly mean convex".to_string());
    b.push("BHW", String::new(), reasons([mean]), rep.int_lp_e[1] - rep.int_u_e[0], |t| {
        let r = t.invert_monotone(Profile::Quermass(1), rep.area / n as f64)?;
        Ok(t.omega() * r.sinh().powi(n as i32 - 1))
    });

    // SAF: W~_k >= f~_k o f~_l^{-1}(W~_l)
    for k in 1..=n {
        for l in 0..k {
            b.push(
                "SAF",
                format!("k={k},l={l}"),
                reasons([hyp.h_convex_reason(), hyp.cone_reason(k)]),
                rep.wt[k],
                |t| compose(t, Profile::ShiftedQuermass(k), Profile::ShiftedQuermass(l), rep.wt[l]),
            );
        }
    }

    // SWAF-k, SWAF-k1
    for k in 1..=n {
        b.push(
            "SWAF-k",
            format!("k={k}"),
            reasons([hyp.h_convex_reason(), hyp.cone_reason(k)]),
            rep.int_shift_lp_e[k],
            |t| compose(t, Profile::ShiftedWeighted(k), Profile::ShiftedQuermass(k), rep.wt[k]),
        );
    }
    for k in 1..n {
        b.push(
            "SWAF-k1",
            format!("k={k}"),
            reasons([hyp.h_convex_reason(), hyp.cone_reason(k + 1)]),
            rep.int_shift_lp_e[k],
            |t| compose(t, Profile::ShiftedWeighted(k), Profile::ShiftedQuermass(k + 1), rep.wt[k + 1]),
        );
    }

    // SWAF-COR: 1 <= k <= (n-1)/2
    for k in 1..=((n - 1) / 2).max(1) {
        let range = (2 * k + 1 > n).then(|| format!("needs k <= (n-1)/2, have k = {k}"));
        for (variant, top, cone) in [("a", k, k), ("b", k + 1, k + 1)] {
            for l in 0..=top.min(n) {
                b.push(
                    &format!("SWAF-COR-{variant}"),
                    format!("k={k},l={l}"),
                    reasons([range.clone(), hyp.h_convex_reason(), hyp.cone_reason(cone)]),
                    rep.int_shift_lp_e[k],
                    |t| compose(t, Profile::ShiftedWeighted(k), Profile::ShiftedQuermass(l), rep.wt[l]),
                );
            }
        }
    }

    // ULK: 2 <= k <= (n-1)/4, shifted curvatures in Gamma_{2k-1}^+
    for k in 2..=((n + 1) / 4).max(2) {
        let range = (4 * k > n - 1).then(|| {
            if 4 * k <= n + 1 {
                format!("needs k <= (n-1)/4, have k = {k}; k <= (n+1)/4 would admit it")
            } else {
                format!("needs k <= (n-1)/4, have k = {k}")
            }
        });
        let lhs = rep.int_u_lk.get(k).copied().unwrap_or(f64::NAN);
        let cone = hyp.cone_reason((2 * k - 1).min(n));
        for l in 0..k {
            b.push(
                "ULK",
                format!("k={k},l={l}"),
                reasons([range.clone(), hyp.h_convex_reason(), cone.clone()]),
                lhs,
                |t| compose(t, Profile::WeightedGaussBonnet(k), Profile::ShiftedQuermass(l), rep.wt[l]),
            );
        }
        b.push(
            "ULK-area",
            format!("k={k}"),
            reasons([range, hyp.h_convex_reason(), cone]),
            lhs,
            |t| compose(t, Profile::WeightedGaussBonnet(k), Profile::Quermass(1), rep.area / n as f64),
        );
    }

    Ok(b.out)
}

/// Closed-form area bound `C(n,2k)(2k)! w_n (|M|/w_n)^{(n+1-2k)/n}`.
pub fn ulk_area_bound(n: usize, k: usize, area: f64) -> f64 {
    let omega = crate::hypgeom::sphere_area(n);
    gauss_bonnet_constant(n, k) * omega * (area / omega).powf((n + 1 - 2 * k) as f64 / n as f64)
}

/// Closed-form weighted area bound
/// `w_n ((|M|/w_n)^{2(n+1)/(n(k+1))} + (|M|/w_n)^{2(n-k)/(n(k+1))})^{(k+1)/2}`.
pub fn weighted_area_bound(n: usize, k: usize, area: f64) -> f64 {
    let omega = crate::hypgeom::sphere_area(n);
    let a = area / omega;
    let (nf, kf) = (n as f64, k as f64);
    let p1 = 2.0 * (nf + 1.0) / (nf * (kf + 1.0));
    let p2 = 2.0 * (nf - kf) / (nf * (kf + 1.0));
    omega * (a.powf(p1) + a.powf(p2)).powf((kf + 1.0) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nonincreasing,
    Nondecreasing,
}

/// Largest move against `direction` between consecutive values, each
/// normalized by the larger magnitude of the pair.
pub fn monotonicity_violation(values: &[f64], direction: Direction) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "monotonicity needs at least 3 records, got {}",
            values.len()
        )));
    }
    let worst = values
        .windows(2)
        .map(|w| {
            let step = match direction {
                Direction::Nonincreasing => w[1] - w[0],
                Direction::Nondecreasing => w[0] - w[1],
            };
            let scale = w[0].abs().max(w[1].abs()).max(f64::MIN_POSITIVE);
            (step / scale).max(0.0)
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Monotonicity verdict for a named column of a series.
pub fn monotonicity_verdict(series: &TimeSeries, key: &str, direction: Direction) -> Result<f64> {
    let col = series
        .column(key)
        .ok_or_else(|| Error::Domain(format!("unknown series key {key}")))?;
    monotonicity_violation(&col, direction)
}

/// Floor below which gradient samples are treated as round-off.
pub const DECAY_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares fit of `ln y = c - alpha t` over the final half of the
/// samples with `y > 1e-24`.
pub fn decay_fit_samples(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > DECAY_FLOOR && v.is_finite())
        .map(|(&a, &b)| (a, b.ln()))
        .collect();
    let tail = &usable[usable.len() / 2..];
    if tail.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 10 usable records in the final half, got {}",
            tail.len()
        )));
    }
    let m = tail.len() as f64;
    let tm = tail.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = tail.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = tail.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = tail.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("decay fit needs distinct times".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(DecayFit { alpha: -slope, r_squared, samples: tail.len() })
}

/// Decay of `max |D phi|^2` along a series.
pub fn decay_fit(series: &TimeSeries) -> Result<DecayFit> {
    let y: Vec<f64> = series.records.iter().map(|r| r.max_grad_sq).collect();
    decay_fit_samples(&series.times(), &y)
}

/// Maximum normalized violation per identity family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<(String, f64)>,
}

impl BatteryReport {
    pub fn max_violation(&self) -> f64 {
        self.checks.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

fn below(value: f64, bound: f64, scale: f64) -> f64 {
    ((value - bound) / scale.abs().max(1.0)).max(0.0)
}

/// Seeded random check of the symmetric-function identities and inequalities.
pub fn identity_battery(n: usize, samples: usize, seed: u64) -> Result<BatteryReport> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = [
        "newton_contraction",
        "newton_trace",
        "newton_square",
        "homogeneity",
        "maclaurin",
        "quotient_bounds",
        "gbw_positivity",
        "gauss_bonnet_expansions",
    ];
    let mut worst = [0.0f64; 8];
    let mut bump = |i: usize, v: f64| worst[i] = worst[i].max(if v.is_nan() { f64::INFINITY } else { v });

    for _ in 0..samples {
        // unrestricted tuples for the polynomial identities
        let mixed: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let e = elementary_all(&mixed);
        let e_at = |m: usize| if m <= n { e[m] } else { 0.0 };
        let sq: Vec<f64> = mixed.iter().map(|x| x * x).collect();
        for m in 0..=n {
            let d = newton_tensor_diag(&mixed, m);
            let contraction: f64 = d.iter().zip(&mixed).map(|(a, b)| a * b).sum();
            bump(0, rel(contraction, m as f64 * e[m]));
            if m >= 1 {
                bump(1, rel(d.iter().sum(), m as f64 * e[m - 1]));
            }
            let square: f64 = d.iter().zip(&sq).map(|(a, b)| a * b).sum();
            bump(2, rel(square, n as f64 * e[1] * e[m] - (n - m) as f64 * e_at(m + 1)));
        }
        let c = rng.gen_range(0.2..2.0);
        let scaled: Vec<f64> = mixed.iter().map(|x| c * x).collect();
        let es = elementary_all(&scaled);
        for m in 0..=n {
            bump(3, rel(es[m], c.powi(m as i32) * e[m]));
        }
        let shifted: Vec<f64> = mixed.iter().map(|x| x - 1.0).collect();
        for k in 0..=n / 2 {
            bump(7, rel(gauss_bonnet_unshifted(&mixed, k)?, gauss_bonnet_shifted(&shifted, k)?));
        }

        // Garding-cone samples
        let cone: Vec<f64> = loop {
            let cand: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..5.0)).collect();
            if in_cone(&cand, n) {
                break cand;
            }
        };
        let ec = elementary_all(&cone);
        for m in 1..=n {
            for k in 1..=m {
                let gap = maclaurin_gap(&cone, k, m)?;
                bump(4, (-gap / (ec[k] * ec[m]).abs().max(1.0)).max(0.0));
            }
            let (f, grad) = quotient_with_derivative(&cone, m)?;
            let trace: f64 = grad.iter().sum();
            let sq_c: f64 = grad.iter().zip(&cone).map(|(a, b)| a * b * b).sum();
            bump(5, below(1.0, trace, 1.0).max(below(trace, m as f64, m as f64)));
            bump(
                5,
                below(f * f, sq_c, f * f).max(below(sq_c, (n - m + 1) as f64 * f * f, f * f)),
            );
        }

        // tuples with every entry above 1
        let big: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..4.0)).collect();
        let eb = elementary_all(&big);
        for k in 0..=(n - 1) / 2 {
            let (l, nn) = gbw_pair(&big, k);
            let combo = eb[2 * k + 1] * l - eb[2 * k] * nn;
            let scale = (eb[2 * k + 1] * l).abs().max((eb[2 * k] * nn).abs()).max(1.0);
            bump(6, (-combo / scale).max(0.0));
            if k >= 1 {
                bump(6, if l > 0.0 && nn > 0.0 { 0.0 } else { 1.0 });
            }
        }
    }
    Ok(BatteryReport {
        n,
        samples,
        seed,
        checks: names.iter().map(|s| s.to_string()).zip(worst).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::evaluate;
    use crate::surface::{make_sphere, Mode};

    #[test]
    fn classify_order() {
        let tol = Tolerances::default();
        assert_eq!(classify(false, 1.0, &tol), Verdict::HypothesesUnmet);
        assert_eq!(classify(true, 5e-7, &tol), Verdict::Equality);
        assert_eq!(classify(true, -5e-7, &tol), Verdict::Equality);
        assert_eq!(classify(true, -1e-5, &tol), Verdict::Violated);
        assert_eq!(classify(true, 1e-3, &tol), Verdict::Holds);
    }

    #[test]
    fn monotonicity_examples() {
        assert_eq!(monotonicity_violation(&[2.0; 5], Direction::Nonincreasing).unwrap(), 0.0);
        assert_eq!(monotonicity_violation(&[5.0, 4.0, 3.0, 1.0], Direction::Nonincreasing).unwrap(), 0.0);
        let v = monotonicity_violation(&[5.0, 4.0, 4.4, 1.0], Direction::Nonincreasing).unwrap();
        assert!((v - 0.4 / 4.4).abs() < 1e-15);
        assert!(monotonicity_violation(&[1.0, 2.0], Direction::Nondecreasing).is_err());
    }

    #[test]
    fn decay_fit_exact_and_noisy() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = decay_fit_samples(&t, &y).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-6);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noisy: Vec<f64> = y.iter().map(|v| v * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))).collect();
        let fit = decay_fit_samples(&t, &noisy).unwrap();
        assert!((fit.alpha - 3.0).abs() < 0.15);

        assert!(matches!(decay_fit_samples(&t[..10], &y[..10]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn sphere_suite_is_equality() {
        let g = make_sphere(2, Mode::Axisymmetric, 64, 1.0).unwrap();
        let (f, rep) = evaluate(&g).unwrap();
        let recs = inequality_suite(&f, &rep, Tolerances::default()).unwrap();
        assert!(!recs.is_empty());
        for r in &recs {
            if r.hypotheses_ok {
                assert_eq!(r.verdict, Verdict::Equality, "{} {}: gap {}", r.id, r.indices, r.relative_gap);
            }
        }
        assert!(recs.iter().any(|r| r.id == "BHW" && r.verdict == Verdict::Equality));
    }

    #[test]
    fn ulk_unmet_for_n8() {
        let g = make_sphere(8, Mode::Axisymmetric, 32, 1.0).unwrap();
        let (f, rep) = evaluate(&g).unwrap();
        let recs = inequality_suite(&f, &rep, Tolerances::default()).unwrap();
        let ulk: Vec<_> = recs.iter().filter(|r| r.id.starts_with("ULK")).collect();
        assert!(!ulk.is_empty());
        assert!(ulk.iter().all(|r| r.verdict == Verdict::HypothesesUnmet));
        // (n+1)/4 = 2 admits k = 2 in the proof, flagged in the reason
        assert!(ulk[0].reasons[0].contains("(n+1)/4"));
    }

    #[test]
    fn area_bounds_match_inversion() {
        let t = BallTables::shared(5).unwrap();
        for area in [0.5, 3.0, 40.0] {
            let r = t.invert_monotone(Profile::Quermass(1), area / 5.0).unwrap();
            for k in 1..=5 {
                let via = t.eval(Profile::Weighted(k), r).unwrap();
                let closed = weighted_area_bound(5, k, area);
                assert!((via - closed).abs() <= 1e-10 * closed);
            }
            let via = t.eval(Profile::WeightedGaussBonnet(2), r).unwrap();
            assert!((via - ulk_area_bound(5, 2, area)).abs() <= 1e-10 * via);
        }
    }

    #[test]
    fn battery_small() {
        let rep = identity_battery(4, 50, 1).unwrap();
        assert!(rep.passes(1e-11), "{:?}", rep.checks);
    }
}
