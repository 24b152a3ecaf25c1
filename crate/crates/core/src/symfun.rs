//! Normalized elementary symmetric functions and the curvature polynomials
//! built from them.
//!
//! `E_m(k) = sigma_m(k) / C(n, m)`, with `E_0 = 1` and `E_m = 0` for `m > n`.
//! The Garding cone `Gamma_m^+` is `{ E_1 > 0, ..., E_m > 0 }`.

use crate::error::{Error, Result};
use crate::hypgeom::{binomial, gauss_bonnet_constant};

/// Principal curvatures, optionally already shifted by `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTuple {
    pub entries: Vec<f64>,
    pub shifted: bool,
}

impl CurvatureTuple {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Domain(format!(
                "curvature tuple needs n >= 2 entries, got {}",
                entries.len()
            )));
        }
        Ok(Self { entries, shifted: false })
    }

    /// Shifted curvatures `k - 1`.
    pub fn shifted(&self) -> Self {
        if self.shifted {
            return self.clone();
        }
        Self {
            entries: self.entries.iter().map(|k| k - 1.0).collect(),
            shifted: true,
        }
    }

    /// Unshifted curvatures `k~ + 1`.
    pub fn unshifted(&self) -> Self {
        if !self.shifted {
            return self.clone();
        }
        Self {
            entries: self.entries.iter().map(|k| k + 1.0).collect(),
            shifted: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }
}

/// Unnormalized `sigma_0..sigma_n`, the coefficients of `prod (1 + k_i t)`.
pub fn sigma_all(k: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; k.len() + 1];
    c[0] = 1.0;
    for (i, &x) in k.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            c[j] += x * c[j - 1];
        }
    }
    c
}

/// `E_0..E_n`.
pub fn elementary_all(k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let mut e = sigma_all(k);
    for (m, v) in e.iter_mut().enumerate() {
        *v /= binomial(n, m);
    }
    e
}

/// `E_m(k)`.
pub fn elementary(k: &[f64], m: usize) -> f64 {
    let n = k.len();
    if m > n {
        return 0.0;
    }
    if m == 0 {
        return 1.0;
    }
    sigma_all(k)[m] / binomial(n, m)
}

/// `sigma_j` of `k` with entry `skip` removed, for `j = 0..n-1`.
fn sigma_without(k: &[f64], skip: usize) -> Vec<f64> {
    let mut c = vec![0.0; k.len()];
    c[0] = 1.0;
    let mut len = 0;
    for (i, &x) in k.iter().enumerate() {
        if i == skip {
            continue;
        }
        len += 1;
        for j in (1..=len).rev() {
            c[j] += x * c[j - 1];
        }
    }
    c
}

/// Diagonal Newton tensor `dE_m / dk_i`.
pub fn newton_tensor_diag(k: &[f64], m: usize) -> Vec<f64> {
    let n = k.len();
    if m == 0 || m > n {
        return vec![0.0; n];
    }
    let norm = binomial(n, m);
    (0..n).map(|i| sigma_without(k, i)[m - 1] / norm).collect()
}

/// Index of the first `E_i <= 0` with `1 <= i <= m`, and its value.
pub fn first_cone_failure(k: &[f64], m: usize) -> Option<(usize, f64)> {
    let e = elementary_all(k);
    (1..=m.min(k.len())).find_map(|i| (!(e[i] > 0.0)).then_some((i, e[i])))
}

/// Strict membership in `Gamma_m^+`.
pub fn in_cone(k: &[f64], m: usize) -> bool {
    first_cone_failure(k, m).is_none()
}

/// `Ok` iff `k` lies in `Gamma_m^+`.
pub fn check_cone(k: &[f64], m: usize) -> Result<()> {
    match first_cone_failure(k, m) {
        None => Ok(()),
        Some((index, value)) => Err(Error::Cone { index, value, point: None }),
    }
}

/// `E_p / E_q`, requiring `k` in `Gamma_q^+`.
pub fn quotient(k: &[f64], p: usize, q: usize) -> Result<f64> {
    check_cone(k, q)?;
    Ok(elementary(k, p) / elementary(k, q))
}

/// `F = E_m / E_{m-1}` and its gradient `dF/dk_i`, requiring `Gamma_m^+`.
pub fn quotient_with_derivative(k: &[f64], m: usize) -> Result<(f64, Vec<f64>)> {
    if m == 0 || m > k.len() {
        return Err(Error::Domain(format!("quotient index m = {m} outside 1..={}", k.len())));
    }
    check_cone(k, m)?;
    let em = elementary(k, m);
    let em1 = elementary(k, m - 1);
    let f = em / em1;
    let dm = newton_tensor_diag(k, m);
    let dm1 = newton_tensor_diag(k, m - 1);
    let grad = dm
        .iter()
        .zip(&dm1)
        .map(|(a, b)| (a - f * b) / em1)
        .collect();
    Ok((f, grad))
}

/// Newton-MacLaurin gap `E_k E_m - E_{m+1} E_{k-1}`, nonnegative on `Gamma_m^+`.
pub fn maclaurin_gap(kappa: &[f64], k: usize, m: usize) -> Result<f64> {
    if k < 1 || k > m {
        return Err(Error::Domain(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
    }
    check_cone(kappa, m)?;
    let e = |i: usize| elementary(kappa, i);
    Ok(e(k) * e(m) - e(m + 1) * e(k - 1))
}

fn check_gb_index(n: usize, k: usize) -> Result<()> {
    if 2 * k > n {
        return Err(Error::Domain(format!("Gauss-Bonnet index k = {k} needs 2k <= n = {n}")));
    }
    Ok(())
}

/// `L_k` from unshifted curvatures:
/// `C(n,2k) (2k)! sum_j (-1)^j C(k,j) E_{2k-2j}(k)`.
pub fn gauss_bonnet_unshifted(kappa: &[f64], k: usize) -> Result<f64> {
    let n = kappa.len();
    check_gb_index(n, k)?;
    let e = elementary_all(kappa);
    let s: f64 = (0..=k)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(k, j) * e[2 * k - 2 * j]
        })
        .sum();
    Ok(gauss_bonnet_constant(n, k) * s)
}

/// `L_k` from shifted curvatures:
/// `C(n,2k) (2k)! sum_j 2^j C(k,j) E_{2k-j}(k~)`.
pub fn gauss_bonnet_shifted(kt: &[f64], k: usize) -> Result<f64> {
    let n = kt.len();
    check_gb_index(n, k)?;
    let e = elementary_all(kt);
    let s: f64 = (0..=k)
        .map(|j| 2f64.powi(j as i32) * binomial(k, j) * e[2 * k - j])
        .sum();
    Ok(gauss_bonnet_constant(n, k) * s)
}

/// `(L~_k, N~_k)`:
/// `L~_k = sum_i (-1)^i C(k,i) E_{2k-2i}`, `N~_k = sum_i (-1)^i C(k,i) E_{2k-2i+1}`.
pub fn gbw_pair(kappa: &[f64], k: usize) -> (f64, f64) {
    let e = |i: usize| elementary(kappa, i);
    let mut l = 0.0;
    let mut nn = 0.0;
    for i in 0..=k {
        let c = if i % 2 == 0 { 1.0 } else { -1.0 } * binomial(k, i);
        l += c * e(2 * k - 2 * i);
        nn += c * e(2 * k - 2 * i + 1);
    }
    (l, nn)
}
