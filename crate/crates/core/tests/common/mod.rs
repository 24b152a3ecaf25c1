#![allow(dead_code)]

use hyperflow::surface::{make_sphere, Mode, RadialGraph};

/// Principal curvatures of the axisymmetric radial graph with profile `r(theta)`
/// from analytic `r'` and `r''`, ascending.
pub fn axisymmetric_curvatures(n: usize, theta: f64, r: f64, dr: f64, ddr: f64) -> Vec<f64> {
    let (l, lp) = (r.sinh(), r.cosh());
    let w = (l * l + dr * dr).sqrt();
    let meridian = (-l * ddr + 2.0 * lp * dr * dr + l * l * lp) / (w * (l * l + dr * dr));
    let parallel = (lp - dr * theta.cos() / (theta.sin() * l)) / w;
    let mut k = vec![parallel; n];
    k[0] = meridian;
    k.sort_by(|a, b| a.partial_cmp(b).unwrap());
    k
}

/// Radius in direction `theta` of the geodesic sphere of radius `big_r`
/// centred at distance `d < big_r` from the origin on the polar axis.
pub fn off_center_radius(d: f64, big_r: f64, theta: f64) -> f64 {
    let a = d.cosh();
    let b = d.sinh() * theta.cos();
    (b / a).atanh() + (big_r.cosh() / (a * a - b * b).sqrt()).acosh()
}

pub fn off_center_sphere(n: usize, n_theta: usize, d: f64, big_r: f64) -> RadialGraph {
    let g = make_sphere(n, Mode::Axisymmetric, n_theta, big_r).unwrap();
    let r = g.grid.theta.iter().map(|&t| off_center_radius(d, big_r, t)).collect();
    g.with_values(r).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
