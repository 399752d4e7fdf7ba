//! Numerical verification of the identities tying the special functions together.
//!
//! Every integral here is computed by the adaptive Gauss–Kronrod scheme in
//! [`crate::quad`], never by the series used in the evaluators themselves.

use std::io::Write;

use super::gamma::gamma_pos;
use super::mittag_leffler::ml_unchecked;
use super::wright::{mainardi_integral, mainardi_series, mainardi_unchecked, stable_density_unchecked};
use crate::error::{precondition, Result};
use crate::quad::{integrate, integrate_to_infinity, Tolerance};

/// Outcome of one identity checked at one order `β` over a set of sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecfunReport {
    pub identity: String,
    pub beta: f64,
    pub sample_points: Vec<f64>,
    /// Absolute error at each sample point.
    pub errors: Vec<f64>,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SpecfunReport {
    fn new(identity: &str, beta: f64, points: Vec<f64>, errors: Vec<f64>, tolerance: f64) -> Self {
        let max_abs_error = errors.iter().fold(0.0f64, |m, &e| if e.is_nan() { f64::NAN } else { m.max(e) });
        Self {
            identity: identity.to_string(),
            beta,
            sample_points: points,
            errors,
            max_abs_error,
            tolerance,
            pass: max_abs_error <= tolerance,
        }
    }
}

const MOMENT_ORDERS: [f64; 4] = [-0.5, 0.0, 1.0, 2.0];
const LAPLACE_POINTS: [f64; 3] = [0.5, 1.0, 2.0];
const RELATION_POINTS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
const BRANCH_POINTS: [f64; 4] = [0.5, 1.0, 1.5, 2.5];
const POINTWISE_TOL: f64 = 1e-8;

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-14,
        rel: 1e-12,
        max_intervals: 2000,
    }
}

/// `∫_0^∞ θ^ε M_β(θ) dθ`, with `θ = u^{1/(1+ε)}` on `[0, 1]` to absorb the
/// algebraic factor and geometric panels on `[1, ∞)` until the tail is below 1e-14.
fn mainardi_moment(beta: f64, eps: f64) -> f64 {
    let k = 1.0 / (1.0 + eps);
    let head = integrate(|u: f64| mainardi_unchecked(beta, u.powf(k)), 0.0, 1.0, quad_tol()).value * k;
    let tail = integrate_to_infinity(
        |t: f64| t.powf(eps) * mainardi_unchecked(beta, t),
        1.0,
        1.0,
        1e-14,
        quad_tol(),
    )
    .value;
    head + tail
}

fn mainardi_laplace(beta: f64, z: f64) -> f64 {
    let f = |t: f64| mainardi_unchecked(beta, t) * (-z * t).exp();
    integrate(f, 0.0, 1.0, quad_tol()).value
        + integrate_to_infinity(f, 1.0, 1.0, 1e-14, quad_tol()).value
}

fn stable_laplace(beta: f64, lambda: f64) -> f64 {
    let f = |t: f64| stable_density_unchecked(beta, t) * (-lambda * t).exp();
    integrate(f, 0.0, 1.0, quad_tol()).value
        + integrate_to_infinity(f, 1.0, 1.0, 1e-14, quad_tol()).value
}

/// Check the special-function identities for every `β` in `betas`.
///
/// Quadrature identities (moments, Laplace transforms) are compared against
/// `tolerance`; pointwise identities use `min(tolerance, 1e-8)`.
pub fn verify_identities(betas: &[f64], tolerance: f64) -> Result<Vec<SpecfunReport>> {
    if !(tolerance > 0.0) {
        return Err(precondition(format!("tolerance must be > 0 (got {tolerance})")));
    }
    if let Some(&b) = betas.iter().find(|&&b| !(b > 0.0 && b < 1.0)) {
        return Err(precondition(format!("beta grid must lie in (0,1) (got {b})")));
    }
    let point_tol = tolerance.min(POINTWISE_TOL);
    let mut reports = Vec::new();
    for &beta in betas {
        let errs = MOMENT_ORDERS
            .iter()
            .map(|&eps| {
                let exact = gamma_pos(1.0 + eps) / gamma_pos(1.0 + beta * eps);
                (mainardi_moment(beta, eps) - exact).abs()
            })
            .collect();
        reports.push(SpecfunReport::new("mainardi_moment", beta, MOMENT_ORDERS.to_vec(), errs, tolerance));

        let errs = LAPLACE_POINTS
            .iter()
            .map(|&z| (mainardi_laplace(beta, z) - ml_unchecked(beta, 1.0, -z)).abs())
            .collect();
        reports.push(SpecfunReport::new("mainardi_laplace_mittag_leffler", beta, LAPLACE_POINTS.to_vec(), errs, tolerance));

        let errs = LAPLACE_POINTS
            .iter()
            .map(|&l| (stable_laplace(beta, l) - (-l.powf(beta)).exp()).abs())
            .collect();
        reports.push(SpecfunReport::new("stable_laplace", beta, LAPLACE_POINTS.to_vec(), errs, tolerance));

        let errs = RELATION_POINTS
            .iter()
            .map(|&x| {
                let via_m = beta * x.powf(-1.0 - beta) * mainardi_unchecked(beta, x.powf(-beta));
                (stable_density_unchecked(beta, x) - via_m).abs()
            })
            .collect();
        reports.push(SpecfunReport::new("mainardi_stable_relation", beta, RELATION_POINTS.to_vec(), errs, point_tol));

        let errs = BRANCH_POINTS
            .iter()
            .map(|&t| (mainardi_series(beta, t) - mainardi_integral(beta, t)).abs())
            .collect();
        reports.push(SpecfunReport::new("mainardi_series_vs_integral", beta, BRANCH_POINTS.to_vec(), errs, point_tol));

        if beta == 0.5 {
            let pts: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
            let errs = pts
                .iter()
                .map(|&t| {
                    let g = (-t * t / 4.0).exp() / std::f64::consts::PI.sqrt();
                    (mainardi_unchecked(0.5, t) - g).abs()
                })
                .collect();
            reports.push(SpecfunReport::new("mainardi_half_gaussian", beta, pts, errs, point_tol));

            let pts = vec![0.1, 0.5, 1.0, 2.0, 5.0];
            let errs = pts
                .iter()
                .map(|&t: &f64| {
                    let l = t.powf(-1.5) * (-1.0 / (4.0 * t)).exp() / (2.0 * std::f64::consts::PI.sqrt());
                    (stable_density_unchecked(0.5, t) - l).abs()
                })
                .collect();
            reports.push(SpecfunReport::new("stable_half_levy", beta, pts, errs, point_tol));
        }
    }
    Ok(reports)
}

/// CSV rows `identity,beta,param,max_abs_err,tolerance,pass`, one per sample point.
pub fn write_reports_csv<W: Write>(reports: &[SpecfunReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "identity,beta,param,max_abs_err,tolerance,pass")?;
    for r in reports {
        for (p, e) in r.sample_points.iter().zip(&r.errors) {
            writeln!(
                out,
                "{},{},{},{:e},{:e},{}",
                r.identity,
                r.beta,
                p,
                e,
                r.tolerance,
                *e <= r.tolerance
            )?;
        }
    }
    Ok(())
}
