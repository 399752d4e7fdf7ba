//! One- and two-parameter Mittag-Leffler functions on the negative real axis.
//!
//! `E_{β,ρ}(z) = Σ_k z^k / Γ(βk + ρ)` for `0 < β ≤ 1`, `ρ > 0`, `z ≤ 0`.
//!
//! Three regimes are used, chosen per call:
//!
//! * Taylor series with Neumaier-compensated summation, accepted only when
//!   the sum of absolute terms stays within a factor 1e3 of the result
//!   (bounded cancellation);
//! * the Poincaré expansion `-Σ_{k≥1} z^{-k} / Γ(ρ - βk)`, truncated at its
//!   smallest term and accepted when that term is below 1e-15 of the sum;
//! * otherwise the real-line integral obtained by collapsing the Hankel
//!   contour of `s^{β-ρ} e^s / (s^β - z)` onto the negative axis, valid for
//!   `β < 1` and `ρ < β + 1` (larger `ρ` is first reduced by
//!   `E_{β,ρ}(z) = (E_{β,ρ-β}(z) - 1/Γ(ρ-β)) / z`).
//!
//! At `β = 1` closed forms are used for `ρ ∈ {1, 2}`.

use std::f64::consts::PI;

use super::gamma::{ln_gamma_pos, rgamma, sin_pi};
use crate::error::{domain, Result};
use crate::quad::{integrate, Tolerance};

const SERIES_CANCELLATION_LIMIT: f64 = 1e3;
const TAYLOR_MAX_ARG: f64 = 10.0;
const SERIES_MAX_TERMS: usize = 500;
const ASYMPTOTIC_MAX_TERMS: usize = 400;
const ASYMPTOTIC_ACCEPT: f64 = 1e-15;

fn check(beta: f64, rho: f64, z: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!(
            "Mittag-Leffler order beta must be in (0,1] (got {beta})"
        )));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(domain(format!("Mittag-Leffler rho must be > 0 (got {rho})")));
    }
    if !(z <= 0.0) || !z.is_finite() {
        return Err(domain(format!(
            "Mittag-Leffler argument must be finite and <= 0 (got {z})"
        )));
    }
    Ok(())
}

/// `E_β(z)` for `0 < β ≤ 1`, `z ≤ 0`.
pub fn mittag_leffler(beta: f64, z: f64) -> Result<f64> {
    check(beta, 1.0, z)?;
    Ok(ml_unchecked(beta, 1.0, z))
}

/// `E_{β,ρ}(z)` for `0 < β ≤ 1`, `ρ > 0`, `z ≤ 0`.
pub fn mittag_leffler2(beta: f64, rho: f64, z: f64) -> Result<f64> {
    check(beta, rho, z)?;
    Ok(ml_unchecked(beta, rho, z))
}

pub(crate) fn ml_unchecked(beta: f64, rho: f64, z: f64) -> f64 {
    if z == 0.0 {
        return rgamma(rho);
    }
    if beta == 1.0 {
        return ml_beta_one(rho, z);
    }
    let x = -z;
    if let Some(v) = taylor(beta, rho, z) {
        return v;
    }
    if x > 1.0 {
        if let Some(v) = asymptotic(beta, rho, x) {
            return v;
        }
    }
    if rho >= beta + 1.0 {
        let lower = ml_unchecked(beta, rho - beta, z);
        return (lower - rgamma(rho - beta)) / z;
    }
    hankel_integral(beta, rho, x)
}

fn ml_beta_one(rho: f64, z: f64) -> f64 {
    if rho == 1.0 {
        return z.exp();
    }
    if rho == 2.0 {
        return z.exp_m1() / z;
    }
    if let Some(v) = taylor(1.0, rho, z) {
        return v;
    }
    if rho < 1.0 {
        return rgamma(rho) + z * ml_beta_one(rho + 1.0, z);
    }
    // E_{1,ρ}(z) = (1/Γ(ρ)) ∫_0^1 exp(z (1 - w^{1/(ρ-1)})) dw
    let p = 1.0 / (rho - 1.0);
    let q = integrate(
        |w: f64| (z * (1.0 - w.powf(p))).exp(),
        0.0,
        1.0,
        Tolerance::new(0.0, 1e-14),
    );
    q.value * rgamma(rho)
}

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn taylor(beta: f64, rho: f64, z: f64) -> Option<f64> {
    let x = -z;
    if x > TAYLOR_MAX_ARG {
        return None;
    }
    let lnx = x.ln();
    let mut acc = Compensated::default();
    let mut abs_sum = 0.0;
    let mut zk: f64 = 1.0;
    for k in 0..SERIES_MAX_TERMS {
        let arg = beta * k as f64 + rho;
        let term = if arg < 170.0 && zk.is_finite() && zk.abs() < 1e300 {
            zk * rgamma(arg)
        } else {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (k as f64 * lnx - ln_gamma_pos(arg)).exp()
        };
        acc.add(term);
        abs_sum += term.abs();
        if term.abs() <= 1e-17 * abs_sum && k > 0 {
            let v = acc.value();
            if v != 0.0 && abs_sum <= SERIES_CANCELLATION_LIMIT * v.abs().min(1.0) {
                return Some(v);
            }
            return None;
        }
        zk *= z;
    }
    None
}

/// `ln(Γ(1-a)/π)` for `a ≤ 0`, or `-ln Γ(a)` for `a > 0`: the size of
/// `1/Γ(a)` without its `sin(πa)` factor.
fn ln_rgamma_envelope(a: f64) -> f64 {
    if a > 0.0 {
        -ln_gamma_pos(a)
    } else {
        ln_gamma_pos(1.0 - a) - PI.ln()
    }
}

/// Poincaré expansion, truncated where its envelope `x^{-k} |Γ(1-ρ+βk)|/π`
/// stops decreasing. The envelope drops the `sin` factor of the reflected
/// reciprocal gamma so that near-zero terms close to the poles cannot fake
/// convergence.
fn asymptotic(beta: f64, rho: f64, x: f64) -> Option<f64> {
    let lnx = x.ln();
    let mut acc = Compensated::default();
    let mut last_env = f64::INFINITY;
    for k in 1..=ASYMPTOTIC_MAX_TERMS {
        let kf = k as f64;
        let arg = rho - beta * kf;
        let env = (ln_rgamma_envelope(arg) - kf * lnx).exp();
        if env > last_env {
            break;
        }
        last_env = env;
        let near_pole = arg <= 0.0 && (arg - arg.round()).abs() < 1e-12;
        if !near_pole {
            let r = if arg > 0.0 { 1.0 } else { sin_pi(arg) };
            // -z^{-k} / Γ(ρ-βk) with z = -x
            let zsign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc.add(-zsign * r * env);
        }
        let v = acc.value();
        if env < 1e-17 * v.abs() {
            break;
        }
    }
    let v = acc.value();
    if v != 0.0 && last_env <= ASYMPTOTIC_ACCEPT * v.abs() {
        Some(v)
    } else {
        None
    }
}

/// Hankel-contour integral on the real line, `0 < β < 1`, `ρ < β + 1`, `x > 0`:
///
/// `E_{β,ρ}(-x) = (1/π) ∫_0^∞ e^{-r} r^{β-ρ} [r^β sin(πρ) - x sin(π(β-ρ))]
///                / (r^{2β} + 2 x r^β cos(πβ) + x²) dr`
///
/// evaluated after the substitution `r = u^{1/(β-ρ+1)}`, which removes the
/// algebraic endpoint factor.
fn hankel_integral(beta: f64, rho: f64, x: f64) -> f64 {
    let s_rho = sin_pi(rho);
    let s_diff = sin_pi(beta - rho);
    let c_beta = (PI * beta).cos();
    let k = 1.0 / (beta - rho + 1.0);
    let integrand = |u: f64| {
        let r = u.powf(k);
        let rb = r.powf(beta);
        let den = rb * rb + 2.0 * x * rb * c_beta + x * x;
        k * (-r).exp() * (rb * s_rho - x * s_diff) / den
    };
    let peak = x.powf(1.0 / beta);
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-14,
        max_intervals: 4000,
    };
    let to_u = |r: f64| r.powf(1.0 / k);
    let total = if peak < 60.0 {
        integrate(integrand, 0.0, to_u(peak), tol).value
            + integrate(integrand, to_u(peak), to_u(peak + 60.0), tol).value
    } else {
        integrate(integrand, 0.0, to_u(60.0), tol).value
    };
    total / PI
}
