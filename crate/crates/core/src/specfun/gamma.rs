//! Gamma function for positive arguments.
//!
//! Lanczos approximation with g = 7 and the nine standard coefficients
//! (Godfrey's set). The coefficients are fixed here so results are
//! reproducible bit-for-bit across platforms.

use std::f64::consts::PI;

use crate::error::{domain, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_78;

fn lanczos_sum(xm1: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (xm1 + i as f64);
    }
    a
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("gamma requires x > 0 (got {x})")));
    }
    Ok(gamma_pos(x))
}

/// Γ(x) without argument checks; caller guarantees x > 0.
pub(crate) fn gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return gamma_pos(x + 1.0) / x;
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x == x.floor() && x <= 23.0 {
        // exact factorial in double precision
        let mut p = 1.0;
        let mut k = 2.0;
        while k < x {
            p *= k;
            k += 1.0;
        }
        return p;
    }
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    let a = lanczos_sum(xm1);
    if x < 140.0 {
        (2.0 * PI).sqrt() * t.powf(xm1 + 0.5) * (-t).exp() * a
    } else {
        // split the power to postpone overflow
        let h = t.powf(0.5 * (xm1 + 0.5));
        (2.0 * PI).sqrt() * h * ((-t).exp() * h) * a
    }
}

/// ln Γ(x) for x > 0.
pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_pos(x + 1.0) - x.ln();
    }
    if x < 100.0 {
        return gamma_pos(x).ln();
    }
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (xm1 + 0.5) * t.ln() - t + lanczos_sum(xm1).ln()
}

/// sin(πx) with exact zeros at the integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    if x == x.floor() {
        return 0.0;
    }
    // reduce to r in [-1, 1)
    let r = x - 2.0 * (0.5 * x + 0.5).floor();
    if r.abs() == 0.5 {
        return r.signum();
    }
    (PI * r).sin()
}

/// 1/Γ(x) for any real x; zero at the non-positive integers.
pub(crate) fn rgamma(x: f64) -> f64 {
    if x > 0.0 {
        if x > 171.0 {
            return (-ln_gamma_pos(x)).exp();
        }
        return 1.0 / gamma_pos(x);
    }
    if x == x.floor() {
        return 0.0;
    }
    // reflection: 1/Γ(x) = sin(πx) Γ(1-x) / π
    let s = sin_pi(x);
    let one_minus = 1.0 - x;
    if one_minus > 171.0 {
        let l = ln_gamma_pos(one_minus) - PI.ln();
        return s.signum() * (l + s.abs().ln()).exp();
    }
    s * gamma_pos(one_minus) / PI
}
