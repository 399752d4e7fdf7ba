//! Mainardi's Wright-type function `M_β` and the one-sided stable density `ω_β`.

use std::f64::consts::PI;

use super::gamma::{ln_gamma_pos, sin_pi};
use crate::error::{domain, Result};
use crate::quad::{integrate, Tolerance};

/// Arguments up to this value use the power series of `M_β`.
const MAINARDI_SERIES_MAX: f64 = 1.0;
const MAX_TERMS: usize = 4000;

fn check_order(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(format!(
            "Wright-type functions need beta in (0,1) (got {beta})"
        )));
    }
    Ok(())
}

/// `M_β(θ)` for `0 < β < 1`, `θ ≥ 0`.
pub fn mainardi(beta: f64, theta: f64) -> Result<f64> {
    check_order(beta)?;
    if !(theta >= 0.0) || theta.is_nan() {
        return Err(domain(format!("mainardi needs theta >= 0 (got {theta})")));
    }
    Ok(mainardi_unchecked(beta, theta))
}

pub(crate) fn mainardi_unchecked(beta: f64, theta: f64) -> f64 {
    if theta.is_infinite() {
        return 0.0;
    }
    if theta <= MAINARDI_SERIES_MAX {
        mainardi_series(beta, theta)
    } else {
        mainardi_integral(beta, theta)
    }
}

/// `M_β(θ) = (1/π) Σ_{n≥1} (-θ)^{n-1} Γ(nβ) sin(nπβ) / (n-1)!`
pub(crate) fn mainardi_series(beta: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return sin_pi(beta) * super::gamma::gamma_pos(beta) / PI;
    }
    let lt = theta.ln();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        let s = sin_pi(nf * beta);
        let mag = ((nf - 1.0) * lt + ln_gamma_pos(nf * beta) - ln_gamma_pos(nf)).exp();
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * s * mag;
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        abs_sum += mag;
        if mag < 1e-17 * abs_sum && n > 2 {
            break;
        }
    }
    (sum + comp) / PI
}

/// Kanter-type integral for `θ > 0`:
///
/// `M_β(θ) = θ^{β/(1-β)} / (π(1-β)) ∫_0^π A(φ) exp(-A(φ) θ^{1/(1-β)}) dφ`,
/// `A(φ) = sin(βφ)^{β/(1-β)} sin((1-β)φ) / sin(φ)^{1/(1-β)}`.
pub(crate) fn mainardi_integral(beta: f64, theta: f64) -> f64 {
    let c = 1.0 / (1.0 - beta);
    let scale = theta.powf(c);
    let prefactor = theta.powf(beta * c) / (PI * (1.0 - beta));
    let ln_a = |phi: f64| {
        beta * c * (beta * phi).sin().ln() + ((1.0 - beta) * phi).sin().ln() - c * phi.sin().ln()
    };
    let integrand = |phi: f64| {
        let la = ln_a(phi);
        (la - la.exp() * scale).exp()
    };
    if prefactor == 0.0 || !prefactor.is_finite() {
        return 0.0;
    }
    let tol = Tolerance {
        abs: 1e-17 / prefactor,
        rel: 1e-13,
        max_intervals: 2000,
    };
    prefactor * integrate(integrand, 0.0, PI, tol).value
}

/// `ω_β(θ)`, the density on `(0, ∞)` with Laplace transform `exp(-λ^β)`.
///
/// For `θ ≥ 1` the series
/// `(1/π) Σ_{n≥1} (-1)^{n-1} θ^{-βn-1} Γ(βn+1) sin(nπβ) / n!` is summed;
/// below 1 the density is obtained from `M_β` through
/// `ω_β(θ) = β θ^{-1-β} M_β(θ^{-β})`.
pub fn stable_density(beta: f64, theta: f64) -> Result<f64> {
    check_order(beta)?;
    if !(theta > 0.0) {
        return Err(domain(format!("stable_density needs theta > 0 (got {theta})")));
    }
    Ok(stable_density_unchecked(beta, theta))
}

pub(crate) fn stable_density_unchecked(beta: f64, theta: f64) -> f64 {
    if theta.is_infinite() {
        return 0.0;
    }
    if theta >= 1.0 {
        stable_series(beta, theta)
    } else {
        beta * theta.powf(-1.0 - beta) * mainardi_unchecked(beta, theta.powf(-beta))
    }
}

pub(crate) fn stable_series(beta: f64, theta: f64) -> f64 {
    let lt = theta.ln();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    for n in 1..=MAX_TERMS {
        let nf = n as f64;
        let mag = (ln_gamma_pos(beta * nf + 1.0) - ln_gamma_pos(nf + 1.0) - (beta * nf + 1.0) * lt)
            .exp();
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * sin_pi(nf * beta) * mag;
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        abs_sum += mag;
        if mag < 1e-17 * abs_sum && n > 2 {
            break;
        }
    }
    (sum + comp) / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_half(theta: f64) -> f64 {
        (-theta * theta / 4.0).exp() / PI.sqrt()
    }

    fn levy_half(theta: f64) -> f64 {
        theta.powf(-1.5) * (-1.0 / (4.0 * theta)).exp() / (2.0 * PI.sqrt())
    }

    #[test]
    fn trivial_values() {
        assert!((mainardi(0.5, 0.0).unwrap() - 0.564_189_583_547_756_3).abs() < 1e-15);
        assert!((mainardi(0.5, 1.0).unwrap() - 0.439_391_289_467_722_4).abs() < 1e-12);
        assert!((stable_density(0.5, 1.0).unwrap() - 0.219_695_644_733_861_2).abs() < 1e-12);
    }

    #[test]
    fn half_order_matches_gaussian_on_both_branches() {
        let mut theta = 0.0;
        while theta <= 20.0 {
            let v = mainardi(0.5, theta).unwrap();
            assert!((v - gaussian_half(theta)).abs() < 1e-12, "θ={theta}");
            theta += 0.05;
        }
    }

    #[test]
    fn series_and_integral_agree_near_switchover() {
        for &beta in &[0.2, 0.3, 0.5, 0.7, 0.8, 0.9] {
            for &theta in &[0.3, 0.8, 1.0, 1.5] {
                let s = mainardi_series(beta, theta);
                let i = mainardi_integral(beta, theta);
                assert!((s - i).abs() < 1e-11, "β={beta} θ={theta}: {s} vs {i}");
            }
        }
    }

    #[test]
    fn stable_density_half_is_levy() {
        for &theta in &[0.01, 0.1, 0.5, 0.99, 1.0, 2.0, 10.0, 100.0] {
            let v = stable_density(0.5, theta).unwrap();
            assert!((v - levy_half(theta)).abs() < 1e-11 * levy_half(theta).max(1e-3));
        }
    }

    #[test]
    fn relation_with_mainardi_both_ways() {
        for &beta in &[0.3, 0.5, 0.8] {
            for &x in &[1.0, 2.0, 4.0, 9.0] {
                let direct = stable_series(beta, x);
                let via_m = beta * x.powf(-1.0 - beta) * mainardi_series(beta, x.powf(-beta));
                assert!((direct - via_m).abs() < 1e-12, "β={beta} x={x}");
            }
        }
    }

    #[test]
    fn nonnegative_on_grid() {
        for &beta in &[0.1, 0.3, 0.5, 0.7, 0.9, 0.95] {
            let mut theta = 0.0;
            while theta <= 20.0 {
                assert!(mainardi(beta, theta).unwrap() >= -1e-12, "β={beta} θ={theta}");
                theta += 0.1;
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(mainardi(1.0, 0.5).is_err());
        assert!(mainardi(0.5, -0.1).is_err());
        assert!(stable_density(0.5, 0.0).is_err());
        assert!(stable_density(0.0, 1.0).is_err());
    }
}
