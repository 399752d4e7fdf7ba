//! Per-mode propagators and convolution weights of the discretized mild solution.

use std::io::Write;

use rayon::prelude::*;

use super::{check_orders, SpectralBasis};
use crate::error::{domain, precondition, Result};
use crate::specfun::ml_unchecked;

/// Propagators `E_β(−μ_n (kΔt)^β)` for `k = 0..K` and weights
/// `w_n(k) = ∫_{(k−1)Δt}^{kΔt} τ^{β−1} E_{β,β}(−μ_n τ^β) dτ` for `k = 1..K`.
///
/// Both are stored mode-major with `K + 1` entries per mode; `w_n(0)` is 0.
/// Weights are differences of the antiderivative `F(t) = t^β E_{β,β+1}(−μt^β)`,
/// taken as `(E_β(−μ(k−1)^βΔt^β) − E_β(−μk^βΔt^β))/μ` once `μt^β > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    alpha: f64,
    beta: f64,
    dt: f64,
    n_steps: usize,
    rates: Vec<f64>,
    propagators: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

/// `F(t) = t^β E_{β,β+1}(−μ t^β)`, the antiderivative of the convolution kernel.
fn antiderivative(beta: f64, mu: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let tb = t.powf(beta);
    tb * ml_unchecked(beta, beta + 1.0, -mu * tb)
}

/// Table for the fractional Laplacian of order `alpha` on `basis`.
pub fn build_kernel_table(
    alpha: f64,
    beta: f64,
    dt: f64,
    n_steps: usize,
    basis: &SpectralBasis,
) -> Result<KernelTable> {
    check_orders(alpha, beta)?;
    KernelTable::with_rates(alpha, beta, dt, n_steps, basis.rates(alpha))
}

impl KernelTable {
    /// Table for arbitrary nonnegative per-mode rates `μ_n`; `alpha` is
    /// recorded for bookkeeping only.
    pub fn with_rates(alpha: f64, beta: f64, dt: f64, n_steps: usize, rates: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(domain(format!("beta must be in (0,1] (got {beta})")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(domain(format!("dt must be > 0 (got {dt})")));
        }
        if n_steps == 0 {
            return Err(precondition("n_steps must be >= 1"));
        }
        if let Some(mu) = rates.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(domain(format!("rates must be finite and >= 0 (got {mu})")));
        }
        let k1 = n_steps + 1;
        let per_mode: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = rates
            .par_iter()
            .map(|&mu| {
                let p: Vec<f64> = (0..k1)
                    .map(|k| ml_unchecked(beta, 1.0, -mu * (k as f64 * dt).powf(beta)))
                    .collect();
                // Once μt^β passes 1, (1 − E_β)/μ is the better-conditioned form of F.
                let direct = |k: usize| mu * (k as f64 * dt).powf(beta) <= 1.0;
                let f: Vec<f64> = (0..k1)
                    .map(|k| {
                        if direct(k) {
                            antiderivative(beta, mu, k as f64 * dt)
                        } else {
                            (1.0 - p[k]) / mu
                        }
                    })
                    .collect();
                let mut w = vec![0.0; k1];
                for k in 1..k1 {
                    w[k] = if direct(k) {
                        f[k] - f[k - 1]
                    } else {
                        (p[k - 1] - p[k]) / mu
                    };
                }
                (p, w, f)
            })
            .collect();
        let mut propagators = Vec::with_capacity(rates.len() * k1);
        let mut weights = Vec::with_capacity(rates.len() * k1);
        let mut cumulative = Vec::with_capacity(rates.len() * k1);
        for (p, w, f) in per_mode {
            propagators.extend_from_slice(&p);
            weights.extend_from_slice(&w);
            cumulative.extend_from_slice(&f);
        }
        Ok(Self {
            alpha,
            beta,
            dt,
            n_steps,
            rates,
            propagators,
            weights,
            cumulative,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_modes(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `E_β(−μ_n (kΔt)^β)` for 0-based mode index `i`.
    pub fn propagator(&self, i: usize, k: usize) -> f64 {
        self.propagators[i * (self.n_steps + 1) + k]
    }

    /// `w_n(k)` for 0-based mode index `i`; zero at `k = 0`.
    pub fn weight(&self, i: usize, k: usize) -> f64 {
        self.weights[i * (self.n_steps + 1) + k]
    }

    /// All `K + 1` propagators of mode index `i`.
    pub fn propagators_of(&self, i: usize) -> &[f64] {
        let k1 = self.n_steps + 1;
        &self.propagators[i * k1..(i + 1) * k1]
    }

    /// All `K + 1` weights of mode index `i`.
    pub fn weights_of(&self, i: usize) -> &[f64] {
        let k1 = self.n_steps + 1;
        &self.weights[i * k1..(i + 1) * k1]
    }

    /// `(kΔt)^β E_{β,β+1}(−μ_n (kΔt)^β)`, the exact kernel mass on `[0, kΔt]`.
    pub fn kernel_mass(&self, i: usize, k: usize) -> f64 {
        self.cumulative[i * (self.n_steps + 1) + k]
    }

    /// CSV rows `mode,k,propagator,weight` with 1-based modes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "mode,k,propagator,weight")?;
        for i in 0..self.n_modes() {
            for k in 0..=self.n_steps {
                writeln!(out, "{},{},{:e},{:e}", i + 1, k, self.propagator(i, k), self.weight(i, k))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Tolerance};
    use crate::spectral::make_basis;

    #[test]
    fn zero_rate_first_weight() {
        let t = KernelTable::with_rates(1.5, 0.5, 0.01, 3, vec![0.0]).unwrap();
        let exact = 0.1 / statrs::function::gamma::gamma(1.5);
        assert!((t.weight(0, 1) - exact).abs() < 1e-15);
        assert_eq!(t.weight(0, 0), 0.0);
        assert_eq!(t.propagator(0, 2), 1.0);
    }

    #[test]
    fn exponential_integrator_weights_at_beta_one() {
        let b = make_basis(4, 6).unwrap();
        let dt = 1e-3;
        let t = build_kernel_table(2.0, 1.0, dt, 50, &b).unwrap();
        for i in 0..4 {
            let mu = b.eigenvalues()[i];
            for k in 1..=50 {
                let kf = k as f64;
                let w = ((-mu * (kf - 1.0) * dt).exp() - (-mu * kf * dt).exp()) / mu;
                assert!((t.weight(i, k) - w).abs() < 1e-12 * w, "i={i} k={k}");
                assert!((t.propagator(i, k) - (-mu * kf * dt).exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn first_weight_against_singular_quadrature() {
        // τ = s² removes the τ^{−1/2} singularity: ∫_0^{√Δt} 2 E_{½,½}(−μ s) ds
        let mu = std::f64::consts::PI.powf(1.5);
        let dt = 0.01;
        let t = KernelTable::with_rates(1.5, 0.5, dt, 2, vec![mu]).unwrap();
        let oracle = integrate(
            |s: f64| 2.0 * ml_unchecked(0.5, 0.5, -mu * s),
            0.0,
            dt.sqrt(),
            Tolerance::default(),
        )
        .value;
        assert!((t.weight(0, 1) - oracle).abs() < 1e-12);
    }

    #[test]
    fn telescoping_and_monotone_propagators() {
        let b = make_basis(8, 12).unwrap();
        let t = build_kernel_table(1.5, 0.6, 2e-3, 200, &b).unwrap();
        for i in 0..8 {
            let s: f64 = t.weights_of(i).iter().sum();
            assert!((s - t.kernel_mass(i, 200)).abs() < 1e-12);
            assert!(s <= 1.0 / t.rates()[i]);
            assert!(t.weights_of(i)[1..].iter().all(|&w| w > 0.0));
            let p = t.propagators_of(i);
            assert!(p.windows(2).all(|w| w[1] < w[0]));
            assert!(p.iter().all(|&x| x > 0.0 && x <= 1.0));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(KernelTable::with_rates(1.5, 0.0, 0.1, 3, vec![1.0]).is_err());
        assert!(KernelTable::with_rates(1.5, 0.5, 0.0, 3, vec![1.0]).is_err());
        assert!(KernelTable::with_rates(1.5, 0.5, 0.1, 0, vec![1.0]).is_err());
        assert!(KernelTable::with_rates(1.5, 0.5, 0.1, 3, vec![-1.0]).is_err());
        let b = make_basis(2, 3).unwrap();
        assert!(build_kernel_table(2.5, 0.5, 0.1, 3, &b).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = KernelTable::with_rates(1.5, 0.5, 0.1, 2, vec![1.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert!(text.starts_with("mode,k,propagator,weight\n1,0,"));
    }
}
