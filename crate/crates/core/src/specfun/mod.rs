//! Special functions behind the Mittag-Leffler operators.

mod gamma;
mod identities;
mod mittag_leffler;
mod wright;

pub use gamma::gamma_fn;
pub use identities::{verify_identities, write_reports_csv, SpecfunReport};
pub use mittag_leffler::{mittag_leffler, mittag_leffler2};
pub use wright::{mainardi, stable_density};

pub(crate) use mittag_leffler::ml_unchecked;

use crate::error::{domain, Result};

/// Parameters of a two-parameter Mittag-Leffler kernel `E_{β,ρ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub beta: f64,
    pub rho: f64,
}

impl MLParams {
    pub fn new(beta: f64, rho: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(domain(format!("beta must be in (0,1] (got {beta})")));
        }
        if !(rho > 0.0) {
            return Err(domain(format!("rho must be > 0 (got {rho})")));
        }
        Ok(Self { beta, rho })
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        mittag_leffler2(self.beta, self.rho, z)
    }
}

/// Constant of the Burkholder–Davis–Gundy moment bound,
/// `C(p) = [p(p-1)/2]^{p/2} (p/(p-1))^{p(p/2-1)}` for `p ≥ 2`.
pub fn bdg_constant(p: f64) -> Result<f64> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(domain(format!("BDG constant needs p >= 2 (got {p})")));
    }
    Ok((p * (p - 1.0) / 2.0).powf(p / 2.0) * (p / (p - 1.0)).powf(p * (p / 2.0 - 1.0)))
}
