//! Dirichlet sine eigenbasis on (0,1), fractional powers, Ḣ^s norms and
//! Mittag-Leffler operator actions.
//!
//! Mode `n` (1-based) is `e_n(x) = √2 sin(nπx)` with `λ_n = π²n²`. Field
//! coefficients are stored 0-based, so index `i` holds mode `n = i + 1`.

mod kernel;

pub use kernel::{build_kernel_table, KernelTable};

use std::f64::consts::{PI, SQRT_2};

use crate::error::{domain, precondition, Error, Result};
use crate::specfun::ml_unchecked;

/// Galerkin truncation plus the collocation grid used for products.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    n_modes: usize,
    grid_size: usize,
    eigenvalues: Vec<f64>,
    // sin(nπx_j) and nπ cos(nπx_j), row j, column n-1
    sin_table: Vec<f64>,
    dcos_table: Vec<f64>,
}

/// Smallest collocation grid that keeps the quadratic product alias-free.
pub fn min_grid_size(n_modes: usize) -> usize {
    (3 * n_modes).div_ceil(2)
}

/// Basis of `n_modes` sine modes with `grid_size` interior collocation points
/// `x_j = j/(M+1)`.
pub fn make_basis(n_modes: usize, grid_size: usize) -> Result<SpectralBasis> {
    if n_modes == 0 {
        return Err(precondition("n_modes must be >= 1"));
    }
    if grid_size < min_grid_size(n_modes) {
        return Err(precondition(format!(
            "grid_size must be >= 3N/2 = {} for N = {n_modes} (got {grid_size})",
            min_grid_size(n_modes)
        )));
    }
    let eigenvalues = (1..=n_modes).map(|n| PI * PI * (n * n) as f64).collect();
    let h = 1.0 / (grid_size + 1) as f64;
    let mut sin_table = Vec::with_capacity(grid_size * n_modes);
    let mut dcos_table = Vec::with_capacity(grid_size * n_modes);
    for j in 1..=grid_size {
        for n in 1..=n_modes {
            // reduce nj mod 2(M+1) so the argument stays small
            let r = ((n * j) % (2 * (grid_size + 1))) as f64 * h;
            sin_table.push((PI * r).sin());
            dcos_table.push(n as f64 * PI * (PI * r).cos());
        }
    }
    Ok(SpectralBasis {
        n_modes,
        grid_size,
        eigenvalues,
        sin_table,
        dcos_table,
    })
}

impl SpectralBasis {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// `λ_n = π²n²`, 0-based.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Collocation points `x_j = j/(M+1)`, `j = 1..M`.
    pub fn grid_points(&self) -> Vec<f64> {
        let h = 1.0 / (self.grid_size + 1) as f64;
        (1..=self.grid_size).map(|j| j as f64 * h).collect()
    }

    /// `λ_n^{α/2}`, the rates of the fractional Laplacian.
    pub fn rates(&self, alpha: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.powf(0.5 * alpha)).collect()
    }

    pub(crate) fn check(&self, field: &SpectralField) -> Result<()> {
        if field.len() != self.n_modes {
            return Err(Error::SizeMismatch {
                what: "field modes",
                expected: self.n_modes,
                got: field.len(),
            });
        }
        Ok(())
    }

    fn synthesize(&self, coeffs: &[f64], table: &[f64]) -> Vec<f64> {
        table
            .chunks_exact(self.n_modes)
            .map(|row| row.iter().zip(coeffs).map(|(s, c)| s * c).sum::<f64>() * SQRT_2)
            .collect()
    }

    /// `∂_x u` on the grid.
    pub(crate) fn derivative_on_grid(&self, field: &SpectralField) -> Vec<f64> {
        self.synthesize(&field.coeffs, &self.dcos_table)
    }
}

/// A field on (0,1) as sine-mode coefficients `v_n = ⟨v, e_n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(precondition("a field needs at least one mode"));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(domain(format!("coefficient of mode {} is not finite", i + 1)));
        }
        Ok(Self { coeffs })
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coeffs: vec![0.0; n_modes],
        }
    }

    /// The eigenfunction `e_n` (1-based `n`) in an `n_modes` truncation.
    pub fn mode(n_modes: usize, n: usize) -> Self {
        let mut f = Self::zeros(n_modes);
        f.coeffs[n - 1] = 1.0;
        f
    }

    /// Field whose leading coefficients are `lead`, padded with zeros.
    pub fn from_leading(n_modes: usize, lead: &[f64]) -> Result<Self> {
        if lead.len() > n_modes {
            return Err(precondition(format!(
                "{} leading coefficients exceed {n_modes} modes",
                lead.len()
            )));
        }
        let mut c = vec![0.0; n_modes];
        c[..lead.len()].copy_from_slice(lead);
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// L² norm, equal to `sobolev_norm(·, 0)`.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_vec_unchecked(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_vec_unchecked(self.coeffs.iter().map(|c| k * c).collect())
    }
}

/// Grid values `u_j = Σ_n v_n √2 sin(nπx_j)`.
pub fn to_grid(field: &SpectralField, basis: &SpectralBasis) -> Result<Vec<f64>> {
    basis.check(field)?;
    Ok(basis.synthesize(&field.coeffs, &basis.sin_table))
}

/// Inverse of [`to_grid`] on the first `N` modes:
/// `v_n = √2/(M+1) Σ_j u_j sin(nπx_j)`.
pub fn to_coeffs(values: &[f64], basis: &SpectralBasis) -> Result<SpectralField> {
    if values.len() != basis.grid_size {
        return Err(Error::SizeMismatch {
            what: "grid values",
            expected: basis.grid_size,
            got: values.len(),
        });
    }
    let n = basis.n_modes;
    let mut c = vec![0.0; n];
    for (row, &u) in basis.sin_table.chunks_exact(n).zip(values) {
        for (ci, s) in c.iter_mut().zip(row) {
            *ci += u * s;
        }
    }
    let k = SQRT_2 / (basis.grid_size + 1) as f64;
    c.iter_mut().for_each(|x| *x *= k);
    SpectralField::new(c)
}

/// Discrete L² norm `(Σ_j u_j² /(M+1))^{1/2}` of grid values.
pub fn grid_l2_norm(values: &[f64], basis: &SpectralBasis) -> f64 {
    (values.iter().map(|u| u * u).sum::<f64>() / (basis.grid_size + 1) as f64).sqrt()
}

/// `‖v‖_{Ḣ^s} = (Σ_n λ_n^s v_n²)^{1/2}`.
pub fn sobolev_norm(field: &SpectralField, s: f64, basis: &SpectralBasis) -> Result<f64> {
    basis.check(field)?;
    Ok(field
        .coeffs
        .iter()
        .zip(&basis.eigenvalues)
        .map(|(v, l)| l.powf(s) * v * v)
        .sum::<f64>()
        .sqrt())
}

/// `A^{s/2} v`: mode `n` scaled by `λ_n^{s/2}`.
pub fn apply_fractional_power(field: &SpectralField, s: f64, basis: &SpectralBasis) -> Result<SpectralField> {
    basis.check(field)?;
    Ok(SpectralField::from_vec_unchecked(
        field
            .coeffs
            .iter()
            .zip(&basis.eigenvalues)
            .map(|(v, l)| l.powf(0.5 * s) * v)
            .collect(),
    ))
}

/// Which Mittag-Leffler operator family to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MLKind {
    /// `E_β(t)`: mode-wise `E_β(−μ_n t^β)`.
    Relaxation,
    /// `E_{β,β}(t)`: mode-wise `E_{β,β}(−μ_n t^β)`.
    Kernel,
}

pub(crate) fn check_orders(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(domain(format!("alpha must be in (1,2] (got {alpha})")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!("beta must be in (0,1] (got {beta})")));
    }
    Ok(())
}

/// Mode-wise multipliers of the operator `kind` at time `t`.
pub fn ml_multipliers(kind: MLKind, t: f64, alpha: f64, beta: f64, basis: &SpectralBasis) -> Result<Vec<f64>> {
    check_orders(alpha, beta)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("t must be >= 0 (got {t})")));
    }
    let rho = match kind {
        MLKind::Relaxation => 1.0,
        MLKind::Kernel => beta,
    };
    let tb = t.powf(beta);
    Ok(basis
        .rates(alpha)
        .iter()
        .map(|mu| ml_unchecked(beta, rho, -mu * tb))
        .collect())
}

/// Apply `E_β(t)` or `E_{β,β}(t)` to `field`.
pub fn ml_operator_apply(
    kind: MLKind,
    t: f64,
    alpha: f64,
    beta: f64,
    field: &SpectralField,
    basis: &SpectralBasis,
) -> Result<SpectralField> {
    basis.check(field)?;
    let m = ml_multipliers(kind, t, alpha, beta, basis)?;
    Ok(SpectralField::from_vec_unchecked(
        field.coeffs.iter().zip(&m).map(|(v, k)| v * k).collect(),
    ))
}
