//! Right-hand-side ingredients: the Burgers nonlinearity, the noise
//! coefficient and Q-Wiener increments.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, precondition, Error, Result};
use crate::spectral::{sobolev_norm, to_coeffs, to_grid, SpectralBasis, SpectralField};

/// How the noise multiplies the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Mode `n` of `g(u)dW` is `σ u_n ΔW_n`.
    Diagonal,
    /// `σ · P_N[u(x) · Σ ΔW_n e_n(x)]` computed on the collocation grid.
    Pointwise,
    /// Mode `n` is `σ ΔW_n`, independent of the state.
    Additive,
}

impl FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "diagonal" => Ok(Self::Diagonal),
            "pointwise" => Ok(Self::Pointwise),
            "additive" => Ok(Self::Additive),
            other => Err(domain(format!(
                "unknown coupling '{other}' (expected diagonal, pointwise or additive)"
            ))),
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Diagonal => "diagonal",
            Self::Pointwise => "pointwise",
            Self::Additive => "additive",
        })
    }
}

/// Covariance `q_n = κ n^{−ρ_q}` of the Wiener process and the coupling `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub q_decay: f64,
    pub q_scale: f64,
    pub coupling: Coupling,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(q_decay: f64, q_scale: f64, coupling: Coupling, sigma: f64) -> Result<Self> {
        if !(q_decay > 1.0) || !q_decay.is_finite() {
            return Err(domain(format!("q_decay must be > 1 for trace-class Q (got {q_decay})")));
        }
        if !(q_scale >= 0.0) || !q_scale.is_finite() {
            return Err(domain(format!("q_scale must be >= 0 (got {q_scale})")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(domain(format!("sigma must be >= 0 (got {sigma})")));
        }
        Ok(Self {
            q_decay,
            q_scale,
            coupling,
            sigma,
        })
    }

    /// No noise at all: `σ = 0`, diagonal coupling.
    pub fn silent() -> Self {
        Self {
            q_decay: 2.0,
            q_scale: 1.0,
            coupling: Coupling::Diagonal,
            sigma: 0.0,
        }
    }

    /// `q_n` for 1-based `n`.
    pub fn q(&self, n: usize) -> f64 {
        self.q_scale * (n as f64).powf(-self.q_decay)
    }

    /// True when the stochastic term vanishes identically.
    pub fn is_silent(&self) -> bool {
        self.sigma == 0.0 || self.q_scale == 0.0
    }

    /// `Σ_{n≤N} q_n`, the truncated trace of Q.
    pub fn trace(&self, n_modes: usize) -> f64 {
        (1..=n_modes).map(|n| self.q(n)).sum()
    }

    /// `σ max_n √q_n`, the exact Lipschitz and growth constant of the
    /// diagonal coupling with respect to the Hilbert–Schmidt norm on `Q^{1/2}`.
    pub fn diagonal_lipschitz(&self) -> f64 {
        // q_n is decreasing, so the maximum sits at n = 1
        self.sigma * self.q(1).sqrt()
    }
}

/// `‖g(u) Q^{1/2}‖_{HS}` for the diagonal coupling: `σ (Σ_n q_n u_n²)^{1/2}`.
pub fn diagonal_hilbert_schmidt_norm(u: &SpectralField, spec: &NoiseSpec) -> f64 {
    spec.sigma
        * u.coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| spec.q(i + 1) * c * c)
            .sum::<f64>()
            .sqrt()
}

/// Per-mode Brownian increments `ΔW_n(k)` with variance `q_n Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    n_modes: usize,
    n_steps: usize,
    dt: f64,
    seed: u64,
    index: u64,
    // mode-major: increments[i * n_steps + k]
    increments: Vec<f64>,
}

impl NoisePath {
    /// An all-zero path, used by deterministic runs.
    pub fn zeros(n_modes: usize, n_steps: usize, dt: f64) -> Self {
        Self {
            n_modes,
            n_steps,
            dt,
            seed: 0,
            index: 0,
            increments: vec![0.0; n_modes * n_steps],
        }
    }

    /// Path from explicit increments laid out `[mode][step]`.
    pub fn from_increments(n_modes: usize, n_steps: usize, dt: f64, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != n_modes * n_steps {
            return Err(Error::SizeMismatch {
                what: "noise increments",
                expected: n_modes * n_steps,
                got: increments.len(),
            });
        }
        Ok(Self {
            n_modes,
            n_steps,
            dt,
            seed: 0,
            index: 0,
            increments,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `(master seed, path index)` the path was drawn from.
    pub fn provenance(&self) -> (u64, u64) {
        (self.seed, self.index)
    }

    /// `ΔW` of 0-based mode index `i` over step `k`, i.e. on `[kΔt, (k+1)Δt]`.
    pub fn increment(&self, i: usize, k: usize) -> f64 {
        self.increments[i * self.n_steps + k]
    }

    pub fn mode_increments(&self, i: usize) -> &[f64] {
        &self.increments[i * self.n_steps..(i + 1) * self.n_steps]
    }

    /// Increments of every mode over step `k`.
    pub fn step_increments(&self, k: usize) -> Vec<f64> {
        (0..self.n_modes).map(|i| self.increment(i, k)).collect()
    }

    /// Binary dump: `N, K` (u64), `dt` (f64), `seed, index` (u64), then the
    /// increments mode-major as f64, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(&(self.n_modes as u64).to_le_bytes())?;
        out.write_all(&(self.n_steps as u64).to_le_bytes())?;
        out.write_all(&self.dt.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&self.index.to_le_bytes())?;
        for x in &self.increments {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |input: &mut R| -> std::io::Result<[u8; 8]> {
            input.read_exact(&mut word)?;
            Ok(word)
        };
        let n_modes = u64::from_le_bytes(next(&mut input)?) as usize;
        let n_steps = u64::from_le_bytes(next(&mut input)?) as usize;
        let dt = f64::from_le_bytes(next(&mut input)?);
        let seed = u64::from_le_bytes(next(&mut input)?);
        let index = u64::from_le_bytes(next(&mut input)?);
        let len = n_modes
            .checked_mul(n_steps)
            .ok_or_else(|| precondition("noise dump header is corrupt"))?;
        let mut increments = Vec::with_capacity(len);
        for _ in 0..len {
            increments.push(f64::from_le_bytes(next(&mut input)?));
        }
        Ok(Self {
            n_modes,
            n_steps,
            dt,
            seed,
            index,
            increments,
        })
    }
}

/// Generator for one (master seed, path index) key; each mode reads its own stream.
pub(crate) fn keyed_rng(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&path_index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Standard normal by Box–Muller from exactly two uniform draws.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Draw the increments of path `path_index` under `master_seed`.
///
/// Mode `n` uses ChaCha stream `n` of the key `(master_seed, path_index)` and
/// step `k` consumes that stream's draws `2k, 2k+1`, so every increment is a
/// fixed function of `(master_seed, path_index, mode, step)`.
pub fn sample_path(
    spec: &NoiseSpec,
    basis: &SpectralBasis,
    dt: f64,
    n_steps: usize,
    master_seed: u64,
    path_index: u64,
) -> Result<NoisePath> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(domain(format!("dt must be > 0 (got {dt})")));
    }
    let n = basis.n_modes();
    let mut increments = Vec::with_capacity(n * n_steps);
    let mut rng = keyed_rng(master_seed, path_index);
    for mode in 1..=n {
        let sd = (spec.q(mode) * dt).sqrt();
        rng.set_stream(mode as u64);
        rng.set_word_pos(0);
        for _ in 0..n_steps {
            increments.push(sd * standard_normal(&mut rng));
        }
    }
    Ok(NoisePath {
        n_modes: n,
        n_steps,
        dt,
        seed: master_seed,
        index: path_index,
        increments,
    })
}

/// Galerkin projection of `B(u) = u ∂_x u`, by collocation on the basis grid.
pub fn nonlinearity(u: &SpectralField, basis: &SpectralBasis) -> Result<SpectralField> {
    let g = to_grid(u, basis)?;
    let d = basis.derivative_on_grid(u);
    let prod: Vec<f64> = g.iter().zip(&d).map(|(a, b)| a * b).collect();
    to_coeffs(&prod, basis)
}

/// `g(u) ΔW` for one step's increments `dw` (one entry per mode).
pub fn noise_coefficient(
    u: &SpectralField,
    spec: &NoiseSpec,
    dw: &[f64],
    basis: &SpectralBasis,
) -> Result<SpectralField> {
    basis.check(u)?;
    if dw.len() != basis.n_modes() {
        return Err(Error::SizeMismatch {
            what: "noise increments",
            expected: basis.n_modes(),
            got: dw.len(),
        });
    }
    let s = spec.sigma;
    if s == 0.0 {
        return Ok(SpectralField::zeros(u.len()));
    }
    match spec.coupling {
        Coupling::Diagonal => SpectralField::new(u.coeffs().iter().zip(dw).map(|(c, w)| s * c * w).collect()),
        Coupling::Additive => SpectralField::new(dw.iter().map(|w| s * w).collect()),
        Coupling::Pointwise => {
            let ug = to_grid(u, basis)?;
            let wg = to_grid(&SpectralField::new(dw.to_vec())?, basis)?;
            let prod: Vec<f64> = ug.iter().zip(&wg).map(|(a, b)| s * a * b).collect();
            to_coeffs(&prod, basis)
        }
    }
}

/// Largest observed ratios of the bilinear bounds at one truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionBReport {
    pub n_modes: usize,
    pub samples: usize,
    /// Sobolev index of the norm applied to `B`.
    pub s: f64,
    /// max `‖B(u)‖_{Ḣ^s} / ‖u‖²`.
    pub max_growth_ratio: f64,
    /// max `‖B(u) − B(v)‖_{Ḣ^s} / ((‖u‖ + ‖v‖)‖u − v‖)`.
    pub max_lipschitz_ratio: f64,
}

fn random_ball_field<R: Rng>(rng: &mut R, n: usize) -> SpectralField {
    let c: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radius = rng.random::<f64>();
    if norm == 0.0 {
        return SpectralField::zeros(n);
    }
    SpectralField::from_vec_unchecked(c.iter().map(|x| x * radius / norm).collect())
}

/// Sample fields in the unit ball and record the bilinear-bound ratios with
/// norm index `s` (the assumption uses `s = −1`). Zero denominators are skipped.
pub fn check_assumption_b(basis: &SpectralBasis, samples: usize, s: f64, seed: u64) -> Result<AssumptionBReport> {
    if samples == 0 {
        return Err(precondition("sample count must be >= 1"));
    }
    let n = basis.n_modes();
    let mut rng = keyed_rng(seed, u64::MAX);
    let mut growth = 0.0f64;
    let mut lip = 0.0f64;
    for _ in 0..samples {
        let u = random_ball_field(&mut rng, n);
        let v = random_ball_field(&mut rng, n);
        let bu = nonlinearity(&u, basis)?;
        let bv = nonlinearity(&v, basis)?;
        let nu = u.norm();
        if nu > 0.0 {
            growth = growth.max(sobolev_norm(&bu, s, basis)? / (nu * nu));
        }
        let d = u.sub(&v).norm();
        if d > 0.0 {
            let num = sobolev_norm(&bu.sub(&bv), s, basis)?;
            lip = lip.max(num / ((nu + v.norm()) * d));
        }
    }
    Ok(AssumptionBReport {
        n_modes: n,
        samples,
        s,
        max_growth_ratio: growth,
        max_lipschitz_ratio: lip,
    })
}
