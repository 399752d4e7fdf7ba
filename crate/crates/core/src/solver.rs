//! Time stepping of the discretized mild solution and the Picard iteration.
//!
//! With `μ_n = λ_n^{α/2}`, propagators `P_n(k)` and weights `w_n(k)` from a
//! [`KernelTable`], both constructions evaluate
//!
//! `u_n(t_k) = P_n(k) u0_n + Σ_{j<k} w_n(k−j) [a B(u(t_j))_n + (g(u(t_j)) ΔW(j))_n / Δt]`
//!
//! with the integrands frozen at the left end of each step.

use std::io::Write;

use crate::dynamics::{noise_coefficient, nonlinearity, NoisePath, NoiseSpec};
use crate::error::{domain, precondition, Error, Result};
use crate::spectral::{build_kernel_table, KernelTable, SpectralBasis, SpectralField};

/// Coefficients above this magnitude abort a run.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

/// All equation parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    /// Norm index used for reporting.
    pub nu: f64,
    pub basis: SpectralBasis,
    pub noise: NoiseSpec,
    pub dt: f64,
    pub n_steps: usize,
    /// Coefficient `a` in front of `B(u)`; 1 is the default sign, 0 switches
    /// the nonlinearity off, −1 flips it.
    pub advection: f64,
}

impl ModelParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        nu: f64,
        basis: SpectralBasis,
        noise: NoiseSpec,
        dt: f64,
        n_steps: usize,
    ) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(domain(format!("alpha must be in (1,2] (got {alpha})")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(domain(format!("beta must be in (0,1] (got {beta})")));
        }
        if !(nu >= 0.0 && nu < alpha) {
            return Err(domain(format!("nu must satisfy 0 <= nu < alpha = {alpha} (got {nu})")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(domain(format!("dt must be > 0 (got {dt})")));
        }
        if n_steps == 0 {
            return Err(precondition("n_steps must be >= 1"));
        }
        Ok(Self {
            alpha,
            beta,
            nu,
            basis,
            noise,
            dt,
            n_steps,
            advection: 1.0,
        })
    }

    pub fn with_advection(mut self, a: f64) -> Self {
        self.advection = a;
        self
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn final_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    /// True at the classical boundary values α = 2 or β = 1.
    pub fn reduction_mode(&self) -> bool {
        self.alpha == 2.0 || self.beta == 1.0
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    pub fn kernel_table(&self) -> Result<KernelTable> {
        build_kernel_table(self.alpha, self.beta, self.dt, self.n_steps, &self.basis)
    }

    /// FNV-1a hash of every parameter, as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for f in [
            self.alpha,
            self.beta,
            self.nu,
            self.dt,
            self.noise.q_decay,
            self.noise.q_scale,
            self.noise.sigma,
            self.advection,
        ] {
            eat(f.to_bits());
        }
        eat(self.basis.n_modes() as u64);
        eat(self.basis.grid_size() as u64);
        eat(self.n_steps as u64);
        eat(self.noise.coupling as u64);
        format!("{h:016x}")
    }

    fn check_table(&self, table: &KernelTable) -> Result<()> {
        if table.alpha() != self.alpha || table.beta() != self.beta || table.dt() != self.dt {
            return Err(precondition("kernel table was built for different (alpha, beta, dt)"));
        }
        if table.n_modes() != self.n_modes() {
            return Err(Error::SizeMismatch {
                what: "kernel table modes",
                expected: self.n_modes(),
                got: table.n_modes(),
            });
        }
        if table.n_steps() < self.n_steps {
            return Err(Error::SizeMismatch {
                what: "kernel table steps",
                expected: self.n_steps,
                got: table.n_steps(),
            });
        }
        Ok(())
    }

    fn check_path(&self, path: &NoisePath) -> Result<()> {
        if path.n_modes() != self.n_modes() {
            return Err(Error::SizeMismatch {
                what: "noise path modes",
                expected: self.n_modes(),
                got: path.n_modes(),
            });
        }
        if path.n_steps() < self.n_steps {
            return Err(Error::SizeMismatch {
                what: "noise path steps",
                expected: self.n_steps,
                got: path.n_steps(),
            });
        }
        if path.dt() != self.dt {
            return Err(precondition(format!(
                "noise path dt {} differs from model dt {}",
                path.dt(),
                self.dt
            )));
        }
        Ok(())
    }
}

/// Fields `u(t_k)`, `k = 0..K`, of one noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub fields: Vec<SpectralField>,
    pub fingerprint: String,
    /// `(master seed, path index)` of the driving noise.
    pub provenance: (u64, u64),
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn last(&self) -> &SpectralField {
        self.fields.last().expect("trajectory holds u(t_0)")
    }

    /// `max_k ‖u(t_k) − v(t_k)‖` over the common steps.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.sub(b).norm())
            .fold(0.0, f64::max)
    }

    /// CSV rows `t,mode,coefficient` with 1-based modes.
    pub fn write_coefficients_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,mode,coefficient")?;
        for (k, f) in self.fields.iter().enumerate() {
            let t = self.time(k);
            for (i, c) in f.coeffs().iter().enumerate() {
                writeln!(out, "{t},{},{c:e}", i + 1)?;
            }
        }
        Ok(())
    }

    /// CSV rows `t,norm,norm_nu`.
    pub fn write_summary_csv<W: Write>(&self, nu: f64, basis: &SpectralBasis, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,norm,norm_nu")?;
        for (k, f) in self.fields.iter().enumerate() {
            let hn = crate::spectral::sobolev_norm(f, nu, basis).map_err(std::io::Error::other)?;
            writeln!(out, "{},{:e},{:e}", self.time(k), f.norm(), hn)?;
        }
        Ok(())
    }
}

/// Integrand of the convolution at step `j`, mode by mode:
/// `a B(u)_n + (g(u) ΔW(j))_n / Δt`.
fn forcing(params: &ModelParams, u: &SpectralField, path: &NoisePath, j: usize) -> Result<Vec<f64>> {
    let n = params.n_modes();
    let mut f = vec![0.0; n];
    if params.advection != 0.0 {
        let b = nonlinearity(u, &params.basis)?;
        for (fi, bi) in f.iter_mut().zip(b.coeffs()) {
            *fi += params.advection * bi;
        }
    }
    if !params.noise.is_silent() {
        let g = noise_coefficient(u, &params.noise, &path.step_increments(j), &params.basis)?;
        for (fi, gi) in f.iter_mut().zip(g.coeffs()) {
            *fi += gi / params.dt;
        }
    }
    Ok(f)
}

/// `u(t_k)` from `u0` and the step integrands `f_0..f_{k−1}` (stored per step).
fn mild_value(table: &KernelTable, u0: &SpectralField, forcing: &[Vec<f64>], k: usize, step: usize) -> Result<SpectralField> {
    let n = u0.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let w = table.weights_of(i);
        let mut acc = table.propagator(i, k) * u0.coeffs()[i];
        for (j, f) in forcing[..k].iter().enumerate() {
            acc += w[k - j] * f[i];
        }
        if !acc.is_finite() || acc.abs() > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp {
                step,
                mode: i + 1,
                value: acc,
            });
        }
        out.push(acc);
    }
    Ok(SpectralField::from_vec_unchecked(out))
}

/// March the discretized mild solution from `u0` along `path`.
pub fn step_scheme(
    params: &ModelParams,
    u0: &SpectralField,
    path: &NoisePath,
    table: &KernelTable,
) -> Result<Trajectory> {
    params.basis.check(u0)?;
    params.check_table(table)?;
    params.check_path(path)?;
    let k_max = params.n_steps;
    let mut fields = Vec::with_capacity(k_max + 1);
    fields.push(u0.clone());
    let mut rhs: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        rhs.push(forcing(params, &fields[k - 1], path, k - 1)?);
        fields.push(mild_value(table, u0, &rhs, k, k)?);
    }
    Ok(Trajectory {
        dt: params.dt,
        fields,
        fingerprint: params.fingerprint(),
        provenance: path.provenance(),
    })
}

/// Iterates of the Picard scheme and whether it met the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    /// Iterate 0 is the constant trajectory `u0`.
    pub iterates: Vec<Trajectory>,
    /// `sup_k ‖u_{n+1}(t_k) − u_n(t_k)‖` for `n = 0, 1, ...`.
    pub differences: Vec<f64>,
    pub converged: bool,
}

impl PicardResult {
    pub fn last(&self) -> &Trajectory {
        self.iterates.last().expect("iterate 0 is always present")
    }
}

/// Picard iteration on a fixed noise path: each iterate is the mild map
/// applied to the whole previous iterate. Stops once successive iterates
/// differ by less than `tol` in the sup-in-time L² norm, or after `max_iter`
/// corrections.
pub fn picard_solve(
    params: &ModelParams,
    u0: &SpectralField,
    path: &NoisePath,
    table: &KernelTable,
    max_iter: usize,
    tol: f64,
) -> Result<PicardResult> {
    if max_iter == 0 {
        return Err(precondition("max_iter must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(precondition(format!("tol must be > 0 (got {tol})")));
    }
    params.basis.check(u0)?;
    params.check_table(table)?;
    params.check_path(path)?;
    let k_max = params.n_steps;
    let start = Trajectory {
        dt: params.dt,
        fields: vec![u0.clone(); k_max + 1],
        fingerprint: params.fingerprint(),
        provenance: path.provenance(),
    };
    let mut iterates = vec![start];
    let mut differences = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let prev = iterates.last().expect("non-empty");
        let rhs = prev.fields[..k_max]
            .iter()
            .enumerate()
            .map(|(j, u)| forcing(params, u, path, j))
            .collect::<Result<Vec<_>>>()?;
        let mut fields = Vec::with_capacity(k_max + 1);
        fields.push(u0.clone());
        for k in 1..=k_max {
            fields.push(mild_value(table, u0, &rhs, k, k)?);
        }
        let next = Trajectory {
            fields,
            ..prev.clone()
        };
        let d = next.sup_distance(prev);
        differences.push(d);
        iterates.push(next);
        if d < tol {
            converged = true;
            break;
        }
    }
    Ok(PicardResult {
        iterates,
        differences,
        converged,
    })
}

/// Relative residual of the equation at every step `k = 1..K`:
/// `‖D^β u(t_k) + A^{α/2} u(t_k) − a B(u(t_k))‖ / ‖A^{α/2} u(t_k)‖`, with the
/// Caputo derivative by the L1 formula
/// `D^β u(t_k) ≈ Δt^{−β}/Γ(2−β) Σ_{j<k} b_j (u_{k−j} − u_{k−j−1})`,
/// `b_j = (j+1)^{1−β} − j^{1−β}`. Entry `k−1` belongs to step `k`; a 0/0 ratio is 0.
pub fn caputo_residual_profile(traj: &Trajectory, params: &ModelParams) -> Result<Vec<f64>> {
    if !params.noise.is_silent() {
        return Err(precondition("the Caputo residual needs a deterministic trajectory (sigma = 0)"));
    }
    for f in &traj.fields {
        params.basis.check(f)?;
    }
    let beta = params.beta;
    let k_max = traj.n_steps();
    let scale = traj.dt.powf(-beta) / crate::specfun::gamma_fn(2.0 - beta)?;
    let b: Vec<f64> = (0..k_max)
        .map(|j| match j {
            // 0^{1−β} is 0 for β < 1; powf would give 1 at β = 1
            0 => 1.0,
            _ => ((j + 1) as f64).powf(1.0 - beta) - (j as f64).powf(1.0 - beta),
        })
        .collect();
    let rates = params.basis.rates(params.alpha);
    let n = params.n_modes();
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut d = vec![0.0; n];
        for (j, bj) in b[..k].iter().enumerate() {
            let hi = traj.fields[k - j].coeffs();
            let lo = traj.fields[k - j - 1].coeffs();
            for i in 0..n {
                d[i] += bj * (hi[i] - lo[i]);
            }
        }
        let u = &traj.fields[k];
        let bu = if params.advection != 0.0 {
            Some(nonlinearity(u, &params.basis)?)
        } else {
            None
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let au = rates[i] * u.coeffs()[i];
            let adv = bu.as_ref().map_or(0.0, |b| params.advection * b.coeffs()[i]);
            let r = scale * d[i] + au - adv;
            num += r * r;
            den += au * au;
        }
        out.push(if den == 0.0 { if num == 0.0 { 0.0 } else { f64::INFINITY } } else { (num / den).sqrt() });
    }
    Ok(out)
}

/// Maximum of [`caputo_residual_profile`] over the interior steps
/// `⌈K/10⌉ ≤ k ≤ K`; the first tenth of the run, where the L1 formula has not
/// yet resolved the `t^{β}`-type startup layer, is left out.
pub fn caputo_residual(traj: &Trajectory, params: &ModelParams) -> Result<f64> {
    let profile = caputo_residual_profile(traj, params)?;
    let k_max = profile.len();
    let first = k_max.div_ceil(10).max(1);
    Ok(profile[first - 1..].iter().copied().fold(0.0, f64::max))
}

/// Run [`step_scheme`] with all noise switched off.
pub fn deterministic_run(params: &ModelParams, u0: &SpectralField, table: &KernelTable) -> Result<Trajectory> {
    let quiet = params.clone().with_noise(NoiseSpec {
        sigma: 0.0,
        ..params.noise
    });
    let path = NoisePath::zeros(params.n_modes(), params.n_steps, params.dt);
    step_scheme(&quiet, u0, &path, table)
}
