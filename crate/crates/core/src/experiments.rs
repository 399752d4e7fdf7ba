//! Monte Carlo estimators and operator scans.
//!
//! Paths run in parallel; results are gathered in path-index order before any
//! reduction, so every estimate is bit-reproducible for a given seed.

use std::io::Write;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dynamics::{keyed_rng, sample_path, standard_normal};
use crate::error::{precondition, Error, Result};
use crate::solver::{deterministic_run, picard_solve, step_scheme, ModelParams, Trajectory};
use crate::spectral::{make_basis, min_grid_size, ml_multipliers, sobolev_norm, KernelTable, MLKind, SpectralField};

/// Sample mean of `‖u(t)‖_{Ḣ^s}^p` over independent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub t: f64,
    pub p: u32,
    pub s: f64,
    pub mean: f64,
    pub std_error: f64,
    /// Paths that entered the mean (blown-up paths are excluded).
    pub n_paths: usize,
}

/// Moment estimates plus the indices of paths that blew up.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRun {
    pub estimates: Vec<MomentEstimate>,
    pub excluded: Vec<u64>,
}

fn check_even(p: u32) -> Result<()> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(precondition(format!("p must be an even integer >= 2 (got {p})")));
    }
    Ok(())
}

/// Grid index of time `t`; `t` must sit on the grid `kΔt`, `k ≤ K`.
pub fn step_index(t: f64, params: &ModelParams) -> Result<usize> {
    let k = (t / params.dt).round();
    if !(t >= 0.0) || (k * params.dt - t).abs() > 1e-9 * t.max(1.0) || k as usize > params.n_steps {
        return Err(precondition(format!(
            "time {t} is not a grid point k*dt with 0 <= k <= {} (dt = {})",
            params.n_steps, params.dt
        )));
    }
    Ok(k as usize)
}

/// Run every path and map each trajectory through `f`, in path order.
/// Blown-up paths come back as `None` with their index.
fn map_paths<T: Send>(
    params: &ModelParams,
    u0: &SpectralField,
    table: &KernelTable,
    n_paths: usize,
    seed: u64,
    f: impl Fn(&Trajectory) -> Result<T> + Sync,
) -> Result<(Vec<T>, Vec<u64>)> {
    let results: Vec<Result<Option<T>>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|idx| {
            let path = sample_path(&params.noise, &params.basis, params.dt, params.n_steps, seed, idx)?;
            match step_scheme(params, u0, &path, table) {
                Ok(tr) => f(&tr).map(Some),
                Err(Error::BlowUp { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut out = Vec::with_capacity(n_paths);
    let mut excluded = Vec::new();
    let mut first_blow_up = None;
    for (idx, r) in results.into_iter().enumerate() {
        match r? {
            Some(v) => out.push(v),
            None => {
                excluded.push(idx as u64);
                if first_blow_up.is_none() {
                    first_blow_up = Some(idx as u64);
                }
            }
        }
    }
    // more than 1% of the paths lost fails the run; rerun the first to surface its diagnostic
    if excluded.len() * 100 > n_paths {
        let idx = first_blow_up.expect("excluded is non-empty");
        let path = sample_path(&params.noise, &params.basis, params.dt, params.n_steps, seed, idx)?;
        step_scheme(params, u0, &path, table)?;
    }
    Ok((out, excluded))
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `E‖u(t)‖_{Ḣ^s}^p` at each requested grid time, over `n_paths` paths.
/// Without noise the single deterministic trajectory is used directly.
pub fn moment_estimate(
    params: &ModelParams,
    u0: &SpectralField,
    p: u32,
    s: f64,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<MomentRun> {
    check_even(p)?;
    if n_paths < 2 {
        return Err(precondition(format!("n_paths must be >= 2 for a standard error (got {n_paths})")));
    }
    let ks = times.iter().map(|&t| step_index(t, params)).collect::<Result<Vec<_>>>()?;
    let table = params.kernel_table()?;
    let basis = &params.basis;
    let norms_at = |tr: &Trajectory| -> Result<Vec<f64>> {
        ks.iter()
            .map(|&k| Ok(sobolev_norm(&tr.fields[k], s, basis)?.powi(p as i32)))
            .collect()
    };
    let (per_path, excluded) = if params.noise.is_silent() {
        let tr = deterministic_run(params, u0, &table)?;
        (vec![norms_at(&tr)?], Vec::new())
    } else {
        map_paths(params, u0, &table, n_paths, seed, norms_at)?
    };
    let used = if params.noise.is_silent() { n_paths } else { per_path.len() };
    let estimates = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let xs: Vec<f64> = per_path.iter().map(|v| v[i]).collect();
            let (mean, std_error) = mean_and_stderr(&xs);
            MomentEstimate {
                t,
                p,
                s,
                mean,
                std_error,
                n_paths: used,
            }
        })
        .collect();
    Ok(MomentRun { estimates, excluded })
}

/// CSV rows `t,p,s,mean,stderr,n_paths`.
pub fn write_moments_csv<W: Write>(estimates: &[MomentEstimate], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,p,s,mean,stderr,n_paths")?;
    for e in estimates {
        writeln!(out, "{},{},{},{:e},{:e},{}", e.t, e.p, e.s, e.mean, e.std_error, e.n_paths)?;
    }
    Ok(())
}

/// `γ = min{βν/α, [pβ(α−ν−1) − α]/(pα), [2pβ(α−ν) − (p+2)α]/(2pα)}`, the
/// temporal Hölder exponent for lags below 1. May be negative.
pub fn theory_gamma(alpha: f64, beta: f64, nu: f64, p: f64) -> f64 {
    let a = beta * nu / alpha;
    let b = (p * beta * (alpha - nu - 1.0) - alpha) / (p * alpha);
    let c = (2.0 * p * beta * (alpha - nu) - (p + 2.0) * alpha) / (2.0 * p * alpha);
    a.min(b).min(c)
}

/// Log-log fit of increment moments against lags.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    pub lags: Vec<f64>,
    /// `(E‖u(t*+h) − u(t*)‖_{Ḣ^s}^p)^{1/p}` per lag.
    pub moments: Vec<f64>,
    pub slope: f64,
    /// 95% half-width of the slope from the fit residuals.
    pub half_width: f64,
    /// Unclamped theoretical exponent; see [`HolderFit::theory_label`].
    pub theory_gamma: f64,
    pub n_paths: usize,
}

impl HolderFit {
    /// Theoretical exponent clamped at 0, or "vacuous" when it is not positive.
    pub fn theory_label(&self) -> String {
        if self.theory_gamma > 0.0 {
            format!("{}", self.theory_gamma)
        } else {
            "vacuous".to_string()
        }
    }

    /// CSV rows `lag,moment,slope,ci,gamma_theory`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lag,moment,slope,ci,gamma_theory")?;
        let label = self.theory_label();
        for (h, m) in self.lags.iter().zip(&self.moments) {
            writeln!(out, "{h},{m:e},{},{},{label}", self.slope, self.half_width)?;
        }
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs` and its 95% half-width.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    let df = n - 2.0;
    let se = (ssr / df / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, df).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
    (slope, q * se)
}

/// Fit the temporal Hölder exponent at base time `t_star` from dyadic lags.
#[allow(clippy::too_many_arguments)]
pub fn holder_exponent(
    params: &ModelParams,
    u0: &SpectralField,
    p: u32,
    s: f64,
    t_star: f64,
    lags: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<HolderFit> {
    check_even(p)?;
    if lags.len() < 4 {
        return Err(precondition(format!("need at least 4 lags (got {})", lags.len())));
    }
    if !(lags[0] > 0.0) {
        return Err(precondition("lags must be positive"));
    }
    for w in lags.windows(2) {
        if ((w[1] / w[0]) - 2.0).abs() > 1e-9 {
            return Err(precondition(format!("lags must be dyadic and increasing ({} then {})", w[0], w[1])));
        }
    }
    if n_paths < 1 {
        return Err(precondition("n_paths must be >= 1"));
    }
    let k0 = step_index(t_star, params)?;
    let ks = lags
        .iter()
        .map(|&h| step_index(t_star + h, params))
        .collect::<Result<Vec<_>>>()?;
    let table = params.kernel_table()?;
    let basis = &params.basis;
    let incs = |tr: &Trajectory| -> Result<Vec<f64>> {
        ks.iter()
            .map(|&k| Ok(sobolev_norm(&tr.fields[k].sub(&tr.fields[k0]), s, basis)?.powi(p as i32)))
            .collect()
    };
    let (per_path, used) = if params.noise.is_silent() {
        let tr = deterministic_run(params, u0, &table)?;
        (vec![incs(&tr)?], n_paths)
    } else {
        let (v, _) = map_paths(params, u0, &table, n_paths, seed, incs)?;
        let used = v.len();
        (v, used)
    };
    let moments: Vec<f64> = (0..lags.len())
        .map(|i| (per_path.iter().map(|v| v[i]).sum::<f64>() / per_path.len() as f64).powf(1.0 / p as f64))
        .collect();
    if let Some((h, _)) = lags.iter().zip(&moments).find(|(_, m)| !(**m > 0.0)) {
        return Err(precondition(format!("increment moment at lag {h} is not positive; configuration is degenerate")));
    }
    let xs: Vec<f64> = lags.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
    let (slope, half_width) = fit_slope(&xs, &ys);
    Ok(HolderFit {
        lags: lags.to_vec(),
        moments,
        slope,
        half_width,
        theory_gamma: theory_gamma(params.alpha, params.beta, params.nu, p as f64),
        n_paths: used,
    })
}

/// One scalar of the operator scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub quantity: String,
    pub value: f64,
}

/// Start of the window used for difference quotients.
pub const SCAN_T0: f64 = 0.1;

/// Random unit-norm fields for the scan; field `f` uses key `(seed, f)`.
///
/// Coefficients are `ξ_n / n` with standard normal `ξ_n`, normalized. The
/// profile is square-summable, so truncations at different `N` see nearly the
/// same fields; iid coefficients would instead dilute every mode like `N^{−1/2}`.
pub fn random_unit_fields(n_modes: usize, count: usize, seed: u64) -> Vec<SpectralField> {
    (0..count as u64)
        .map(|f| {
            let mut rng = keyed_rng(seed, f);
            let c: Vec<f64> = (1..=n_modes).map(|n| standard_normal(&mut rng) / n as f64).collect();
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            SpectralField::from_vec_unchecked(c.iter().map(|x| x / norm).collect())
        })
        .collect()
}

/// For every `(α, β, ν)` and both operator families (`relaxation` = `E_β(t)`,
/// `kernel` = `E_{β,β}(t)`), the suprema over unit random fields of
/// - `weighted_sup`: `t^{βν/α} ‖E(t)v‖_{Ḣ^ν}` over the whole `t` grid,
/// - `diff_sup`: `(t₂−t₁)^{−βν/α} ‖(E(t₂)−E(t₁))v‖_{Ḣ^ν}`,
/// - `lipschitz_sup`: `(t₂−t₁)^{−1} ‖(E(t₂)−E(t₁))v‖_{Ḣ^ν}`,
///
/// the last two over grid pairs `t₁ < t₂` inside `[0.1, 1]`.
pub fn operator_bound_scan(
    alphas: &[f64],
    betas: &[f64],
    nus: &[f64],
    ts: &[f64],
    n_fields: usize,
    n_modes: usize,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    if alphas.is_empty() || betas.is_empty() || nus.is_empty() || ts.is_empty() {
        return Err(precondition("scan grids must be non-empty"));
    }
    if let Some(t) = ts.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(precondition(format!("t grid must lie in (0,1] (got {t})")));
    }
    if n_fields == 0 {
        return Err(precondition("n_fields must be >= 1"));
    }
    let basis = make_basis(n_modes, min_grid_size(n_modes))?;
    let fields = random_unit_fields(n_modes, n_fields, seed);
    let window: Vec<usize> = (0..ts.len()).filter(|&i| ts[i] >= SCAN_T0 - 1e-12).collect();
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            for (label, kind) in [("relaxation", MLKind::Relaxation), ("kernel", MLKind::Kernel)] {
                let mult = ts
                    .iter()
                    .map(|&t| ml_multipliers(kind, t, alpha, beta, &basis))
                    .collect::<Result<Vec<_>>>()?;
                for &nu in nus {
                    let w: Vec<f64> = basis.eigenvalues().iter().map(|l| l.powf(nu)).collect();
                    let hnorm = |a: &[f64], b: Option<&[f64]>, v: &SpectralField| -> f64 {
                        v.coeffs()
                            .iter()
                            .enumerate()
                            .map(|(i, c)| {
                                let m = a[i] - b.map_or(0.0, |b| b[i]);
                                w[i] * (m * c).powi(2)
                            })
                            .sum::<f64>()
                            .sqrt()
                    };
                    let e = beta * nu / alpha;
                    let mut weighted = 0.0f64;
                    let mut diff = 0.0f64;
                    let mut lip = 0.0f64;
                    for v in &fields {
                        for (ti, &t) in ts.iter().enumerate() {
                            weighted = weighted.max(t.powf(e) * hnorm(&mult[ti], None, v));
                        }
                        for (a, &i1) in window.iter().enumerate() {
                            for &i2 in &window[a + 1..] {
                                let gap = ts[i2] - ts[i1];
                                if gap <= 0.0 {
                                    continue;
                                }
                                let d = hnorm(&mult[i2], Some(&mult[i1]), v);
                                diff = diff.max(d / gap.powf(e));
                                lip = lip.max(d / gap);
                            }
                        }
                    }
                    for (q, value) in [("weighted_sup", weighted), ("diff_sup", diff), ("lipschitz_sup", lip)] {
                        rows.push(ScanRow {
                            alpha,
                            beta,
                            nu,
                            quantity: format!("{label}_{q}"),
                            value,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// `n` points log-spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// CSV rows `alpha,beta,nu,quantity,value`.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "alpha,beta,nu,quantity,value")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{:e}", r.alpha, r.beta, r.nu, r.quantity, r.value)?;
    }
    Ok(())
}

/// Picard differences and deviations from the direct scheme on one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardStudy {
    /// `sup_k ‖u_{n+1}(t_k) − u_n(t_k)‖`, `n = 0, 1, ...`.
    pub differences: Vec<f64>,
    /// `sup_k ‖u_{n+1}(t_k) − u(t_k)‖` against the direct scheme.
    pub deviations: Vec<f64>,
    pub converged: bool,
}

impl PicardStudy {
    pub fn final_deviation(&self) -> f64 {
        *self.deviations.last().expect("at least one iteration")
    }

    /// CSV rows `iteration,sup_diff,deviation,converged`; row `n` describes iterate `n+1`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,sup_diff,deviation,converged")?;
        for (n, (d, v)) in self.differences.iter().zip(&self.deviations).enumerate() {
            writeln!(out, "{},{d:e},{v:e},{}", n + 1, self.converged)?;
        }
        Ok(())
    }
}

/// Run the Picard iteration on path 0 of `seed` and compare every iterate
/// with the direct scheme on the same path.
pub fn picard_convergence_study(
    params: &ModelParams,
    u0: &SpectralField,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<PicardStudy> {
    let table = params.kernel_table()?;
    let path = sample_path(&params.noise, &params.basis, params.dt, params.n_steps, seed, 0)?;
    let direct = step_scheme(params, u0, &path, &table)?;
    let r = picard_solve(params, u0, &path, &table, max_iter, tol)?;
    let deviations = r.iterates[1..].iter().map(|it| it.sup_distance(&direct)).collect();
    Ok(PicardStudy {
        differences: r.differences,
        deviations,
        converged: r.converged,
    })
}
