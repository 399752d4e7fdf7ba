//! Configuration parsing, dispatch and CSV output for the `fracburgers` binary.
//!
//! The config format is one `key = value` per line; `#` starts a comment and
//! blank lines are ignored. Omitted keys take the defaults listed on
//! [`RunConfig::default`].

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{sample_path, Coupling, NoiseSpec};
use crate::error::{Error, Result};
use crate::experiments::{
    holder_exponent, log_grid, moment_estimate, operator_bound_scan, picard_convergence_study, write_moments_csv,
    write_scan_csv,
};
use crate::solver::{step_scheme, ModelParams};
use crate::specfun::{verify_identities, write_reports_csv};
use crate::spectral::{make_basis, min_grid_size, SpectralField};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FRACBURGERS_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Picard,
    Regularity,
    Moments,
    OperatorBounds,
    VerifySpecfun,
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simulate" => Ok(Self::Simulate),
            "picard" => Ok(Self::Picard),
            "regularity" => Ok(Self::Regularity),
            "moments" => Ok(Self::Moments),
            "operator-bounds" => Ok(Self::OperatorBounds),
            "verify-specfun" => Ok(Self::VerifySpecfun),
            other => Err(format!("unknown command '{other}'")),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simulate => "simulate",
            Self::Picard => "picard",
            Self::Regularity => "regularity",
            Self::Moments => "moments",
            Self::OperatorBounds => "operator-bounds",
            Self::VerifySpecfun => "verify-specfun",
        })
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub n_modes: usize,
    pub grid_size: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub sigma: f64,
    pub coupling: Coupling,
    pub q_decay: f64,
    pub q_scale: f64,
    pub p: u32,
    pub n_paths: usize,
    pub seed: u64,
    /// Leading coefficients of `u0`; the rest are zero.
    pub u0: Vec<f64>,
    pub advection: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RunConfig {
    /// α = 1.5, β = 0.5, ν = 0, N = 32, M = 48, Δt = 1e-3, K = 500, σ = 0.5,
    /// diagonal coupling, q_n = n^{−2}, p = 2, 100 paths, seed 42,
    /// u0 = e_1 + 0.5 e_2, advection 1, max_iter 25, tol 1e-8.
    fn default() -> Self {
        Self {
            command: Command::Simulate,
            alpha: 1.5,
            beta: 0.5,
            nu: 0.0,
            n_modes: 32,
            grid_size: 48,
            dt: 1e-3,
            n_steps: 500,
            sigma: 0.5,
            coupling: Coupling::Diagonal,
            q_decay: 2.0,
            q_scale: 1.0,
            p: 2,
            n_paths: 100,
            seed: 42,
            u0: vec![1.0, 0.5],
            advection: 1.0,
            max_iter: 25,
            tol: 1e-8,
        }
    }
}

const KEYS: [&str; 18] = [
    "alpha", "beta", "nu", "n_modes", "grid_size", "dt", "n_steps", "sigma", "coupling", "q_decay", "q_scale", "p",
    "n_paths", "seed", "u0", "advection", "max_iter", "tol",
];

fn config_err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config_err(line, key, format!("{key} must be a number (got '{v}')")))
}

fn parse_real(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(line, key, v)?;
    if !x.is_finite() {
        return Err(config_err(line, key, format!("{key} must be finite (got {v})")));
    }
    Ok(x)
}

/// Parse and validate a config text. The command defaults to `simulate`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    let mut grid_given = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, content, "expected key=value"))?;
        let (key, v) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(config_err(line, key, format!("unknown key '{key}'")));
        };
        if seen.iter().any(|(k, _)| *k == known) {
            return Err(config_err(line, key, format!("duplicate key '{key}'")));
        }
        seen.push((known, line));
        match known {
            "alpha" => {
                c.alpha = parse_real(line, key, v)?;
                if !(c.alpha > 1.0 && c.alpha <= 2.0) {
                    return Err(config_err(line, key, format!("alpha must be in (1,2] (got {v})")));
                }
            }
            "beta" => {
                c.beta = parse_real(line, key, v)?;
                if !(c.beta > 0.0 && c.beta <= 1.0) {
                    return Err(config_err(line, key, format!("beta must be in (0,1] (got {v})")));
                }
            }
            "nu" => {
                c.nu = parse_real(line, key, v)?;
                if c.nu < 0.0 {
                    return Err(config_err(line, key, format!("nu must be >= 0 (got {v})")));
                }
            }
            "n_modes" => {
                c.n_modes = parse_num(line, key, v)?;
                if c.n_modes == 0 {
                    return Err(config_err(line, key, "n_modes must be >= 1"));
                }
            }
            "grid_size" => {
                c.grid_size = parse_num(line, key, v)?;
                grid_given = true;
            }
            "dt" => {
                c.dt = parse_real(line, key, v)?;
                if c.dt <= 0.0 {
                    return Err(config_err(line, key, format!("dt must be > 0 (got {v})")));
                }
            }
            "n_steps" => {
                c.n_steps = parse_num(line, key, v)?;
                if c.n_steps == 0 {
                    return Err(config_err(line, key, "n_steps must be >= 1"));
                }
            }
            "sigma" => {
                c.sigma = parse_real(line, key, v)?;
                if c.sigma < 0.0 {
                    return Err(config_err(line, key, format!("sigma must be >= 0 (got {v})")));
                }
            }
            "coupling" => {
                c.coupling = v.parse().map_err(|e: Error| config_err(line, key, strip_kind(&e)))?;
            }
            "q_decay" => {
                c.q_decay = parse_real(line, key, v)?;
                if c.q_decay <= 1.0 {
                    return Err(config_err(line, key, format!("q_decay must be > 1 for trace-class Q (got {v})")));
                }
            }
            "q_scale" => {
                c.q_scale = parse_real(line, key, v)?;
                if c.q_scale < 0.0 {
                    return Err(config_err(line, key, format!("q_scale must be >= 0 (got {v})")));
                }
            }
            "p" => {
                c.p = parse_num(line, key, v)?;
                if c.p < 2 || c.p % 2 != 0 {
                    return Err(config_err(line, key, format!("p must be an even integer >= 2 (got {v})")));
                }
            }
            "n_paths" => {
                c.n_paths = parse_num(line, key, v)?;
                if c.n_paths == 0 {
                    return Err(config_err(line, key, "n_paths must be >= 1"));
                }
            }
            "seed" => c.seed = parse_num(line, key, v)?,
            "u0" => {
                c.u0 = v
                    .split(',')
                    .map(|x| parse_real(line, key, x.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "advection" => c.advection = parse_real(line, key, v)?,
            "max_iter" => {
                c.max_iter = parse_num(line, key, v)?;
                if c.max_iter == 0 {
                    return Err(config_err(line, key, "max_iter must be >= 1"));
                }
            }
            "tol" => {
                c.tol = parse_real(line, key, v)?;
                if c.tol <= 0.0 {
                    return Err(config_err(line, key, format!("tol must be > 0 (got {v})")));
                }
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }
    let line_of = |k: &str| seen.iter().find(|(s, _)| *s == k).map_or(0, |(_, l)| *l);
    if c.nu >= c.alpha {
        let key = if line_of("nu") > 0 { "nu" } else { "alpha" };
        return Err(config_err(
            line_of(key),
            key,
            format!("nu must be < alpha (got nu = {}, alpha = {})", c.nu, c.alpha),
        ));
    }
    if !grid_given {
        c.grid_size = min_grid_size(c.n_modes);
    } else if c.grid_size < min_grid_size(c.n_modes) {
        return Err(config_err(
            line_of("grid_size"),
            "grid_size",
            format!(
                "grid_size must be >= 3*n_modes/2 = {} (got {})",
                min_grid_size(c.n_modes),
                c.grid_size
            ),
        ));
    }
    if c.u0.len() > c.n_modes {
        return Err(config_err(
            line_of("u0"),
            "u0",
            format!("u0 has {} coefficients but n_modes is {}", c.u0.len(), c.n_modes),
        ));
    }
    Ok(c)
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::Domain(m) | Error::Precondition(m) => m.clone(),
        other => other.to_string(),
    }
}

impl RunConfig {
    pub fn model(&self) -> Result<(ModelParams, SpectralField)> {
        let basis = make_basis(self.n_modes, self.grid_size)?;
        let noise = NoiseSpec::new(self.q_decay, self.q_scale, self.coupling, self.sigma)?;
        let params = ModelParams::new(self.alpha, self.beta, self.nu, basis, noise, self.dt, self.n_steps)?
            .with_advection(self.advection);
        let u0 = SpectralField::from_leading(self.n_modes, &self.u0)?;
        Ok((params, u0))
    }
}

/// Write `name` inside `dir` through a temporary file and a rename.
pub fn write_atomic(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
        drop(w);
        fs::rename(&tmp, &target)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(target)
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// 0 on success, 3 when `verify-specfun` saw a failing identity.
    pub exit_code: i32,
}

/// Process exit code for an error: 2 for numerical blow-up, 4 for I/O, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } => 2,
        Error::Io(_) => 4,
        _ => 1,
    }
}

/// Dyadic lags used by `regularity`: `m, 2m, 4m, 8m` steps with `m = ⌊K/16⌋`,
/// from base time `T/2`.
pub fn regularity_lags(params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    let m = params.n_steps / 16;
    if m == 0 {
        return Err(crate::error::precondition("regularity needs n_steps >= 16"));
    }
    let k0 = params.n_steps / 2;
    Ok((
        k0 as f64 * params.dt,
        (0..4).map(|j| (m << j) as f64 * params.dt).collect(),
    ))
}

/// Grid times `K/4, K/2, 3K/4, K` (rounded down, duplicates removed) used by `moments`.
pub fn moment_times(params: &ModelParams) -> Vec<f64> {
    let k = params.n_steps;
    let mut ks: Vec<usize> = vec![k / 4, k / 2, 3 * k / 4, k];
    ks.dedup();
    ks.into_iter().map(|i| i as f64 * params.dt).collect()
}

/// Dispatch `config.command`, writing its CSV files into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let (params, u0) = config.model()?;
    let mut files = Vec::new();
    let summary;
    let mut code = 0;
    match config.command {
        Command::Simulate => {
            let table = params.kernel_table()?;
            let path = sample_path(&params.noise, &params.basis, params.dt, params.n_steps, config.seed, 0)?;
            let tr = step_scheme(&params, &u0, &path, &table)?;
            files.push(write_atomic(out_dir, "trajectory.csv", |w| tr.write_coefficients_csv(w))?);
            files.push(write_atomic(out_dir, "summary.csv", |w| {
                tr.write_summary_csv(params.nu, &params.basis, w)
            })?);
            files.push(write_atomic(out_dir, "noise.bin", |w| path.write_binary(w))?);
            summary = format!(
                "simulate: {} steps to T = {}, final |u| = {:.6e} (fingerprint {})",
                params.n_steps,
                params.final_time(),
                tr.last().norm(),
                tr.fingerprint
            );
        }
        Command::Picard => {
            let study = picard_convergence_study(&params, &u0, config.seed, config.max_iter, config.tol)?;
            files.push(write_atomic(out_dir, "picard.csv", |w| study.write_csv(w))?);
            summary = format!(
                "picard: {} iterations, converged = {}, final deviation from direct scheme {:.3e}",
                study.differences.len(),
                study.converged,
                study.final_deviation()
            );
        }
        Command::Regularity => {
            let (t_star, lags) = regularity_lags(&params)?;
            let fit = holder_exponent(&params, &u0, config.p, config.nu, t_star, &lags, config.n_paths, config.seed)?;
            files.push(write_atomic(out_dir, "holder.csv", |w| fit.write_csv(w))?);
            summary = format!(
                "regularity: slope {:.4} ± {:.4} over {} paths, theory gamma {}",
                fit.slope,
                fit.half_width,
                fit.n_paths,
                fit.theory_label()
            );
        }
        Command::Moments => {
            let times = moment_times(&params);
            let run = moment_estimate(&params, &u0, config.p, config.nu, &times, config.n_paths, config.seed)?;
            files.push(write_atomic(out_dir, "moments.csv", |w| write_moments_csv(&run.estimates, w))?);
            let max = run.estimates.iter().map(|e| e.mean).fold(0.0, f64::max);
            summary = format!(
                "moments: p = {}, max mean {:.6e}, {} paths excluded after blow-up",
                config.p,
                max,
                run.excluded.len()
            );
        }
        Command::OperatorBounds => {
            let ts = log_grid(1e-3, 1.0, 31);
            let rows = operator_bound_scan(
                &[1.2, 1.5, 1.8],
                &[0.5, 0.8],
                &[0.0, 0.5, 1.0],
                &ts,
                20,
                config.n_modes,
                config.seed,
            )?;
            files.push(write_atomic(out_dir, "operator_bounds.csv", |w| write_scan_csv(&rows, w))?);
            let worst = rows
                .iter()
                .filter(|r| r.nu == 0.0 && r.quantity == "relaxation_weighted_sup")
                .map(|r| r.value)
                .fold(0.0, f64::max);
            summary = format!("operator-bounds: {} rows, max zero-order relaxation ratio {:.12}", rows.len(), worst);
        }
        Command::VerifySpecfun => {
            let reports = verify_identities(&[0.3, 0.5, 0.8], 1e-6)?;
            files.push(write_atomic(out_dir, "specfun.csv", |w| write_reports_csv(&reports, w))?);
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                code = 3;
            }
            summary = format!("verify-specfun: {} identities checked, {} failed", reports.len(), failed);
        }
    }
    Ok(RunOutcome {
        files,
        summary,
        exit_code: code,
    })
}
