//! Flat `key = value` run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dispersive_vdw::experiments::{run_amplitude, DATUM_BOUND};
use dispersive_vdw::integrate::Scheme;
use dispersive_vdw::{Grid, PressureLaw, SystemKind};
use serde::Serialize;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "DVDW_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    UnknownKey(String),
    BadValue { key: String, value: String, reason: String },
    Syntax { line: usize, text: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey(k) => write!(f, "unknown config key '{k}'"),
            ConfigError::BadValue { key, value, reason } => {
                write!(f, "bad value '{value}' for '{key}': {reason}")
            }
            ConfigError::Syntax { line, text } => {
                write!(f, "config line {line}: expected 'key = value', got '{text}'")
            }
            ConfigError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: SystemKind,
    pub pressure: PressureLaw,
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub n_modes: usize,
    /// 0 selects `2K + 1`.
    pub n_points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub rho_max: f64,
    pub scheme: Scheme,
    pub store_every: usize,
    pub seed: u64,
    pub target_norm: f64,
    pub band_lo: usize,
    pub band_hi: usize,
    pub rescaled: bool,
    pub theorem_mode: bool,
    pub output_dir: PathBuf,
    pub name: Option<String>,
    pub jobs: usize,
    pub epsilons: Vec<f64>,
    pub sweep_dt_coeff: f64,
    pub sweep_t_end_coeff: f64,
    pub u_star: f64,
    pub ks: Vec<i64>,
    pub rho: f64,
    pub c: f64,
    pub c0: f64,
    pub picard_t_final: Option<f64>,
    pub picard_max_iter: usize,
    pub picard_samples: usize,
    pub picard_tol: f64,
    pub fields: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let output_dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("dvdw-out"));
        RunConfig {
            system: SystemKind::Regularized,
            pressure: PressureLaw::P0,
            epsilon: 0.1,
            alpha: 0.0,
            lambda: 0.2,
            n_modes: 16,
            n_points: 0,
            dt: 1e-4,
            t_end: 0.01,
            rho_max: 1.0,
            scheme: Scheme::ExpRk2,
            store_every: 1,
            seed: 0,
            target_norm: 0.15,
            band_lo: 1,
            band_hi: 8,
            rescaled: true,
            theorem_mode: false,
            output_dir,
            name: None,
            jobs: 0,
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            sweep_dt_coeff: 0.01,
            sweep_t_end_coeff: 100.0,
            u_star: 0.0,
            ks: vec![1, 2, 4, 8],
            rho: 0.5,
            c: 1.0,
            c0: 1.0,
            picard_t_final: None,
            picard_max_iter: 50,
            picard_samples: 512,
            picard_tol: 1e-10,
            fields: 100,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            reason: "expected true or false".into(),
        }),
    }
}

impl RunConfig {
    /// Keys accepted by [`RunConfig::set`], in schema order.
    pub const KEYS: &'static [&'static str] = &[
        "system", "pressure", "epsilon", "alpha", "lambda", "n_modes", "n_points", "dt",
        "t_end", "rho_max", "scheme", "store_every", "seed", "target_norm", "band_lo",
        "band_hi", "rescaled", "theorem_mode", "output_dir", "name", "jobs", "epsilons",
        "sweep_dt_coeff", "sweep_t_end_coeff", "u_star", "ks", "rho", "c", "c0",
        "picard_t_final", "picard_max_iter", "picard_samples", "picard_tol", "fields",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key.trim().replace('-', "_");
        let v = value.trim();
        match k.as_str() {
            "system" => self.system = parse(&k, v)?,
            "pressure" => self.pressure = parse(&k, v)?,
            "epsilon" => self.epsilon = parse(&k, v)?,
            "alpha" => self.alpha = parse(&k, v)?,
            "lambda" => self.lambda = parse(&k, v)?,
            "n_modes" => self.n_modes = parse(&k, v)?,
            "n_points" => self.n_points = parse(&k, v)?,
            "dt" => self.dt = parse(&k, v)?,
            "t_end" => self.t_end = parse(&k, v)?,
            "rho_max" => self.rho_max = parse(&k, v)?,
            "scheme" => self.scheme = parse(&k, v)?,
            "store_every" => self.store_every = parse(&k, v)?,
            "seed" => self.seed = parse(&k, v)?,
            "target_norm" => self.target_norm = parse(&k, v)?,
            "band_lo" => self.band_lo = parse(&k, v)?,
            "band_hi" => self.band_hi = parse(&k, v)?,
            "rescaled" => self.rescaled = parse_bool(&k, v)?,
            "theorem_mode" => self.theorem_mode = parse_bool(&k, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "name" => self.name = Some(v.to_string()),
            "jobs" => self.jobs = parse(&k, v)?,
            "epsilons" => self.epsilons = parse_list(&k, v)?,
            "sweep_dt_coeff" => self.sweep_dt_coeff = parse(&k, v)?,
            "sweep_t_end_coeff" => self.sweep_t_end_coeff = parse(&k, v)?,
            "u_star" => self.u_star = parse(&k, v)?,
            "ks" => self.ks = parse_list(&k, v)?,
            "rho" => self.rho = parse(&k, v)?,
            "c" => self.c = parse(&k, v)?,
            "c0" => self.c0 = parse(&k, v)?,
            "picard_t_final" => self.picard_t_final = Some(parse(&k, v)?),
            "picard_max_iter" => self.picard_max_iter = parse(&k, v)?,
            "picard_samples" => self.picard_samples = parse(&k, v)?,
            "picard_tol" => self.picard_tol = parse(&k, v)?,
            "fields" => self.fields = parse(&k, v)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Apply a `key = value` text. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.into(),
                });
            };
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> std::io::Result<Result<Self, ConfigError>> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = RunConfig::default();
        Ok(cfg.apply_text(&text).map(|_| cfg))
    }

    /// Hypotheses shared by every subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("every entry of epsilons must lie in (0, 1), got {e}"));
        }
        if !(self.target_norm > 0.0 && self.target_norm < DATUM_BOUND) {
            return bad(format!(
                "target_norm must lie in (0, 1/6), got {}",
                self.target_norm
            ));
        }
        if self.system == SystemKind::Modified && self.pressure != PressureLaw::P0 {
            return bad(format!(
                "the modified system requires pressure = p0, got {}",
                self.pressure
            ));
        }
        if self.system == SystemKind::Modified && !(self.lambda > 0.0) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha must be non-negative, got {}", self.alpha));
        }
        if self.theorem_mode && self.system == SystemKind::Regularized {
            let want = match self.pressure {
                PressureLaw::P1 => Some(0.5),
                PressureLaw::P2 => Some(0.25),
                PressureLaw::P0 => None,
            };
            if let Some(a) = want {
                if self.alpha != a {
                    return bad(format!(
                        "theorem mode requires alpha = {a} for {}, got {}",
                        self.pressure, self.alpha
                    ));
                }
            }
        }
        if self.n_modes == 0 {
            return bad("n_modes must be at least 1".into());
        }
        if self.n_points != 0 && self.n_points < 2 * self.n_modes + 1 {
            return bad(format!(
                "n_points must be 0 or at least 2*n_modes+1 = {}, got {}",
                2 * self.n_modes + 1,
                self.n_points
            ));
        }
        if !(self.band_lo >= 1 && self.band_lo <= self.band_hi && self.band_hi <= self.n_modes) {
            return bad(format!(
                "datum band must satisfy 1 <= band_lo <= band_hi <= n_modes, got [{}, {}]",
                self.band_lo, self.band_hi
            ));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.dt <= self.t_end) {
            return bad(format!(
                "need 0 < dt <= t_end, got dt = {}, t_end = {}",
                self.dt, self.t_end
            ));
        }
        if !(self.rho_max > 0.0) {
            return bad(format!("rho_max must be positive, got {}", self.rho_max));
        }
        if self.store_every == 0 {
            return bad("store_every must be at least 1".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        let n = if self.n_points == 0 {
            2 * self.n_modes + 1
        } else {
            self.n_points
        };
        Grid::new(self.n_modes, n).expect("validated grid")
    }

    /// `α` for the regularized system, `λ` for the modified one.
    pub fn alpha_or_lambda(&self) -> f64 {
        match self.system {
            SystemKind::Regularized => self.alpha,
            SystemKind::Modified => self.lambda,
        }
    }

    pub fn amplitude(&self) -> f64 {
        run_amplitude(self.system, self.epsilon, self.alpha_or_lambda())
    }

    pub fn conjugated(&self) -> bool {
        self.system == SystemKind::Modified
    }
}
