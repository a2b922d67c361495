//! `dvdw` command-line driver.
//!
//! Exit codes: 0 success, 1 validation or I/O error, 2 failed verification.

// `!(x > 0.0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use dispersive_vdw::experiments::{
    continuation_schedule, growth_experiment, lemma_m_suite_with, make_datum, scaling_sweep,
    DatumSpec, SweepTiming,
};
use dispersive_vdw::integrate::{
    diagnose_reduced, picard_solve_sampled, solve_full, solve_reduced, IntegratorConfig,
};
use dispersive_vdw::jets::{ibp_once_p2, implicit_residual, ode_jet, IbpCoefficients};
use dispersive_vdw::normalform::{
    additive_remainder, cancellation_residual, NormalFormSetting, ReducedState,
};
use dispersive_vdw::spectral::random_field;
use dispersive_vdw::{Grid, PressureLaw, SpectralField, State, SystemSpec};

pub use config::{ConfigError, RunConfig};
use output::{
    csv_bytes, fmt_f64, json_bytes, status_label, trajectory_csv, trajectory_rows, write_atomic,
    Manifest, TrajectoryRow,
};

#[derive(Debug, Parser)]
#[command(name = "dvdw", version, about = "Simulations and checks for the dispersive Van der Waals system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory; writes a CSV and a JSON manifest.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        stepping: Stepping,
    },
    /// Run the identity and residual suites; exit 2 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Random fields per identity suite.
        #[arg(long)]
        fields: Option<String>,
    },
    /// Existence-time proxy over a list of ε, with the log-log slope.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        stepping: Stepping,
        /// Comma-separated ε values.
        #[arg(long)]
        epsilons: Option<String>,
        /// Time step is dt_coeff·ε².
        #[arg(long)]
        dt_coeff: Option<String>,
        /// Final time is t_end_coeff·ε².
        #[arg(long)]
        t_end_coeff: Option<String>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        jobs: Option<String>,
    },
    /// Linearized growth rates of single modes about (u*, 0).
    Growth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        u_star: Option<String>,
        /// Comma-separated wavenumbers.
        #[arg(long)]
        ks: Option<String>,
    },
    /// Continuation schedule of radii and times.
    Continue {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        c: Option<String>,
        #[arg(long)]
        c0: Option<String>,
    },
    /// Picard iteration of the reduced system on [0, T].
    Picard {
        #[command(flatten)]
        common: Common,
        /// Horizon T (default 0.1 ε²).
        #[arg(long)]
        t_final: Option<String>,
        #[arg(long)]
        max_iter: Option<String>,
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        tol: Option<String>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// regularized | modified
    #[arg(long)]
    system: Option<String>,
    /// p0 | p1 | p2
    #[arg(long)]
    pressure: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    n_modes: Option<String>,
    #[arg(long)]
    n_points: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    target_norm: Option<String>,
    #[arg(long)]
    band_lo: Option<String>,
    #[arg(long)]
    band_hi: Option<String>,
    /// Defaults to $DVDW_OUTPUT_DIR, then ./dvdw-out.
    #[arg(long)]
    output_dir: Option<String>,
    /// Basename of the output files (defaults to the subcommand).
    #[arg(long)]
    name: Option<String>,
    /// Enforce the amplitude exponents of the existence theorems.
    #[arg(long)]
    theorem_mode: bool,
    /// Any config key, as KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct Stepping {
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    /// Blow-up threshold on max(‖w1‖_H¹, ‖w2‖_L²).
    #[arg(long)]
    rho_max: Option<String>,
    /// exp_rk2 | exp_euler
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    store_every: Option<String>,
    /// true | false
    #[arg(long)]
    rescaled: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
    Run(dispersive_vdw::Error),
    /// A check ran and failed.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Verification(e) => write!(f, "verification failed: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<dispersive_vdw::Error> for CliError {
    fn from(e: dispersive_vdw::Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn push(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<String>) {
    if let Some(v) = v {
        out.push((key, v.clone()));
    }
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut o = vec![];
        push(&mut o, "system", &self.system);
        push(&mut o, "pressure", &self.pressure);
        push(&mut o, "epsilon", &self.epsilon);
        push(&mut o, "alpha", &self.alpha);
        push(&mut o, "lambda", &self.lambda);
        push(&mut o, "n_modes", &self.n_modes);
        push(&mut o, "n_points", &self.n_points);
        push(&mut o, "seed", &self.seed);
        push(&mut o, "target_norm", &self.target_norm);
        push(&mut o, "band_lo", &self.band_lo);
        push(&mut o, "band_hi", &self.band_hi);
        push(&mut o, "output_dir", &self.output_dir);
        push(&mut o, "name", &self.name);
        if self.theorem_mode {
            o.push(("theorem_mode", "true".into()));
        }
        o
    }

    /// Defaults, then the config file, then `--set`, then dedicated flags.
    fn resolve(&self, extra: Vec<(&'static str, String)>) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))??,
            None => RunConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                ConfigError::Invalid(format!("--set expects KEY=VALUE, got '{kv}'"))
            })?;
            cfg.set(k, v)?;
        }
        for (k, v) in self.overrides().into_iter().chain(extra) {
            cfg.set(k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Stepping {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut o = vec![];
        push(&mut o, "dt", &self.dt);
        push(&mut o, "t_end", &self.t_end);
        push(&mut o, "rho_max", &self.rho_max);
        push(&mut o, "scheme", &self.scheme);
        push(&mut o, "store_every", &self.store_every);
        push(&mut o, "rescaled", &self.rescaled);
        o
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("dvdw: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate { common, stepping } => {
            let cfg = common.resolve(stepping.overrides())?;
            simulate(&cfg)
        }
        Command::Verify { common, fields } => {
            let mut extra = vec![];
            push(&mut extra, "fields", &fields);
            verify(&common.resolve(extra)?)
        }
        Command::Sweep {
            common,
            stepping,
            epsilons,
            dt_coeff,
            t_end_coeff,
            jobs,
        } => {
            let mut extra = stepping.overrides();
            push(&mut extra, "epsilons", &epsilons);
            push(&mut extra, "sweep_dt_coeff", &dt_coeff);
            push(&mut extra, "sweep_t_end_coeff", &t_end_coeff);
            push(&mut extra, "jobs", &jobs);
            sweep(&common.resolve(extra)?)
        }
        Command::Growth { common, u_star, ks } => {
            let mut extra = vec![];
            push(&mut extra, "u_star", &u_star);
            push(&mut extra, "ks", &ks);
            growth(&common.resolve(extra)?)
        }
        Command::Continue { common, rho, c, c0 } => {
            let mut extra = vec![];
            push(&mut extra, "rho", &rho);
            push(&mut extra, "c", &c);
            push(&mut extra, "c0", &c0);
            continuation(&common.resolve(extra)?)
        }
        Command::Picard {
            common,
            t_final,
            max_iter,
            samples,
            tol,
        } => {
            let mut extra = vec![];
            push(&mut extra, "picard_t_final", &t_final);
            push(&mut extra, "picard_max_iter", &max_iter);
            push(&mut extra, "picard_samples", &samples);
            push(&mut extra, "picard_tol", &tol);
            picard(&common.resolve(extra)?)
        }
    }
}

fn out_path(cfg: &RunConfig, command: &str, ext: &str) -> PathBuf {
    let base = cfg.name.clone().unwrap_or_else(|| command.to_string());
    cfg.output_dir.join(format!("{base}.{ext}"))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<String> {
    write_atomic(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path.display().to_string())
}

fn write_manifest<R: Serialize>(
    cfg: &RunConfig,
    command: &str,
    started: Instant,
    status: &str,
    mut outputs: Vec<String>,
    result: R,
) -> CliResult<()> {
    let path = out_path(cfg, command, "json");
    outputs.push(path.display().to_string());
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        wall_time_s: started.elapsed().as_secs_f64(),
        status,
        outputs,
        result,
    };
    write(&path, &json_bytes(&m))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn datum_spec(cfg: &RunConfig) -> DatumSpec {
    let mut d = DatumSpec::new(cfg.seed, cfg.target_norm, cfg.pressure, cfg.conjugated());
    d.mode_band = (cfg.band_lo, cfg.band_hi);
    d
}

fn integrator(cfg: &RunConfig) -> CliResult<IntegratorConfig> {
    let mut ic = IntegratorConfig::new(cfg.dt, cfg.t_end)?;
    ic.scheme = cfg.scheme;
    ic.blowup_threshold = cfg.rho_max;
    ic.store_every = cfg.store_every;
    Ok(ic)
}

fn simulate(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let datum = make_datum(cfg.grid(), &datum_spec(cfg))?;
    let spec = SystemSpec::new(cfg.system, cfg.epsilon, cfg.rescaled, cfg.amplitude())?;
    let tr = solve_full(&spec, cfg.pressure, &datum, &integrator(cfg)?)?;
    let rows = trajectory_rows(&tr.times, &tr.diagnostics, &tr.status);
    let csv = write(&out_path(cfg, "simulate", "csv"), &trajectory_csv(&rows))?;
    println!(
        "simulate: {} at t = {} after {} samples, max proxy {:.6}",
        tr.status,
        tr.final_time(),
        rows.len(),
        tr.max_proxy()
    );
    #[derive(Serialize)]
    struct Summary {
        terminal: dispersive_vdw::integrate::TerminalStatus,
        final_time: f64,
        samples: usize,
        max_proxy: f64,
    }
    write_manifest(
        cfg,
        "simulate",
        started,
        status_label(&tr.status),
        vec![csv],
        Summary {
            terminal: tr.status,
            final_time: tr.final_time(),
            samples: rows.len(),
            max_proxy: tr.max_proxy(),
        },
    )
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: f64,
    passed: bool,
}

fn check(name: impl Into<String>, value: f64, threshold: f64) -> Check {
    Check {
        name: name.into(),
        value,
        threshold,
        passed: value < threshold,
    }
}

/// Short reduced trajectory on a coarse grid plus its additive remainder.
fn ibp_trajectory(
    setting: &NormalFormSetting,
    seed: u64,
    dt: f64,
) -> CliResult<(Vec<f64>, Vec<SpectralField>, Vec<SpectralField>)> {
    let g = Grid::with_modes(4)?;
    let mut ds = DatumSpec::new(seed, 0.15, setting.law, setting.conjugated);
    ds.mode_band = (1, 3);
    let d = make_datum(g, &ds)?;
    let tr = solve_reduced(
        setting,
        &ReducedState::from_fields(d, 0.0),
        &IntegratorConfig::new(dt, 0.01)?,
    )?;
    let r1 = tr.states.iter().map(|s| additive_remainder(setting, s)).collect();
    let w1 = tr.states.into_iter().map(|s| s.w1).collect();
    Ok((tr.times, w1, r1))
}

fn verify(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let mut checks = vec![];
    let lemma = lemma_m_suite_with(cfg.seed, cfg.n_modes, &[0.0, 1.0, 2.0], cfg.fields, |u| {
        u.apply_m()
    })?;
    checks.push(check("m identities: antiderivative", lemma.antiderivative, 1e-10));
    checks.push(check("m identities: derivative inverse", lemma.derivative_inverse, 1e-10));
    checks.push(check("m identities: second derivative", lemma.second_derivative, 1e-10));
    checks.push(check("m identities: Sobolev equality", lemma.sobolev_equality, 1e-10));
    checks.push(check("m identities: pointwise bound", lemma.pointwise, 1e-10));

    let grid = Grid::with_modes(cfg.n_modes)?;
    let plain = NormalFormSetting::new(cfg.epsilon, false, cfg.pressure, cfg.epsilon.powf(cfg.alpha))?;
    let conj = NormalFormSetting::modified(cfg.epsilon, cfg.lambda)?;
    let states: Vec<State> = (0..cfg.fields as u64)
        .map(|i| {
            let s = cfg.seed.wrapping_mul(1_000_003).wrapping_add(2 * i);
            State::new(random_field(grid, s, cfg.n_modes), random_field(grid, s + 1, cfg.n_modes))
        })
        .collect::<Result<_, _>>()?;
    let worst = |st: &NormalFormSetting| {
        states
            .par_iter()
            .map(|s| cancellation_residual(st, s))
            .reduce(|| 0.0, f64::max)
    };
    checks.push(check("cancellation (plain)", worst(&plain), 1e-12));
    checks.push(check("cancellation (conjugated)", worst(&conj), 1e-12));

    let jet_worst = states
        .par_iter()
        .map(|s| {
            ode_jet(&s.u1.remove_mean().scale_real(0.2), 8)
                .map(|j| j.recurrence_residual())
                .unwrap_or(f64::INFINITY)
        })
        .reduce(|| 0.0, f64::max);
    checks.push(check("jet recurrence", jet_worst, 1e-12));

    let dt = 1e-5;
    let tol = 5.0 * dt + 1e-8;
    let eps = 0.1;
    for conjugated in [false, true] {
        let lam = 0.5;
        let setting = NormalFormSetting::new(eps, conjugated, PressureLaw::P0, lam)?;
        let (t, w1, r1) = ibp_trajectory(&setting, cfg.seed, dt)?;
        for n in [1, 2] {
            let mut co = IbpCoefficients::new(n, lam, eps, 2.0)?;
            if conjugated {
                co = co.conjugate_orientation();
            }
            let label = if conjugated { "modified" } else { "plain" };
            checks.push(check(
                format!("implicit representation n={n} ({label})"),
                implicit_residual(&t, &w1, &r1, &co)?,
                tol,
            ));
        }
    }
    let setting = NormalFormSetting::plain(eps, PressureLaw::P2, 0.25)?;
    let (t, w1, r1) = ibp_trajectory(&setting, cfg.seed, dt)?;
    checks.push(check("single integration by parts (p2)", ibp_once_p2(&t, &w1, &r1, 0.25, eps)?, tol));

    for c in &checks {
        println!(
            "{} {}: {:.3e} (threshold {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let status = if failed.is_empty() { "passed" } else { "failed" };
    write_manifest(cfg, "verify", started, status, vec![], &checks)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn sweep(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let timing = SweepTiming {
        dt_coeff: cfg.sweep_dt_coeff,
        dt_power: 2.0,
        t_end_coeff: cfg.sweep_t_end_coeff,
        t_end_power: 2.0,
        rho_max: cfg.rho_max,
        scheme: cfg.scheme,
    };
    let res = with_jobs(cfg.jobs, || {
        scaling_sweep(
            cfg.system,
            cfg.pressure,
            cfg.alpha_or_lambda(),
            &cfg.epsilons,
            cfg.n_modes,
            datum_spec(cfg),
            timing,
        )
    })??;
    let rows: Vec<Vec<String>> = res
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.epsilon),
                status_label(&r.outcome.status).to_string(),
                r.outcome.time.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.outcome.terminal_w1_h1),
                fmt_f64(r.outcome.terminal_w2_l2),
                fmt_f64(r.outcome.max_proxy),
            ]
        })
        .collect();
    let comments = match &res.fit {
        Some(f) => vec![
            ("slope".to_string(), fmt_f64(f.slope)),
            ("intercept".to_string(), fmt_f64(f.intercept)),
            ("residual".to_string(), fmt_f64(f.residual)),
        ],
        None => vec![("slope".to_string(), "none".to_string())],
    };
    let header = ["epsilon", "status", "time", "terminal_w1_H1", "terminal_w2_L2", "max_proxy"];
    let csv = write(&out_path(cfg, "sweep", "csv"), &csv_bytes(&header, &rows, &comments))?;
    for r in &res.rows {
        println!(
            "eps = {}: {} (max proxy {:.6})",
            r.epsilon, r.outcome.status, r.outcome.max_proxy
        );
    }
    match &res.fit {
        Some(f) => println!("slope {:.4} (residual {:.3e})", f.slope, f.residual),
        None => println!("slope unavailable: {}", res.note),
    }
    write_manifest(cfg, "sweep", started, "completed", vec![csv], &res)
}

fn growth(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let rows = growth_experiment(cfg.pressure, cfg.u_star, &cfg.ks)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                fmt_f64(r.measured),
                fmt_f64(r.fitted),
                fmt_f64(r.predicted),
            ]
        })
        .collect();
    let csv = write(
        &out_path(cfg, "growth", "csv"),
        &csv_bytes(&["k", "measured", "fitted", "predicted"], &cells, &[]),
    )?;
    for r in &rows {
        println!("k = {}: measured {:.8}, predicted {:.8}", r.k, r.measured, r.predicted);
    }
    write_manifest(cfg, "growth", started, "completed", vec![csv], &rows)
}

fn continuation(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let s = continuation_schedule(cfg.rho, cfg.epsilon, cfg.alpha, cfg.c, cfg.c0)?;
    println!(
        "j = {}, T0 = {}, rho1 = {}, total time {:.6e}, bracketing {}",
        s.j_star,
        s.time_sequence[0],
        s.rho_sequence.get(1).copied().unwrap_or(f64::NAN),
        s.t_star,
        if s.bracketing_holds { "holds" } else { "fails" }
    );
    write_manifest(cfg, "continue", started, "completed", vec![], &s)
}

fn picard(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let setting = NormalFormSetting::new(cfg.epsilon, cfg.conjugated(), cfg.pressure, cfg.amplitude())?;
    let datum = make_datum(cfg.grid(), &datum_spec(cfg))?;
    let t_final = cfg.picard_t_final.unwrap_or(0.1 * cfg.epsilon * cfg.epsilon);
    let (traj, report) = match picard_solve_sampled(
        &setting,
        &datum.u1,
        &datum.u2,
        t_final,
        cfg.picard_max_iter,
        cfg.picard_samples,
        cfg.picard_tol,
    ) {
        Ok(x) => x,
        Err(e @ dispersive_vdw::Error::NotContracting { .. }) => {
            return Err(CliError::Verification(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let n = traj.len();
    let rows: Vec<TrajectoryRow> = traj
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let label = match (i + 1 == n, report.converged) {
                (false, _) => "running",
                (true, true) => "converged",
                (true, false) => "not_converged",
            };
            TrajectoryRow::new(w.t, &diagnose_reduced(&setting, w), label)
        })
        .collect();
    let csv = write(&out_path(cfg, "picard", "csv"), &trajectory_csv(&rows))?;
    let dt = t_final / (n - 1) as f64;
    let stepper = solve_reduced(
        &setting,
        &ReducedState::from_fields(datum, 0.0),
        &IntegratorConfig::new(dt, t_final)?,
    )
    .ok()
    .map(|st| {
        traj.iter()
            .zip(&st.states)
            .map(|(a, b)| (&a.w1 - &b.w1).h1().max((&a.w2 - &b.w2).l2()))
            .fold(0.0, f64::max)
    });
    println!(
        "picard: {} after {} iterates, residual {:.3e}, ratios {:?}",
        if report.converged { "converged" } else { "not converged" },
        report.iterates,
        report.final_residual,
        report.contraction_ratios
    );
    if let Some(d) = stepper {
        println!("discrepancy to the time stepper (dt = {dt:.3e}): {d:.3e}");
    }
    #[derive(Serialize)]
    struct PicardSummary<'a> {
        t_final: f64,
        report: &'a dispersive_vdw::integrate::PicardReport,
        stepper_discrepancy: Option<f64>,
    }
    let status = if report.converged { "converged" } else { "not_converged" };
    write_manifest(
        cfg,
        "picard",
        started,
        status,
        vec![csv],
        PicardSummary {
            t_final,
            report: &report,
            stepper_discrepancy: stepper,
        },
    )?;
    if report.converged {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "Picard iteration did not reach tolerance {:e} in {} iterates",
            cfg.picard_tol, cfg.picard_max_iter
        )))
    }
}
