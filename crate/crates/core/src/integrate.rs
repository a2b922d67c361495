//! Time stepping of the full and reduced systems, blow-up detection and the
//! Picard iteration of the Duhamel maps.
//!
//! Linear parts are propagated exactly mode by mode. Nonlinear parts are
//! advanced by Lawson-type exponential schemes: in the interaction picture
//! `y = e^{-tL} u` the equation `y' = e^{-tL} N(e^{tL} y)` is solved by
//! explicit Euler or the explicit midpoint rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{cumulative_integral, uniform_step};
use crate::model::{rhs_nonlinear, scaled_energy, PressureLaw, State, SystemKind, SystemSpec};
use crate::normalform::{
    cancellation_residual, full_to_reduced, reduced_forcing, reduced_to_full, NormalFormSetting,
    ReducedState,
};
use crate::spectral::{SpectralField, C64, I};

/// Mean magnitude above which a datum is rejected.
const MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exponential midpoint rule, order 2.
    ExpRk2,
    /// Exponential Euler, order 1.
    ExpEuler,
}

impl Scheme {
    pub fn order(&self) -> u32 {
        match self {
            Scheme::ExpRk2 => 2,
            Scheme::ExpEuler => 1,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ExpRk2 => "exp_rk2",
            Scheme::ExpEuler => "exp_euler",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp_rk2" => Ok(Scheme::ExpRk2),
            "exp_euler" => Ok(Scheme::ExpEuler),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme '{other}' (expected exp_rk2 or exp_euler)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Blow-up threshold `ρ_max` on `max(‖w1‖_{H¹}, ‖w2‖_{L²})`.
    pub blowup_threshold: f64,
    /// Store one sample every this many steps (the final state is always kept).
    pub store_every: usize,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let c = Self {
            dt,
            t_end,
            scheme: Scheme::ExpRk2,
            blowup_threshold: 1.0,
            store_every: 1,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!(
                "blowup threshold must be > 0, got {}",
                self.blowup_threshold
            ));
        }
        if self.store_every == 0 {
            return bad("store_every must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TerminalStatus {
    Completed,
    Blowup { time: f64 },
    Diverged { time: f64 },
}

impl TerminalStatus {
    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            TerminalStatus::Blowup { time } => Some(*time),
            _ => None,
        }
    }
}

impl fmt::Display for TerminalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalStatus::Completed => f.write_str("completed"),
            TerminalStatus::Blowup { .. } => f.write_str("blowup"),
            TerminalStatus::Diverged { .. } => f.write_str("diverged"),
        }
    }
}

/// Per-sample diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub norm_w1_h1: f64,
    pub norm_w2_l2: f64,
    pub norm_u1_h1: f64,
    pub norm_u2_l2: f64,
    /// Energy of the unnormalized field divided by the squared amplitude.
    pub energy: f64,
    pub mean_abs_u1: f64,
    pub mean_abs_u2: f64,
    pub cancellation_residual: f64,
}

impl Diagnostics {
    /// Blow-up proxy `max(‖w1‖_{H¹}, ‖w2‖_{L²})`.
    pub fn proxy(&self) -> f64 {
        self.norm_w1_h1.max(self.norm_w2_l2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub diagnostics: Vec<Diagnostics>,
    pub status: TerminalStatus,
}

impl<S> Trajectory<S> {
    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn max_proxy(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.proxy()).fold(0.0, f64::max)
    }
}

/// Normal-form setting matching a full system.
pub fn setting_for(spec: &SystemSpec, law: PressureLaw) -> Result<NormalFormSetting> {
    NormalFormSetting::new(
        spec.epsilon,
        spec.kind == SystemKind::Modified,
        law,
        spec.amplitude,
    )
}

fn sample_diagnostics(
    setting: &NormalFormSetting,
    law: PressureLaw,
    u: &State,
    w: &State,
) -> Diagnostics {
    let energy = scaled_energy(law, u, setting.conjugated, setting.amplitude)
        .map(|e| e.value)
        .unwrap_or(f64::NAN);
    Diagnostics {
        norm_w1_h1: w.u1.h1(),
        norm_w2_l2: w.u2.l2(),
        norm_u1_h1: u.u1.h1(),
        norm_u2_l2: u.u2.l2(),
        energy,
        mean_abs_u1: u.u1.mean().norm(),
        mean_abs_u2: u.u2.mean().norm(),
        cancellation_residual: cancellation_residual(setting, u),
    }
}

/// Diagnostics of a full-system state. In the rescaled frame the `w` norms
/// are those of the reduced unknowns; otherwise they repeat the `u` norms.
pub fn diagnose_full(spec: &SystemSpec, law: PressureLaw, u: &State, t: f64) -> Result<Diagnostics> {
    let setting = setting_for(spec, law)?;
    let w = if spec.rescaled {
        full_to_reduced(&setting, u, t).fields()
    } else {
        u.clone()
    };
    Ok(sample_diagnostics(&setting, law, u, &w))
}

pub fn diagnose_reduced(setting: &NormalFormSetting, w: &ReducedState) -> Diagnostics {
    let u = reduced_to_full(setting, w);
    sample_diagnostics(setting, setting.law, &u, &w.fields())
}

/// `exp(t A)` for a 2×2 complex matrix, in the Cayley–Hamilton form
/// `e^{tτ}(cosh(tδ) Id + sinh(tδ)/δ (A - τ Id))`, `τ = tr A / 2`,
/// `δ² = τ² - det A`. The entire function `sinh(z)/z` is summed as a series
/// near `z = 0`, which covers colliding eigenvalues.
pub fn mode_exponential(a: [[C64; 2]; 2], t: f64) -> [[C64; 2]; 2] {
    let tau = (a[0][0] + a[1][1]) * 0.5;
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let delta = (tau * tau - det).sqrt();
    let z = delta * t;
    let (ch, shc) = if z.norm() < 1e-3 {
        let z2 = z * z;
        (
            1.0 + z2 / 2.0 + z2 * z2 / 24.0 + z2 * z2 * z2 / 720.0,
            1.0 + z2 / 6.0 + z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0,
        )
    } else {
        (z.cosh(), z.sinh() / z)
    };
    let g = (tau * t).exp();
    let s = shc * t;
    [
        [g * (ch + s * (a[0][0] - tau)), g * s * a[0][1]],
        [g * s * a[1][0], g * (ch + s * (a[1][1] - tau))],
    ]
}

/// Mode-`k` matrix of the linear part of a full system.
///
/// Regularized: acts on `(u1_k, u2_k)`. Modified: acts on
/// `(u1_k, conj u2_{-k})`, where the conjugated transport becomes
/// complex-linear.
pub fn full_mode_matrix(spec: &SystemSpec, k: i64) -> [[C64; 2]; 2] {
    let (c1, c2) = spec.coefficients();
    let kf = k as f64;
    let z = C64::new(0.0, 0.0);
    let disp = match spec.kind {
        SystemKind::Regularized => I * c2 * kf * kf,
        SystemKind::Modified => -I * c2 * kf * kf,
    };
    [[z, -I * c1 * kf], [I * c1 * kf, disp]]
}

/// `e^{τL} u` for the linear part `L` of a full system.
pub fn propagate_full_linear(spec: &SystemSpec, u: &State, tau: f64) -> State {
    let grid = *u.grid();
    let kk = grid.n_modes() as i64;
    let mut out = u.clone();
    for k in -kk..=kk {
        if k == 0 {
            continue;
        }
        let e = mode_exponential(full_mode_matrix(spec, k), tau);
        match spec.kind {
            SystemKind::Regularized => {
                let (a, b) = (u.u1.mode(k), u.u2.mode(k));
                out.u1.set_mode(k, e[0][0] * a + e[0][1] * b);
                out.u2.set_mode(k, e[1][0] * a + e[1][1] * b);
            }
            SystemKind::Modified => {
                let (a, b) = (u.u1.mode(k), u.u2.mode(-k).conj());
                out.u1.set_mode(k, e[0][0] * a + e[0][1] * b);
                out.u2.set_mode(-k, (e[1][0] * a + e[1][1] * b).conj());
            }
        }
    }
    out
}

/// `e^{-iτε⁻³∂x²}` on the second reduced component: phases `e^{iτk²/ε³}`.
pub fn propagate_reduced_linear(setting: &NormalFormSetting, w: &State, tau: f64) -> State {
    let e3 = setting.epsilon.powi(3);
    State {
        u1: w.u1.clone(),
        u2: w
            .u2
            .map_modes(|k, c| c * C64::from_polar(1.0, tau * (k * k) as f64 / e3)),
    }
}

fn lawson_step(
    scheme: Scheme,
    x: &State,
    t: f64,
    dt: f64,
    lin: impl Fn(&State, f64) -> State,
    nl: impl Fn(&State, f64) -> State,
) -> State {
    let one = C64::new(1.0, 0.0);
    match scheme {
        Scheme::ExpEuler => {
            let mut y = x.clone();
            y.axpy(one * dt, &nl(x, t));
            lin(&y, dt)
        }
        Scheme::ExpRk2 => {
            let k1 = nl(x, t);
            let mut y = x.clone();
            y.axpy(one * (dt / 2.0), &k1);
            let xm = lin(&y, dt / 2.0);
            let k2 = nl(&xm, t + dt / 2.0);
            let mut out = lin(x, dt);
            out.axpy(one * dt, &lin(&k2, dt / 2.0));
            out
        }
    }
}

/// One step of the full system with the default exponential midpoint scheme.
pub fn step_full(spec: &SystemSpec, law: PressureLaw, state: &State, t: f64, dt: f64) -> State {
    step_full_with(Scheme::ExpRk2, spec, law, state, t, dt)
}

pub fn step_full_with(
    scheme: Scheme,
    spec: &SystemSpec,
    law: PressureLaw,
    state: &State,
    t: f64,
    dt: f64,
) -> State {
    lawson_step(
        scheme,
        state,
        t,
        dt,
        |u, tau| propagate_full_linear(spec, u, tau),
        |u, _| rhs_nonlinear(spec, law, u),
    )
}

/// One step of the reduced system with the default scheme.
pub fn step_reduced(setting: &NormalFormSetting, w: &ReducedState, dt: f64) -> ReducedState {
    step_reduced_with(Scheme::ExpRk2, setting, w, dt)
}

pub fn step_reduced_with(
    scheme: Scheme,
    setting: &NormalFormSetting,
    w: &ReducedState,
    dt: f64,
) -> ReducedState {
    let next = lawson_step(
        scheme,
        &w.fields(),
        w.t,
        dt,
        |x, tau| propagate_reduced_linear(setting, x, tau),
        |x, t| reduced_forcing(setting, &ReducedState::from_fields(x.clone(), t)),
    );
    ReducedState::from_fields(next, w.t + dt)
}

fn check_mean(s: &State) -> Result<()> {
    let m = s.max_mean();
    if m > MEAN_TOL {
        Err(Error::NonZeroMean(m))
    } else {
        Ok(())
    }
}

/// Generic driver: `step(x, t, h)`, `diag(x, t)`.
fn drive<S: Clone>(
    x0: S,
    config: &IntegratorConfig,
    step: impl Fn(&S, f64, f64) -> S,
    diag: impl Fn(&S, f64) -> Diagnostics,
    finite: impl Fn(&S) -> bool,
) -> Trajectory<S> {
    let n_steps = {
        let r = config.t_end / config.dt;
        let n = r.round();
        if (r - n).abs() < 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }
    .max(1);
    let rho = config.blowup_threshold;
    let d0 = diag(&x0, 0.0);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
        diagnostics: vec![d0],
        status: TerminalStatus::Completed,
    };
    if d0.proxy() > rho {
        traj.status = TerminalStatus::Blowup { time: 0.0 };
        return traj;
    }
    let mut x = x0;
    for i in 0..n_steps {
        let t = i as f64 * config.dt;
        let h = if i + 1 == n_steps { config.t_end - t } else { config.dt };
        let next = step(&x, t, h);
        let t_next = if i + 1 == n_steps { config.t_end } else { t + h };
        if !finite(&next) {
            traj.status = TerminalStatus::Diverged { time: t_next };
            return traj;
        }
        let d = diag(&next, t_next);
        if !(d.proxy().is_finite()) {
            traj.status = TerminalStatus::Diverged { time: t_next };
            return traj;
        }
        if d.proxy() > rho {
            // bisection on the step length
            let (mut lo, mut hi) = (0.0, h);
            let (mut x_hi, mut d_hi) = (next, d);
            while hi - lo > 1e-3 * (t + lo).max(1e-300) && hi - lo > 1e-15 * h {
                let mid = 0.5 * (lo + hi);
                let xm = step(&x, t, mid);
                let dm = diag(&xm, t + mid);
                if finite(&xm) && dm.proxy() > rho {
                    hi = mid;
                    x_hi = xm;
                    d_hi = dm;
                } else if finite(&xm) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            traj.times.push(t + hi);
            traj.states.push(x_hi);
            traj.diagnostics.push(d_hi);
            traj.status = TerminalStatus::Blowup { time: t + hi };
            return traj;
        }
        x = next;
        if (i + 1) % config.store_every == 0 || i + 1 == n_steps {
            traj.times.push(t_next);
            traj.states.push(x.clone());
            traj.diagnostics.push(d);
        }
    }
    traj
}

/// Integrate a full system from a zero-mean datum.
pub fn solve_full(
    spec: &SystemSpec,
    law: PressureLaw,
    datum: &State,
    config: &IntegratorConfig,
) -> Result<Trajectory<State>> {
    config.validate()?;
    spec.check_law(law)?;
    check_mean(datum)?;
    Ok(drive(
        datum.clone(),
        config,
        |x, t, h| step_full_with(config.scheme, spec, law, x, t, h),
        |x, t| diagnose_full(spec, law, x, t).expect("law checked above"),
        |x| x.is_finite(),
    ))
}

/// Integrate a reduced system from a zero-mean datum at time `datum.t`.
/// Requires `dt <= ε/20`.
pub fn solve_reduced(
    setting: &NormalFormSetting,
    datum: &ReducedState,
    config: &IntegratorConfig,
) -> Result<Trajectory<ReducedState>> {
    config.validate()?;
    if config.dt > setting.epsilon / 20.0 {
        return Err(Error::InvalidParameter(format!(
            "dt = {} exceeds the oscillation cap epsilon/20 = {}",
            config.dt,
            setting.epsilon / 20.0
        )));
    }
    check_mean(&datum.fields())?;
    let t0 = datum.t;
    let mut traj = drive(
        datum.clone(),
        config,
        |x, _t, h| step_reduced_with(config.scheme, setting, x, h),
        |x, _t| diagnose_reduced(setting, x),
        |x| x.w1.is_finite() && x.w2.is_finite(),
    );
    for t in traj.times.iter_mut() {
        *t += t0;
    }
    traj.status = match traj.status {
        TerminalStatus::Blowup { time } => TerminalStatus::Blowup { time: time + t0 },
        TerminalStatus::Diverged { time } => TerminalStatus::Diverged { time: time + t0 },
        s => s,
    };
    Ok(traj)
}

/// Moments `∫_0^h e^{zτ} τ^m dτ`, `m = 0, 1, 2`.
fn exp_moments(z: C64, h: f64) -> [C64; 3] {
    let zh = z * h;
    if zh.norm() < 1.0 {
        let mut out = [C64::new(0.0, 0.0); 3];
        for (m, o) in out.iter_mut().enumerate() {
            // Σ_j (zh)^j / (j! (m+j+1)) h^{m+1}
            let mut term = C64::new(1.0, 0.0);
            let mut s = C64::new(0.0, 0.0);
            for j in 0..30 {
                s += term / (m + j + 1) as f64;
                term = term * zh / (j + 1) as f64;
            }
            *o = s * h.powi(m as i32 + 1);
        }
        out
    } else {
        let e = zh.exp();
        let m0 = (e - 1.0) / z;
        let m1 = (e * h - m0) / z;
        let m2 = (e * h * h - 2.0 * m1) / z;
        [m0, m1, m2]
    }
}

/// Cumulative `∫_{t_0}^{t_i} e^{-iΩ(s - t_0)} g(s) ds` for uniform samples,
/// with `g` replaced by its quadratic interpolant through three neighbouring
/// samples on each interval and the phase integrated exactly (Filon).
pub fn filon_cumulative(h: f64, omega: f64, g: &[C64]) -> Vec<C64> {
    let n = g.len();
    assert!(n >= 3);
    let mm = exp_moments(-I * omega, h);
    // weights on (g_i, g_{i+1}, g_{i+2}) for nodes (0, h, 2h)
    let fw = [
        mm[0] - mm[1] * (1.5 / h) + mm[2] * (0.5 / (h * h)),
        mm[1] * (2.0 / h) - mm[2] * (1.0 / (h * h)),
        -mm[1] * (0.5 / h) + mm[2] * (0.5 / (h * h)),
    ];
    // weights on (g_{i-1}, g_i, g_{i+1}) for nodes (-h, 0, h)
    let bw = [
        -mm[1] * (0.5 / h) + mm[2] * (0.5 / (h * h)),
        mm[0] - mm[2] * (1.0 / (h * h)),
        mm[1] * (0.5 / h) + mm[2] * (0.5 / (h * h)),
    ];
    let mut out = Vec::with_capacity(n);
    let mut acc = C64::new(0.0, 0.0);
    out.push(acc);
    for i in 0..n - 1 {
        let phase = C64::from_polar(1.0, -omega * i as f64 * h);
        let piece = if i + 2 < n {
            fw[0] * g[i] + fw[1] * g[i + 1] + fw[2] * g[i + 2]
        } else {
            bw[0] * g[i - 1] + bw[1] * g[i] + bw[2] * g[i + 1]
        };
        acc += phase * piece;
        out.push(acc);
    }
    out
}

/// Outcome of the Picard iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub iterates: usize,
    /// Sampled sup-distance between the last two iterates.
    pub final_residual: f64,
    /// `‖x_{j+1} - x_j‖ / ‖x_j - x_{j-1}‖` in sampled `H¹ × L²`.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
}

/// Default number of time samples for the Picard iteration.
pub const PICARD_SAMPLES: usize = 512;

/// Maximal admissible datum size for the Picard iteration.
pub const PICARD_DATUM_BOUND: f64 = 1.0 / 6.0;

fn sup_distance(a: &[State], b: &[State]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (&x.u1 - &y.u1).h1().max((&x.u2 - &y.u2).l2()))
        .fold(0.0, f64::max)
}

/// Iterate the Duhamel maps
/// `F1(w)(t) = w1⁰ + ∫_0^t G1(w(s), s) ds`,
/// `F2(w)(t) = e^{-itε⁻³∂x²} w2⁰ + ∫_0^t e^{-i(t-s)ε⁻³∂x²} G2(w(s), s) ds`
/// of the reduced system on [`PICARD_SAMPLES`] uniform samples of `[0, T]`,
/// with `(G1, G2)` the reduced forcing.
pub fn picard_solve(
    setting: &NormalFormSetting,
    w1_0: &SpectralField,
    w2_0: &SpectralField,
    t_final: f64,
    max_iter: usize,
) -> Result<(Vec<ReducedState>, PicardReport)> {
    picard_solve_sampled(setting, w1_0, w2_0, t_final, max_iter, PICARD_SAMPLES, 1e-10)
}

pub fn picard_solve_sampled(
    setting: &NormalFormSetting,
    w1_0: &SpectralField,
    w2_0: &SpectralField,
    t_final: f64,
    max_iter: usize,
    n_samples: usize,
    tol: f64,
) -> Result<(Vec<ReducedState>, PicardReport)> {
    if w1_0.grid() != w2_0.grid() {
        return Err(Error::GridMismatch);
    }
    let size = w1_0.h1().max(w2_0.l2());
    if size >= PICARD_DATUM_BOUND {
        return Err(Error::InvalidParameter(format!(
            "Picard datum size {size} must be < 1/6"
        )));
    }
    if !(t_final > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter(
            "Picard needs T > 0 and max_iter >= 1".into(),
        ));
    }
    let times: Vec<f64> = (0..n_samples)
        .map(|i| t_final * i as f64 / (n_samples - 1).max(1) as f64)
        .collect();
    let h = uniform_step(&times)?;
    let grid = *w1_0.grid();
    let e3 = setting.epsilon.powi(3);
    let free = |t: f64| propagate_reduced_linear(setting, &State::new(w1_0.clone(), w2_0.clone()).unwrap(), t);
    let mut x: Vec<State> = times.iter().map(|&t| free(t)).collect();
    let mut report = PicardReport {
        iterates: 0,
        final_residual: f64::INFINITY,
        contraction_ratios: vec![],
        converged: false,
    };
    let mut prev_diff: Option<f64> = None;
    let mut rising = 0;
    for _ in 0..max_iter {
        let g: Vec<State> = times
            .iter()
            .zip(&x)
            .map(|(&t, s)| reduced_forcing(setting, &ReducedState::from_fields(s.clone(), t)))
            .collect();
        let g1: Vec<SpectralField> = g.iter().map(|s| s.u1.clone()).collect();
        let i1 = cumulative_integral(h, &g1);
        let mut next: Vec<State> = i1
            .into_iter()
            .zip(&times)
            .map(|(i, &t)| State {
                u1: w1_0 + &i,
                u2: free(t).u2,
            })
            .collect();
        for k in grid.wavenumbers() {
            let omega = (k * k) as f64 / e3;
            let gk: Vec<C64> = g.iter().map(|s| s.u2.mode(k)).collect();
            let ck = filon_cumulative(h, omega, &gk);
            for (j, s) in next.iter_mut().enumerate() {
                let ph = C64::from_polar(1.0, omega * times[j]);
                let v = s.u2.mode(k) + ph * ck[j];
                s.u2.set_mode(k, v);
            }
        }
        let d = sup_distance(&next, &x);
        report.iterates += 1;
        report.final_residual = d;
        x = next;
        if let Some(p) = prev_diff {
            if p > 0.0 {
                let r = d / p;
                report.contraction_ratios.push(r);
                if r >= 1.0 {
                    rising += 1;
                    if rising >= 3 {
                        return Err(Error::NotContracting { ratio: r });
                    }
                } else {
                    rising = 0;
                }
            }
        }
        if d < tol {
            report.converged = true;
            break;
        }
        prev_diff = Some(d);
    }
    let states = x
        .into_iter()
        .zip(&times)
        .map(|(s, &t)| ReducedState::from_fields(s, t))
        .collect();
    Ok((states, report))
}
