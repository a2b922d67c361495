//! Pressure laws, energies and right-hand sides of the regularized systems.
//!
//! Unknowns are `(u1, u2)`, a density fluctuation and a velocity. The
//! regularized system reads
//!
//! ```text
//! ∂t u1 = -c1 ∂x u2
//! ∂t u2 =  c1 (∂x u1 - q(a u1)[∂x u1]) - i c2 ∂x² u2
//! ```
//!
//! with `(c1, c2) = (1, ε)` in the original variables and `(ε⁻², ε⁻³)` in the
//! high-frequency rescaled frame. The modified system conjugates the
//! transport and pressure terms componentwise.
//!
//! The state is always the normalized profile: the amplitude `a` (`ε^α` or
//! `λ`) only enters through the argument of `q`, so that `a·u` solves the
//! unnormalized equations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{padded_map, padded_mean, Grid, Norm, SpectralField, C64, I};

/// Cubic pressure law `p(u) = -u + (cubic)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PressureLaw {
    /// `-u + u³`
    P0,
    /// `-u + |u|²u`
    P1,
    /// `-u + ū³`
    P2,
}

impl PressureLaw {
    pub const ALL: [PressureLaw; 3] = [PressureLaw::P0, PressureLaw::P1, PressureLaw::P2];

    pub fn name(&self) -> &'static str {
        match self {
            PressureLaw::P0 => "p0",
            PressureLaw::P1 => "p1",
            PressureLaw::P2 => "p2",
        }
    }

    /// The cubic part `p(u) + u` at a point.
    pub fn cubic_at(&self, u: C64) -> C64 {
        match self {
            PressureLaw::P0 => u * u * u,
            PressureLaw::P1 => u.norm_sqr() * u,
            PressureLaw::P2 => {
                let c = u.conj();
                c * c * c
            }
        }
    }

    /// `q(u)[v]`, the real-linear derivative of the cubic part at a point.
    pub fn q_at(&self, u: C64, v: C64) -> C64 {
        match self {
            PressureLaw::P0 => 3.0 * u * u * v,
            PressureLaw::P1 => 2.0 * u.norm_sqr() * v + u * u * v.conj(),
            PressureLaw::P2 => {
                let c = u.conj();
                3.0 * c * c * v.conj()
            }
        }
    }

    /// Quartic energy density `P(u)` with `P'` matching the cubic part.
    pub fn quartic_at(&self, u: C64) -> f64 {
        match self {
            PressureLaw::P1 => 0.25 * u.norm_sqr() * u.norm_sqr(),
            PressureLaw::P0 | PressureLaw::P2 => 0.25 * (u * u * u * u).re,
        }
    }
}

impl fmt::Display for PressureLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PressureLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p0" => Ok(PressureLaw::P0),
            "p1" => Ok(PressureLaw::P1),
            "p2" => Ok(PressureLaw::P2),
            other => Err(Error::InvalidParameter(format!(
                "unknown pressure law '{other}' (expected p0, p1 or p2)"
            ))),
        }
    }
}

/// Pair of fields `(u1, u2)` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl State {
    pub fn new(u1: SpectralField, u2: SpectralField) -> Result<Self> {
        if u1.grid() != u2.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { u1, u2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            u1: SpectralField::zeros(grid),
            u2: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            u1: f(&self.u1),
            u2: f(&self.u2),
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|u| u.scale(a))
    }

    pub fn axpy(&mut self, a: C64, other: &State) {
        self.u1.axpy(a, &other.u1);
        self.u2.axpy(a, &other.u2);
    }

    pub fn add(&self, other: &State) -> Self {
        Self {
            u1: &self.u1 + &other.u1,
            u2: &self.u2 + &other.u2,
        }
    }

    pub fn sub(&self, other: &State) -> Self {
        Self {
            u1: &self.u1 - &other.u1,
            u2: &self.u2 - &other.u2,
        }
    }

    /// `max(‖u1‖_{H¹}, ‖u2‖_{L²})`, the norm of the existence theory.
    pub fn h1_l2(&self) -> f64 {
        self.u1.h1().max(self.u2.l2())
    }

    /// `max(|Π0 u1|, |Π0 u2|)`.
    pub fn max_mean(&self) -> f64 {
        self.u1.mean().norm().max(self.u2.mean().norm())
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }
}

impl std::ops::Neg for State {
    type Output = State;
    fn neg(self) -> State {
        State {
            u1: -self.u1,
            u2: -self.u2,
        }
    }
}

/// Which evolution system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Regularized,
    Modified,
}

impl FromStr for SystemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "regularized" => Ok(SystemKind::Regularized),
            "modified" => Ok(SystemKind::Modified),
            other => Err(Error::InvalidParameter(format!(
                "unknown system '{other}' (expected regularized or modified)"
            ))),
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Regularized => "regularized",
            SystemKind::Modified => "modified",
        })
    }
}

/// System parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub epsilon: f64,
    pub rescaled: bool,
    /// Amplitude `a` entering `q(a u1)`.
    pub amplitude: f64,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, epsilon: f64, rescaled: bool, amplitude: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be finite and >= 0, got {amplitude}"
            )));
        }
        Ok(Self {
            kind,
            epsilon,
            rescaled,
            amplitude,
        })
    }

    pub fn check_law(&self, law: PressureLaw) -> Result<()> {
        if self.kind == SystemKind::Modified && law != PressureLaw::P0 {
            Err(Error::ConjugatedRequiresP0)
        } else {
            Ok(())
        }
    }

    /// Transport and dispersion coefficients `(c1, c2)`.
    pub fn coefficients(&self) -> (f64, f64) {
        let e = self.epsilon;
        if self.rescaled {
            (1.0 / (e * e), 1.0 / (e * e * e))
        } else {
            (1.0, e)
        }
    }
}

/// Energy split into its three parts (physical integrals over the torus).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub quartic_part: f64,
    pub quadratic_u1_part: f64,
    pub quadratic_u2_part: f64,
}

/// `p(u)` evaluated alias-free.
pub fn pressure(law: PressureLaw, u: &SpectralField) -> SpectralField {
    padded_map([u], |[x]| law.cubic_at(x) - x)
}

/// `q(u)[v]` evaluated alias-free.
pub fn q_apply(law: PressureLaw, u: &SpectralField, v: &SpectralField) -> SpectralField {
    padded_map([u, v], |[x, y]| law.q_at(x, y))
}

/// `∫ (P(u1) - ½|u1|² + ½|u2|²)`; with `conjugated`, the modified energy
/// `∫ (¼ Re u1⁴ - ½ Re u1² + ½|u2|²)` (law P0 only).
pub fn energy(law: PressureLaw, state: &State, conjugated: bool) -> Result<EnergyReport> {
    if conjugated && law != PressureLaw::P0 {
        return Err(Error::ConjugatedRequiresP0);
    }
    let u1 = &state.u1;
    let quartic = 2.0 * PI * padded_mean([u1], |[x]| C64::new(law.quartic_at(x), 0.0)).re;
    let quad1 = if conjugated {
        // mean of u² is Σ u_k u_{-k}
        let grid = u1.grid();
        let s: C64 = grid.wavenumbers().map(|k| u1.mode(k) * u1.mode(-k)).sum();
        -PI * s.re
    } else {
        -PI * u1.l2().powi(2)
    };
    let quad2 = PI * state.u2.l2().powi(2);
    Ok(EnergyReport {
        value: quartic + quad1 + quad2,
        quartic_part: quartic,
        quadratic_u1_part: quad1,
        quadratic_u2_part: quad2,
    })
}

/// Energy of the unnormalized field `a·state`, divided by `a²` (for `a > 0`).
/// This is the conserved quantity of a normalized trajectory.
pub fn scaled_energy(
    law: PressureLaw,
    state: &State,
    conjugated: bool,
    amplitude: f64,
) -> Result<EnergyReport> {
    let a = amplitude;
    let mut r = energy(law, state, conjugated)?;
    r.quartic_part *= a * a;
    r.value = r.quartic_part + r.quadratic_u1_part + r.quadratic_u2_part;
    Ok(r)
}

/// Nonlinear pressure term `a² q(u1)[∂x u1]` (for the modified system the
/// P0 map, before conjugation).
pub(crate) fn pressure_term(law: PressureLaw, amplitude: f64, u1: &SpectralField) -> SpectralField {
    let a2 = amplitude * amplitude;
    if a2 == 0.0 {
        return SpectralField::zeros(*u1.grid());
    }
    let du = u1.derivative(1);
    padded_map([u1, &du], |[x, y]| a2 * law.q_at(x, y))
}

/// Time derivative of the full system at `state`.
pub fn rhs_full(spec: &SystemSpec, law: PressureLaw, state: &State, _t: f64) -> Result<State> {
    spec.check_law(law)?;
    let lin = rhs_linear(spec, state);
    let nl = rhs_nonlinear(spec, law, state);
    Ok(lin.add(&nl))
}

/// Linear part of the right-hand side.
pub fn rhs_linear(spec: &SystemSpec, state: &State) -> State {
    let (c1, c2) = spec.coefficients();
    let disp = state.u2.derivative(2).scale(-I * c2);
    match spec.kind {
        SystemKind::Regularized => State {
            u1: state.u2.derivative(1).scale_real(-c1),
            u2: &state.u1.derivative(1).scale_real(c1) + &disp,
        },
        SystemKind::Modified => State {
            u1: state.u2.derivative(1).conj().scale_real(-c1),
            u2: &state.u1.derivative(1).conj().scale_real(c1) + &disp,
        },
    }
}

/// Nonlinear part of the right-hand side: `(0, -c1·(a² q(u1)[∂x u1]))`,
/// conjugated for the modified system.
pub fn rhs_nonlinear(spec: &SystemSpec, law: PressureLaw, state: &State) -> State {
    let (c1, _) = spec.coefficients();
    let grid = *state.grid();
    let mut p = pressure_term(law, spec.amplitude, &state.u1);
    if spec.kind == SystemKind::Modified {
        p = p.conj();
    }
    State {
        u1: SpectralField::zeros(grid),
        u2: p.scale_real(-c1),
    }
}

/// `p'(u*)` for real base states (identical for the three laws).
pub fn pressure_slope(_law: PressureLaw, u_star: f64) -> f64 {
    -1.0 + 3.0 * u_star * u_star
}

/// Mode-`k` matrix of the unregularized system linearized about `(u*, 0)`.
pub fn linearized_symbol(law: PressureLaw, u_star: f64, k: i64) -> [[C64; 2]; 2] {
    let ik = I * k as f64;
    let z = C64::new(0.0, 0.0);
    [[z, -ik], [-ik * pressure_slope(law, u_star), z]]
}

/// Largest real part among the eigenvalues of [`linearized_symbol`].
pub fn linear_growth_rate(law: PressureLaw, u_star: f64, k: i64) -> f64 {
    let ps = pressure_slope(law, u_star);
    if ps < 0.0 {
        k.unsigned_abs() as f64 * (-ps).sqrt()
    } else {
        0.0
    }
}

/// L² norm of a field measured as a physical integral, `(∫|u|²)^{1/2}`.
pub fn physical_l2(u: &SpectralField) -> f64 {
    (2.0 * PI).sqrt() * u.norm(Norm::L2)
}
