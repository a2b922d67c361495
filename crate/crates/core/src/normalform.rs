//! Near-identity change of unknowns `ũ = (Id + εM) v` that removes the
//! `O(ε⁻²)` transport term of the rescaled systems, and the resulting reduced
//! system for the slowly varying amplitudes `w`.
//!
//! Plain setting: `M v = (-m v2, -m v1)`, with `[iD∂x², M] + A∂x = 0`.
//! Conjugated setting (modified system, law P0): `M v = (m v̄2, -m v̄1)`, with
//! `[iD∂x², M] + C A∂x = 0` where `C` conjugates componentwise.
//!
//! In both settings the unknowns satisfy
//!
//! ```text
//! ∂t v = -i ε⁻³ D∂x² v - ε⁻² (0, F[∂x v1]) - ε⁻¹ E v - R v,
//! R v  = (Id + εM)⁻¹ (-M E v ± (r1, 0)),
//! ```
//!
//! and the oscillation factorization removes the `ε⁻¹` phases from `v`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PressureLaw, State};
use crate::spectral::{padded_map, SpectralField, C64, I};

/// Parameters of the change of unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormSetting {
    pub epsilon: f64,
    /// Modified system (`M` composed with conjugation).
    pub conjugated: bool,
    pub law: PressureLaw,
    /// `ε^α` (plain) or `λ` (conjugated), the prefactor inside `q(a ũ1)`.
    pub amplitude: f64,
}

impl NormalFormSetting {
    pub fn new(epsilon: f64, conjugated: bool, law: PressureLaw, amplitude: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if conjugated && law != PressureLaw::P0 {
            return Err(Error::ConjugatedRequiresP0);
        }
        Ok(Self {
            epsilon,
            conjugated,
            law,
            amplitude,
        })
    }

    /// Plain setting with amplitude `ε^α`.
    pub fn plain(epsilon: f64, law: PressureLaw, alpha: f64) -> Result<Self> {
        Self::new(epsilon, false, law, epsilon.powf(alpha))
    }

    /// Conjugated setting with amplitude `λ`.
    pub fn modified(epsilon: f64, lambda: f64) -> Result<Self> {
        Self::new(epsilon, true, PressureLaw::P0, lambda)
    }

    /// Phase orientation `θ` of the first component: `∂t v1 = iθ/ε v1 + ...`.
    fn theta1(&self) -> f64 {
        if self.conjugated {
            -1.0
        } else {
            1.0
        }
    }
}

/// Slow amplitudes `(w1, w2)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub w1: SpectralField,
    pub w2: SpectralField,
    pub t: f64,
}

impl ReducedState {
    pub fn new(w1: SpectralField, w2: SpectralField, t: f64) -> Result<Self> {
        if w1.grid() != w2.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { w1, w2, t })
    }

    pub fn fields(&self) -> State {
        State {
            u1: self.w1.clone(),
            u2: self.w2.clone(),
        }
    }

    pub fn from_fields(s: State, t: f64) -> Self {
        Self {
            w1: s.u1,
            w2: s.u2,
            t,
        }
    }

    /// `max(‖w1‖_{H¹}, ‖w2‖_{L²})`.
    pub fn h1_l2(&self) -> f64 {
        self.w1.h1().max(self.w2.l2())
    }
}

/// Which way to apply the oscillation factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `v -> w`
    Forward,
    /// `w -> v`
    Backward,
}

/// Coupling operator `M`.
pub fn apply_m_coupling(setting: &NormalFormSetting, state: &State) -> State {
    if setting.conjugated {
        State {
            u1: state.u2.conj().apply_m(),
            u2: -state.u1.conj().apply_m(),
        }
    } else {
        State {
            u1: -state.u2.apply_m(),
            u2: -state.u1.apply_m(),
        }
    }
}

/// `ũ = v + ε M v`.
pub fn from_normal_coords(setting: &NormalFormSetting, v: &State) -> State {
    let mut out = v.clone();
    out.axpy(C64::new(setting.epsilon, 0.0), &apply_m_coupling(setting, v));
    out
}

/// Solve `(Id + εM) v = ũ` exactly.
///
/// Plain: the block on `(v1_k, v2_k)` is `[[1, -ε/k], [-ε/k, 1]]`.
/// Conjugated: the block on `(v1_k, conj v2_{-k})` is `[[1, ε/k], [ε/k, 1]]`.
/// Both are inverted in closed form; `k = 0` is the identity.
pub fn to_normal_coords(setting: &NormalFormSetting, u_tilde: &State) -> State {
    let grid = *u_tilde.grid();
    let eps = setting.epsilon;
    let mut v1 = u_tilde.u1.clone();
    let mut v2 = u_tilde.u2.clone();
    let kk = grid.n_modes() as i64;
    for k in (-kk..=kk).filter(|&k| k != 0) {
        let r = eps / k as f64;
        let det = 1.0 - r * r;
        if setting.conjugated {
            let a = u_tilde.u1.mode(k);
            let b = u_tilde.u2.mode(-k).conj();
            v1.set_mode(k, (a - r * b) / det);
            v2.set_mode(-k, ((b - r * a) / det).conj());
        } else {
            let a = u_tilde.u1.mode(k);
            let b = u_tilde.u2.mode(k);
            v1.set_mode(k, (a + r * b) / det);
            v2.set_mode(k, (b + r * a) / det);
        }
    }
    State { u1: v1, u2: v2 }
}

/// Neumann iteration `v <- ũ - εMv` for `(Id + εM) v = ũ`; cross-check of
/// [`to_normal_coords`]. Contracts at rate `ε` in `L²`.
pub fn to_normal_coords_neumann(
    setting: &NormalFormSetting,
    u_tilde: &State,
    tol: f64,
    max_iter: usize,
) -> Result<State> {
    let eps = C64::new(setting.epsilon, 0.0);
    let mut v = u_tilde.clone();
    let mut prev = f64::INFINITY;
    let mut rising = 0;
    for _ in 0..max_iter {
        let mut next = u_tilde.clone();
        next.axpy(-eps, &apply_m_coupling(setting, &v));
        let d = l2_pair(&next.sub(&v));
        v = next;
        if d <= tol * l2_pair(u_tilde).max(1e-300) {
            return Ok(v);
        }
        if d >= prev {
            rising += 1;
            if rising >= 3 {
                return Err(Error::NotContracting { ratio: d / prev });
            }
        } else {
            rising = 0;
        }
        prev = d;
    }
    Err(Error::NotContracting {
        ratio: setting.epsilon,
    })
}

/// `(‖u1‖²_{L²} + ‖u2‖²_{L²})^{1/2}`.
pub fn l2_pair(s: &State) -> f64 {
    s.u1.l2().hypot(s.u2.l2())
}

/// `‖([iD∂x², M] + (C)A∂x) u‖_{L²}` for the setting's own `M`.
pub fn cancellation_residual(setting: &NormalFormSetting, state: &State) -> f64 {
    cancellation_residual_with(setting, state, |s| apply_m_coupling(setting, s))
}

/// Same as [`cancellation_residual`] with an arbitrary coupling in place of
/// `M` (used for fault injection).
pub fn cancellation_residual_with(
    setting: &NormalFormSetting,
    state: &State,
    coupling: impl Fn(&State) -> State,
) -> f64 {
    let grid = *state.grid();
    let id_xx = |s: &State| State {
        u1: SpectralField::zeros(grid),
        u2: s.u2.derivative(2).scale(I),
    };
    let commutator = id_xx(&coupling(state)).sub(&coupling(&id_xx(state)));
    let mut transport = State {
        u1: state.u2.derivative(1),
        u2: -state.u1.derivative(1),
    };
    if setting.conjugated {
        transport = transport.map(|u| u.conj());
    }
    l2_pair(&commutator.add(&transport))
}

/// Multiply by the fast phases: `w1 = e^{-iθt/ε} v1`, `w2 = e^{it/ε} v2` with
/// `θ = 1` (plain) or `θ = -1` (conjugated).
pub fn oscillate(setting: &NormalFormSetting, v: &State, t: f64, direction: Direction) -> State {
    let s = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let e = setting.epsilon;
    let p1 = C64::from_polar(1.0, -s * setting.theta1() * t / e);
    let p2 = C64::from_polar(1.0, s * t / e);
    State {
        u1: v.u1.scale(p1),
        u2: v.u2.scale(p2),
    }
}

/// `ũ(t) -> w(t)`.
pub fn full_to_reduced(setting: &NormalFormSetting, u_tilde: &State, t: f64) -> ReducedState {
    let v = to_normal_coords(setting, u_tilde);
    ReducedState::from_fields(oscillate(setting, &v, t, Direction::Forward), t)
}

/// `w(t) -> ũ(t)`.
pub fn reduced_to_full(setting: &NormalFormSetting, w: &ReducedState) -> State {
    let v = oscillate(setting, &w.fields(), w.t, Direction::Backward);
    from_normal_coords(setting, &v)
}

/// `v -> ũ`, then `w -> v` helper.
fn v_of(setting: &NormalFormSetting, w: &ReducedState) -> State {
    oscillate(setting, &w.fields(), w.t, Direction::Backward)
}

/// `F[h]`: `q(a ũ1)[h]` (plain) or `3λ² ũ1² h` (conjugated, before the
/// outer conjugation).
fn coupling_q(setting: &NormalFormSetting, u1_tilde: &SpectralField, h: &SpectralField) -> SpectralField {
    let a2 = setting.amplitude * setting.amplitude;
    let law = setting.law;
    padded_map([u1_tilde, h], |[u, x]| a2 * law.q_at(u, x))
}

/// The operator `E` at `v`, with `ũ = (Id + εM) v` supplying the argument of
/// `q`.
///
/// Plain: `(-i v1 + i a²(Id-Π0)(p(v1)+v1), i v2 + q(aũ1)[-i v2])`.
/// Conjugated: `(i v1 - iλ²(Id-Π0) v1³, i v2 - i conj(3λ²ũ1²) v2)`.
pub fn operator_e(setting: &NormalFormSetting, v: &State, u_tilde: &State) -> State {
    let a2 = setting.amplitude * setting.amplitude;
    let law = setting.law;
    let cubic = padded_map([&v.u1], |[x]| a2 * law.cubic_at(x)).remove_mean();
    if setting.conjugated {
        let u1 = &u_tilde.u1;
        let e2 = padded_map([u1, &v.u2], |[u, y]| {
            I * y - I * (3.0 * a2 * u * u).conj() * y
        });
        State {
            u1: &v.u1.scale(I) - &cubic.scale(I),
            u2: e2,
        }
    } else {
        let e2 = &v.u2.scale(I) + &coupling_q(setting, &u_tilde.u1, &v.u2.scale(-I));
        State {
            u1: &v.u1.scale(-I) + &cubic.scale(I),
            u2: e2,
        }
    }
}

/// `r1 = ε⁻¹ m((F(ũ1) - F(v1))[∂x v1])`, evaluated through the exact
/// factorization `ũ1 - v1 = ε d` so no division by `ε` occurs.
pub fn correction_r1(setting: &NormalFormSetting, v: &State, u_tilde: &State) -> SpectralField {
    let a2 = setting.amplitude * setting.amplitude;
    let d = if setting.conjugated {
        v.u2.conj().apply_m()
    } else {
        -v.u2.apply_m()
    };
    let dv1 = v.u1.derivative(1);
    let law = if setting.conjugated {
        PressureLaw::P0
    } else {
        setting.law
    };
    let u1 = &u_tilde.u1;
    let diff = padded_map([u1, &v.u1, &d, &dv1], |[u, w, dd, h]| {
        a2 * match law {
            PressureLaw::P0 => 3.0 * dd * (u + w) * h,
            PressureLaw::P1 => {
                2.0 * (dd * u.conj() + w * dd.conj()) * h + dd * (u + w) * h.conj()
            }
            PressureLaw::P2 => 3.0 * (dd * (u + w)).conj() * h.conj(),
        }
    });
    diff.apply_m()
}

/// `R v = (Id + εM)⁻¹ (-M E v + s (r1, 0))` with `s = +1` (plain) or `-1`
/// (conjugated).
pub fn remainder_r(setting: &NormalFormSetting, v: &State, u_tilde: &State) -> State {
    let ev = operator_e(setting, v, u_tilde);
    let mut inner = -apply_m_coupling(setting, &ev);
    let r1 = correction_r1(setting, v, u_tilde);
    if setting.conjugated {
        inner.u1 -= &r1;
    } else {
        inner.u1 += &r1;
    }
    to_normal_coords(setting, &inner)
}

/// Non-stiff part of `∂t v`: everything except `-iε⁻³D∂x² v` and the linear
/// phase terms `(iθ/ε v1, -i/ε v2)`.
pub fn v_forcing(setting: &NormalFormSetting, v: &State) -> State {
    let e = setting.epsilon;
    let u_tilde = from_normal_coords(setting, v);
    let rv = remainder_r(setting, v, &u_tilde);
    let a2 = setting.amplitude * setting.amplitude;
    let law = setting.law;
    let cubic = padded_map([&v.u1], |[x]| a2 * law.cubic_at(x)).remove_mean();
    // -ε⁻² F[∂x v1] - ε⁻¹(F-part of E2) combines into -ε⁻² F[∂x ũ1].
    let du1 = u_tilde.u1.derivative(1);
    let (f1, f2) = if setting.conjugated {
        let f2 = coupling_q(setting, &u_tilde.u1, &du1).conj().scale_real(-1.0 / (e * e));
        (cubic.scale(I / e), f2)
    } else {
        let f2 = coupling_q(setting, &u_tilde.u1, &du1).scale_real(-1.0 / (e * e));
        (cubic.scale(-I / e), f2)
    };
    State {
        u1: &f1 - &rv.u1,
        u2: &f2 - &rv.u2,
    }
}

/// Full `∂t v` assembled from the structured pieces.
pub fn v_rhs(setting: &NormalFormSetting, v: &State) -> State {
    let e = setting.epsilon;
    let mut out = v_forcing(setting, v);
    out.u1.axpy(I * setting.theta1() / e, &v.u1);
    out.u2.axpy(-I / e, &v.u2);
    out.u2.axpy(-I / (e * e * e), &v.u2.derivative(2));
    out
}

/// Non-stiff part of `∂t w`: the phased forcing, without `-iε⁻³∂x² w2`.
pub fn reduced_forcing(setting: &NormalFormSetting, w: &ReducedState) -> State {
    let v = v_of(setting, w);
    let f = v_forcing(setting, &v);
    oscillate(setting, &f, w.t, Direction::Forward)
}

/// `R1 = -(e^{-iθt/ε} (R v)_1)`: what is left of `∂t w1` after the cubic
/// phase term, i.e. `∂t w1 = μ f(w1)/ε + R1` (P0, with `σ = θ`) and
/// `∂t w1 = -iε^{2α-1} e^{-4it/ε} (Id-Π0) w̄1³ + R1` (P2).
pub fn additive_remainder(setting: &NormalFormSetting, w: &ReducedState) -> SpectralField {
    let v = v_of(setting, w);
    let u_tilde = from_normal_coords(setting, &v);
    let rv = remainder_r(setting, &v, &u_tilde);
    let p1 = C64::from_polar(1.0, -setting.theta1() * w.t / setting.epsilon);
    rv.u1.scale(-p1)
}

/// `∂t w` for the reduced system.
pub fn reduced_rhs(setting: &NormalFormSetting, w: &ReducedState) -> State {
    let e = setting.epsilon;
    let mut out = reduced_forcing(setting, w);
    out.u2.axpy(-I / (e * e * e), &w.w2.derivative(2));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rhs_full, SystemKind, SystemSpec};
    use crate::spectral::{random_field, Grid, Norm};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn grid() -> Grid {
        Grid::with_modes(16).unwrap()
    }

    fn zero_mean_state(g: Grid, seed: u64, scale: f64) -> State {
        State {
            u1: random_field(g, seed, 8).remove_mean().scale_real(scale),
            u2: random_field(g, seed + 1000, 8).remove_mean().scale_real(scale),
        }
    }

    fn settings(eps: f64) -> Vec<NormalFormSetting> {
        let mut v: Vec<_> = PressureLaw::ALL
            .iter()
            .map(|&l| NormalFormSetting::new(eps, false, l, 0.8).unwrap())
            .collect();
        v.push(NormalFormSetting::modified(eps, 0.8).unwrap());
        v
    }

    #[test]
    fn coupling_examples() {
        let g = grid();
        let s = NormalFormSetting::plain(0.1, PressureLaw::P0, 0.0).unwrap();
        let st = State {
            u1: SpectralField::zeros(g),
            u2: SpectralField::single_mode(g, 1, c(1.0, 0.0)),
        };
        let m = apply_m_coupling(&s, &st);
        assert!((&m.u1 - &SpectralField::single_mode(g, 1, c(-1.0, 0.0))).l2() < 1e-15);
        assert_eq!(m.u2.l2(), 0.0);

        let consts = State {
            u1: SpectralField::constant(g, c(2.0, 1.0)),
            u2: SpectralField::constant(g, c(-1.0, 0.5)),
        };
        assert_eq!(apply_m_coupling(&s, &consts).h1_l2(), 0.0);

        // Conjugated coupling on (0, i e^{ix}): conj gives -i e^{-ix}, m gives
        // +i e^{-ix}.
        let sm = NormalFormSetting::modified(0.1, 0.2).unwrap();
        let st = State {
            u1: SpectralField::zeros(g),
            u2: SpectralField::single_mode(g, 1, I),
        };
        let m = apply_m_coupling(&sm, &st);
        assert!((m.u1.mode(-1) - I).norm() < 1e-15);
        assert!((&m.u1 - &st.u2.conj().apply_m()).l2() < 1e-15);
    }

    #[test]
    fn cancellation_is_exact_and_fault_detected() {
        let g = Grid::with_modes(64).unwrap();
        for seed in 0..20 {
            let st = State {
                u1: random_field(g, seed, 64),
                u2: random_field(g, seed + 1, 64),
            };
            let scale = st.u1.norm(Norm::H(2.0)) + st.u2.norm(Norm::H(2.0));
            for s in settings(0.1) {
                let r = cancellation_residual(&s, &st);
                assert!(r < 1e-15 * scale, "{r}");
            }
            let s = NormalFormSetting::plain(0.1, PressureLaw::P0, 0.0).unwrap();
            let flipped = cancellation_residual_with(&s, &st, |x| -apply_m_coupling(&s, x));
            assert!(flipped > 0.1);
            // The coupling printed as -(m∘C)J does not cancel the conjugated
            // transport term.
            let sm = NormalFormSetting::modified(0.1, 0.2).unwrap();
            let printed = cancellation_residual_with(&sm, &st, |x| State {
                u1: -x.u2.conj().apply_m(),
                u2: -x.u1.conj().apply_m(),
            });
            assert!(printed > 0.1);
        }
    }

    #[test]
    fn inverse_pair_and_neumann_agree() {
        let g = grid();
        for eps in [0.5, 0.1, 0.01] {
            for s in settings(eps) {
                let st = zero_mean_state(g, 3, 1.0);
                let v = to_normal_coords(&s, &st);
                assert!(l2_pair(&from_normal_coords(&s, &v).sub(&st)) < 1e-13);
                let u = from_normal_coords(&s, &st);
                assert!(l2_pair(&to_normal_coords(&s, &u).sub(&st)) < 1e-13);
                let vn = to_normal_coords_neumann(&s, &st, 1e-15, 200).unwrap();
                assert!(l2_pair(&vn.sub(&v)) < 1e-13);
                let lo = (1.0 - eps) * l2_pair(&v);
                let hi = (1.0 + eps) * l2_pair(&v);
                let n = l2_pair(&st);
                assert!(lo <= n * (1.0 + 1e-14) && n <= hi * (1.0 + 1e-14));
                for sp in [0.0, 1.0] {
                    let nv = v.u1.norm(Norm::H(sp)).hypot(v.u2.norm(Norm::H(sp)));
                    let nu = st.u1.norm(Norm::H(sp)).hypot(st.u2.norm(Norm::H(sp)));
                    assert!((1.0 - eps) * nv <= nu * (1.0 + 1e-14));
                    assert!(nu <= (1.0 + eps) * nv * (1.0 + 1e-14));
                }
            }
        }
    }

    #[test]
    fn single_mode_block_action() {
        let g = grid();
        let eps = 0.3;
        let s = NormalFormSetting::plain(eps, PressureLaw::P1, 0.5).unwrap();
        let (a, b) = (c(0.2, 0.1), c(-0.4, 0.3));
        let v = State {
            u1: SpectralField::single_mode(g, 2, a),
            u2: SpectralField::single_mode(g, 2, b),
        };
        let u = from_normal_coords(&s, &v);
        assert!((u.u1.mode(2) - (a - eps / 2.0 * b)).norm() < 1e-15);
        assert!((u.u2.mode(2) - (b - eps / 2.0 * a)).norm() < 1e-15);
    }

    #[test]
    fn oscillation_round_trip() {
        let g = grid();
        let v = zero_mean_state(g, 9, 1.0);
        for s in settings(0.05) {
            assert_eq!(oscillate(&s, &v, 0.0, Direction::Forward), v);
            let w = oscillate(&s, &v, 0.37, Direction::Forward);
            let back = oscillate(&s, &w, 0.37, Direction::Backward);
            assert!(l2_pair(&back.sub(&v)) < 1e-14);
            assert!((w.u1.h1() - v.u1.h1()).abs() < 1e-13);
            assert!((w.u2.l2() - v.u2.l2()).abs() < 1e-13);
        }
    }

    #[test]
    fn operator_e_examples() {
        let g = grid();
        let eps: f64 = 0.1;
        let alpha = 0.5;
        let s = NormalFormSetting::plain(eps, PressureLaw::P1, alpha).unwrap();
        let v = State {
            u1: SpectralField::single_mode(g, 1, c(1.0, 0.0)),
            u2: SpectralField::zeros(g),
        };
        let ut = from_normal_coords(&s, &v);
        let e = operator_e(&s, &v, &ut);
        let expect = -I + I * eps.powf(2.0 * alpha);
        assert!((e.u1.mode(1) - expect).norm() < 1e-14);
        assert!((&e.u1 - &SpectralField::single_mode(g, 1, expect)).l2() < 1e-14);

        let z = State::zeros(g);
        assert_eq!(l2_pair(&operator_e(&s, &z, &z)), 0.0);

        let s0 = NormalFormSetting::new(eps, false, PressureLaw::P2, 0.0).unwrap();
        let v = zero_mean_state(g, 2, 1.0);
        let e = operator_e(&s0, &v, &from_normal_coords(&s0, &v));
        assert!((&e.u1 - &v.u1.scale(-I)).l2() < 1e-15);
        assert!((&e.u2 - &v.u2.scale(I)).l2() < 1e-15);
    }

    #[test]
    fn remainder_vanishes_without_correction_and_stays_bounded() {
        let g = grid();
        let s = NormalFormSetting::plain(0.1, PressureLaw::P0, 0.0).unwrap();
        let mut v = zero_mean_state(g, 4, 0.1);
        v.u2 = SpectralField::zeros(g);
        let ut = from_normal_coords(&s, &v);
        assert_eq!(ut.u1, v.u1);
        assert!(correction_r1(&s, &v, &ut).l2() < 1e-16);

        let v = zero_mean_state(g, 5, 0.1);
        let mut norms = vec![];
        for eps in [0.1, 0.01, 0.001, 1e-4] {
            for law in PressureLaw::ALL {
                let s = NormalFormSetting::new(eps, false, law, 1.0).unwrap();
                let r = remainder_r(&s, &v, &from_normal_coords(&s, &v));
                norms.push(r.u1.h1() + r.u2.l2());
            }
            let s = NormalFormSetting::modified(eps, 1.0).unwrap();
            let r = remainder_r(&s, &v, &from_normal_coords(&s, &v));
            norms.push(r.u1.h1() + r.u2.l2());
        }
        let max = norms.iter().cloned().fold(0.0, f64::max);
        assert!(max < 10.0 * (v.u1.h1() + v.u2.l2()));
    }

    /// The structured right-hand side equals `N⁻¹ F(N v)` with `F` the full
    /// rescaled system.
    #[test]
    fn structured_rhs_matches_conjugated_full_rhs() {
        let g = grid();
        for eps in [0.3, 0.05] {
            for s in settings(eps) {
                let kind = if s.conjugated {
                    SystemKind::Modified
                } else {
                    SystemKind::Regularized
                };
                let spec = SystemSpec::new(kind, eps, true, s.amplitude).unwrap();
                let v = zero_mean_state(g, 6, 0.15);
                let u = from_normal_coords(&s, &v);
                let full = rhs_full(&spec, s.law, &u, 0.0).unwrap();
                let oracle = to_normal_coords(&s, &full);
                let got = v_rhs(&s, &v);
                let err = l2_pair(&got.sub(&oracle));
                assert!(err < 1e-12 * l2_pair(&oracle), "{:?} {err}", s);
            }
        }
    }

    #[test]
    fn reduced_rhs_zero_and_mean_free() {
        let g = grid();
        for s in settings(0.1) {
            let z = ReducedState::from_fields(State::zeros(g), 0.3);
            assert_eq!(l2_pair(&reduced_rhs(&s, &z)), 0.0);
            let w = ReducedState::from_fields(zero_mean_state(g, 8, 0.15), 0.3);
            let r = reduced_rhs(&s, &w);
            assert!(r.max_mean() < 1e-12);
        }
    }

    #[test]
    fn reduced_rhs_is_chain_rule_of_v_rhs() {
        let g = grid();
        let t = 0.0123;
        for s in settings(0.1) {
            let w = ReducedState::from_fields(zero_mean_state(g, 12, 0.15), t);
            let v = oscillate(&s, &w.fields(), t, Direction::Backward);
            let dv = v_rhs(&s, &v);
            // d/dt (phase · v) = phase' v + phase dv
            let e = s.epsilon;
            let mut expect = oscillate(&s, &dv, t, Direction::Forward);
            expect.u1.axpy(-I * s.theta1() / e, &w.w1);
            expect.u2.axpy(I / e, &w.w2);
            let got = reduced_rhs(&s, &w);
            assert!(l2_pair(&got.sub(&expect)) < 1e-11 * l2_pair(&expect));
        }
    }

    #[test]
    fn additive_remainder_splits_the_phase_term() {
        let g = grid();
        let eps = 0.1;
        let t = 0.0123;
        let w = ReducedState::from_fields(zero_mean_state(g, 13, 0.2), t);
        let cases = [
            (NormalFormSetting::plain(eps, PressureLaw::P0, 0.25).unwrap(), 1.0),
            (NormalFormSetting::modified(eps, 0.5).unwrap(), -1.0),
        ];
        for (s, sigma) in cases {
            let lam2 = s.amplitude * s.amplitude;
            let mu = -I * sigma * lam2 * C64::from_polar(1.0, 2.0 * sigma * t / eps);
            let f = padded_map([&w.w1], |[x]| x * x * x).remove_mean();
            let mut expect = f.scale(mu / eps);
            expect += &additive_remainder(&s, &w);
            let got = reduced_rhs(&s, &w).u1;
            assert!((&got - &expect).l2() < 1e-12 * got.l2());
        }
        let s = NormalFormSetting::plain(eps, PressureLaw::P2, 0.25).unwrap();
        let g3 = padded_map([&w.w1], |[x]| (x * x * x).conj()).remove_mean();
        let pre = -I * eps.powf(0.5 - 1.0) * C64::from_polar(1.0, -4.0 * t / eps);
        let mut expect = g3.scale(pre);
        expect += &additive_remainder(&s, &w);
        let got = reduced_rhs(&s, &w).u1;
        assert!((&got - &expect).l2() < 1e-12 * got.l2());
    }
}
