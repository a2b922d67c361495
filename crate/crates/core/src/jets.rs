//! Taylor jets of the truncated flow `u' = f(u)`, `f(u) = P_K (Id - Π0) u³`,
//! and the repeated integration by parts in time built on them.
//!
//! Along the flow, `f_n(u(t))` is the `n`-th time derivative of `f(u(t))`,
//! so with Taylor coefficients `u(t) = Σ u_j t^j` we get
//! `f_n(u) = (n+1)! u_{n+1}`. The coefficients obey the cubic recurrence
//! `(j+1) u_{j+1} = (Id - Π0) Σ_{a+b+c=j} u_a u_b u_c`.
//!
//! The oscillatory prefactor is `μ(t) = -iσλ² e^{2iσt/ε}` with orientation
//! `σ = ±1`, so that `ε ∂t w1 = μ f(w1) + ε R1` and `∂t μ = (2iσ/ε) μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{padded_map, Grid, Norm, SpectralField, C64, I};

/// Largest supported jet depth (number of Taylor coefficients past `u_0`).
pub const MAX_JET_DEPTH: usize = 16;

/// `f(u) = P_K (Id - Π0) u³`.
pub fn cubic_flow(u: &SpectralField) -> SpectralField {
    padded_map([u], |[x]| x * x * x).remove_mean()
}

/// Taylor coefficients `u_0 = u, u_1, ..., u_depth` of the flow of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetSequence {
    pub base: SpectralField,
    pub coeffs: Vec<SpectralField>,
}

impl JetSequence {
    pub fn depth(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Largest deviation from the recurrence, recomputed by direct products.
    pub fn recurrence_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.depth() {
            let mut s = SpectralField::zeros(*self.base.grid());
            for a in 0..=j {
                for b in 0..=(j - a) {
                    let c = j - a - b;
                    s += &padded_map(
                        [&self.coeffs[a], &self.coeffs[b], &self.coeffs[c]],
                        |[x, y, z]| x * y * z,
                    );
                }
            }
            let lhs = self.coeffs[j + 1].scale_real((j + 1) as f64);
            let d = (&lhs - &s.remove_mean()).l2();
            worst = worst.max(d / s.l2().max(1.0));
        }
        worst
    }
}

fn padded_to_field(grid: Grid, vals: &[C64]) -> SpectralField {
    SpectralField::from_padded(grid, vals)
}

/// Jets of the flow and, optionally, of its tangent flow in direction `v`.
fn jets_impl(
    u: &SpectralField,
    v: Option<&SpectralField>,
    depth: usize,
) -> Result<(Vec<SpectralField>, Vec<SpectralField>)> {
    if depth > MAX_JET_DEPTH {
        return Err(Error::DepthExceeded(depth));
    }
    let grid = *u.grid();
    let np = grid.padded_points();
    // padded values of u_j, δu_j and of the partial sums S_j = Σ_{a+b=j} u_a u_b
    let mut coeffs = vec![u.clone()];
    let mut pu = vec![u.to_padded()];
    let mut s2: Vec<Vec<C64>> = vec![];
    let mut tangent = vec![];
    let mut pd = vec![];
    if let Some(v) = v {
        tangent.push(v.clone());
        pd.push(v.to_padded());
    }
    for j in 0..depth {
        // S_j = Σ_{a+b=j} u_a u_b, now that u_0..u_j are known
        let mut sj = vec![C64::new(0.0, 0.0); np];
        for a in 0..=j {
            let (x, y) = (&pu[a], &pu[j - a]);
            for (s, (p, q)) in sj.iter_mut().zip(x.iter().zip(y)) {
                *s += p * q;
            }
        }
        s2.push(sj);
        // Σ_{a+b+c=j} u_a u_b u_c = Σ_c S_{j-c} u_c
        let mut cube = vec![C64::new(0.0, 0.0); np];
        for c in 0..=j {
            for (s, (p, q)) in cube.iter_mut().zip(s2[j - c].iter().zip(&pu[c])) {
                *s += p * q;
            }
        }
        let next = padded_to_field(grid, &cube)
            .remove_mean()
            .scale_real(1.0 / (j + 1) as f64);
        if v.is_some() {
            // 3 Σ_{c} S_{j-c} δu_c
            let mut lin = vec![C64::new(0.0, 0.0); np];
            for c in 0..=j {
                for (s, (p, q)) in lin.iter_mut().zip(s2[j - c].iter().zip(&pd[c])) {
                    *s += p * q;
                }
            }
            let dnext = padded_to_field(grid, &lin)
                .remove_mean()
                .scale_real(3.0 / (j + 1) as f64);
            pd.push(dnext.to_padded());
            tangent.push(dnext);
        }
        pu.push(next.to_padded());
        coeffs.push(next);
    }
    Ok((coeffs, tangent))
}

/// Taylor jet of depth `depth` (at most [`MAX_JET_DEPTH`]).
pub fn ode_jet(u: &SpectralField, depth: usize) -> Result<JetSequence> {
    let (coeffs, _) = jets_impl(u, None, depth)?;
    Ok(JetSequence {
        base: u.clone(),
        coeffs,
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `f_n(u) = (n+1)! u_{n+1}`.
pub fn f_n(u: &SpectralField, n: usize) -> Result<SpectralField> {
    let jet = ode_jet(u, n + 1)?;
    Ok(jet.coeffs[n + 1].scale_real(factorial(n + 1)))
}

/// `f_0(u), ..., f_n(u)` from a single jet.
pub fn f_all(u: &SpectralField, n: usize) -> Result<Vec<SpectralField>> {
    let jet = ode_jet(u, n + 1)?;
    Ok((0..=n)
        .map(|k| jet.coeffs[k + 1].scale_real(factorial(k + 1)))
        .collect())
}

/// `f'_n(u)[v]` through the tangent jet.
pub fn f_n_directional(u: &SpectralField, n: usize, v: &SpectralField) -> Result<SpectralField> {
    let (_, tangent) = jets_impl(u, Some(v), n + 1)?;
    Ok(tangent[n + 1].scale_real(factorial(n + 1)))
}

/// `f'_0(u)[v], ..., f'_n(u)[v]` from a single tangent jet.
pub fn f_directional_all(
    u: &SpectralField,
    n: usize,
    v: &SpectralField,
) -> Result<Vec<SpectralField>> {
    let (_, tangent) = jets_impl(u, Some(v), n + 1)?;
    Ok((0..=n)
        .map(|k| tangent[k + 1].scale_real(factorial(k + 1)))
        .collect())
}

/// Parameters of the integration-by-parts tower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpCoefficients {
    /// Number of integrations by parts, `n >= 1`.
    pub n: usize,
    pub lambda: f64,
    pub epsilon: f64,
    /// Sobolev embedding constant `c`.
    pub c_embed: f64,
    /// `σ = ±1` in `μ = -iσλ² e^{2iσt/ε}`.
    pub orientation: f64,
}

impl IbpCoefficients {
    pub fn new(n: usize, lambda: f64, epsilon: f64, c_embed: f64) -> Result<Self> {
        if n < 1 || n + 1 > MAX_JET_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "IBP order must lie in 1..={}, got {n}",
                MAX_JET_DEPTH - 1
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        Ok(Self {
            n,
            lambda,
            epsilon,
            c_embed,
            orientation: 1.0,
        })
    }

    /// Flip to `σ = -1`, the orientation produced by the modified reduced system.
    pub fn conjugate_orientation(mut self) -> Self {
        self.orientation = -1.0;
        self
    }

    pub fn mu(&self, t: f64) -> C64 {
        let s = self.orientation;
        -I * s * self.lambda * self.lambda * C64::from_polar(1.0, 2.0 * s * t / self.epsilon)
    }

    /// `Π_{j=1}^{k+1} (2iσj) = (2iσ)^{k+1} (k+1)!`.
    pub fn denominator(&self, k: usize) -> C64 {
        (2.0 * I * self.orientation).powu(k as u32 + 1) * factorial(k + 1)
    }
}

/// Boundary terms `P_n(w1, w1⁰)` of the `n`-fold integrated representation.
pub fn p_n_eval(
    w1_t: &SpectralField,
    w1_0: &SpectralField,
    t: f64,
    coeffs: &IbpCoefficients,
) -> Result<SpectralField> {
    let n = coeffs.n;
    let ft = f_all(w1_t, n - 1)?;
    let f0 = f_all(w1_0, n - 1)?;
    let (mt, m0) = (coeffs.mu(t), coeffs.mu(0.0));
    let mut out = w1_0.clone();
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let d = sign / coeffs.denominator(k);
        out.axpy(d * mt.powu(k as u32 + 1), &ft[k]);
        out.axpy(-d * m0.powu(k as u32 + 1), &f0[k]);
    }
    Ok(out)
}

/// `(1 + Σ_{k<n} (-μ)^{k+1}/Π_{j≤k+1}(2iσj) f'_k(w1)) R1`.
pub fn bold_r_n(
    w1: &SpectralField,
    r1: &SpectralField,
    t: f64,
    coeffs: &IbpCoefficients,
) -> Result<SpectralField> {
    let n = coeffs.n;
    let d = f_directional_all(w1, n - 1, r1)?;
    let m = -coeffs.mu(t);
    let mut out = r1.clone();
    for (k, dk) in d.iter().enumerate() {
        out.axpy(m.powu(k as u32 + 1) / coeffs.denominator(k), dk);
    }
    Ok(out)
}

/// Integrand of the leading term: `(-1)^n / (ε Π_{j≤n}(2iσj)) μ^{n+1} f_n(w1)`.
pub fn leading_integrand(
    w1: &SpectralField,
    t: f64,
    coeffs: &IbpCoefficients,
) -> Result<SpectralField> {
    let n = coeffs.n;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let pre = sign / (coeffs.epsilon * coeffs.denominator(n - 1));
    Ok(f_n(w1, n)?.scale(pre * coeffs.mu(t).powu(n as u32 + 1)))
}

/// Check that samples are uniform with at least three points; returns the step.
pub(crate) fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::InsufficientSampling(format!(
            "need at least 3 samples, got {}",
            times.len()
        )));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::InsufficientSampling("sample times must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-8 * h {
            return Err(Error::InsufficientSampling("sample times must be uniform".into()));
        }
    }
    Ok(h)
}

/// Cumulative integrals `∫_{t_0}^{t_i} g` of uniformly sampled values, each
/// interval integrated exactly against the quadratic through three
/// neighbouring samples.
pub fn cumulative_integral<T>(h: f64, g: &[T]) -> Vec<T>
where
    T: Clone + QuadratureValue,
{
    let n = g.len();
    assert!(n >= 3);
    let mut out = Vec::with_capacity(n);
    let mut acc = g[0].zero_like();
    out.push(acc.clone());
    for i in 0..n - 1 {
        let piece = if i + 2 < n {
            // (5 g_i + 8 g_{i+1} - g_{i+2}) h / 12
            T::combine(&[(5.0, &g[i]), (8.0, &g[i + 1]), (-1.0, &g[i + 2])], h / 12.0)
        } else {
            T::combine(&[(-1.0, &g[i - 1]), (8.0, &g[i]), (5.0, &g[i + 1])], h / 12.0)
        };
        acc = T::combine(&[(1.0, &acc), (1.0, &piece)], 1.0);
        out.push(acc.clone());
    }
    out
}

/// Values that [`cumulative_integral`] can combine linearly.
pub trait QuadratureValue: Sized {
    fn zero_like(&self) -> Self;
    fn combine(terms: &[(f64, &Self)], scale: f64) -> Self;
}

impl QuadratureValue for SpectralField {
    fn zero_like(&self) -> Self {
        SpectralField::zeros(*self.grid())
    }
    fn combine(terms: &[(f64, &Self)], scale: f64) -> Self {
        let mut out = terms[0].1.zero_like();
        for (w, f) in terms {
            out.axpy(C64::new(w * scale, 0.0), f);
        }
        out
    }
}

impl QuadratureValue for C64 {
    fn zero_like(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn combine(terms: &[(f64, &Self)], scale: f64) -> Self {
        terms.iter().map(|(w, f)| **f * (w * scale)).sum()
    }
}

fn check_lengths(times: &[f64], a: &[SpectralField], b: &[SpectralField]) -> Result<()> {
    if a.len() != times.len() || b.len() != times.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: a.len().min(b.len()),
        });
    }
    Ok(())
}

/// Largest `H¹` residual, over the sample times, of the `n`-fold integrated
/// representation
/// `w1(t) = P_n + (-1)^n/(ε Π(2iσj)) ∫ μ^{n+1} f_n(w1) + ∫ R_n`
/// along a sampled trajectory `(t_i, w1(t_i), R1(t_i))`.
pub fn implicit_residual(
    times: &[f64],
    w1: &[SpectralField],
    r1: &[SpectralField],
    coeffs: &IbpCoefficients,
) -> Result<f64> {
    check_lengths(times, w1, r1)?;
    let h = uniform_step(times)?;
    let omega = 2.0 * (coeffs.n + 1) as f64 / coeffs.epsilon;
    if h * omega > 1.0 {
        return Err(Error::InsufficientSampling(format!(
            "step {h:e} does not resolve the phase of μ^(n+1) (frequency {omega:e})"
        )));
    }
    let lead: Vec<SpectralField> = times
        .iter()
        .zip(w1)
        .map(|(&t, w)| leading_integrand(w, t, coeffs))
        .collect::<Result<_>>()?;
    let rem: Vec<SpectralField> = times
        .iter()
        .zip(w1.iter().zip(r1))
        .map(|(&t, (w, r))| bold_r_n(w, r, t, coeffs))
        .collect::<Result<_>>()?;
    let il = cumulative_integral(h, &lead);
    let ir = cumulative_integral(h, &rem);
    let mut worst: f64 = 0.0;
    for i in 0..times.len() {
        let p = p_n_eval(&w1[i], &w1[0], times[i], coeffs)?;
        let res = &(&(&w1[i] - &p) - &il[i]) - &ir[i];
        worst = worst.max(res.h1());
    }
    Ok(worst)
}

/// Largest `H¹` residual of the single integration by parts available for
/// the law P2,
///
/// ```text
/// w1(t) = w1(0) + (ε^{2α}/4)[e^{-4is/ε} g]_0^t
///       - (3i ε^{4α-1}/4) ∫ (Id-Π0)(w̄1² (Id-Π0) w1³)
///       - (3 ε^{2α}/4) ∫ e^{-4is/ε} (Id-Π0)(w̄1² R̄1) + ∫ R1,
/// ```
///
/// with `g = (Id-Π0) w̄1³` and `∂t w1 = -iε^{2α-1} e^{-4it/ε} g + R1`.
pub fn ibp_once_p2(
    times: &[f64],
    w1: &[SpectralField],
    r1: &[SpectralField],
    alpha: f64,
    epsilon: f64,
) -> Result<f64> {
    check_lengths(times, w1, r1)?;
    let h = uniform_step(times)?;
    if h * 4.0 / epsilon > 1.0 {
        return Err(Error::InsufficientSampling(format!(
            "step {h:e} does not resolve the phase e^(-4it/ε)"
        )));
    }
    let a2 = epsilon.powf(2.0 * alpha);
    let slow_pre = -3.0 * I * epsilon.powf(4.0 * alpha - 1.0) / 4.0;
    let g = |w: &SpectralField| padded_map([w], |[x]| (x * x * x).conj()).remove_mean();
    let phase = |t: f64| C64::from_polar(1.0, -4.0 * t / epsilon);
    let slow: Vec<SpectralField> = w1
        .iter()
        .map(|w| {
            let gc = g(w).conj();
            padded_map([w, &gc], |[x, y]| slow_pre * x.conj() * x.conj() * y).remove_mean()
        })
        .collect();
    let fast: Vec<SpectralField> = times
        .iter()
        .zip(w1.iter().zip(r1))
        .map(|(&t, (w, r))| {
            let pre = -0.75 * a2 * phase(t);
            padded_map([w, r], |[x, y]| pre * x.conj() * x.conj() * y.conj()).remove_mean()
        })
        .collect();
    let is = cumulative_integral(h, &slow);
    let iff = cumulative_integral(h, &fast);
    let ir = cumulative_integral(h, r1);
    let b0 = g(&w1[0]).scale(phase(times[0]) * (a2 / 4.0));
    let mut worst: f64 = 0.0;
    for i in 0..times.len() {
        let bt = g(&w1[i]).scale(phase(times[i]) * (a2 / 4.0));
        let rhs = &(&(&(&(&w1[0] + &bt) - &b0) + &is[i]) + &iff[i]) + &ir[i];
        worst = worst.max((&w1[i] - &rhs).h1());
    }
    Ok(worst)
}

/// Smallest `n >= 1` with `(2n+1)(cλ)^{2(n+1)} <= ε`.
pub fn choose_n(lambda: f64, epsilon: f64, c_embed: f64) -> Result<usize> {
    let x = c_embed * lambda;
    if !(x < 1.0) || x < 0.0 {
        return Err(Error::NoAdmissibleOrder(x));
    }
    let mut n = 1usize;
    loop {
        if (2 * n + 1) as f64 * x.powi(2 * (n as i32 + 1)) <= epsilon {
            return Ok(n);
        }
        n += 1;
    }
}

/// Both sides of the printed bound
/// `‖f_n(u)‖_{H¹} <= Π_{k≤n}(2k+1) ‖u‖_{L∞}^{2(n+1)} ‖u‖_{H¹}`, and the same
/// right-hand side with the extra factor `2n+3` coming from the derivative
/// of a degree `2n+3` polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnBoundReport {
    pub n: usize,
    pub norm: f64,
    pub bound: f64,
    /// `norm / bound` (0 when both vanish).
    pub ratio: f64,
    pub degree_corrected_bound: f64,
    pub degree_corrected_ratio: f64,
}

fn odd_product(n: usize) -> f64 {
    (0..=n).map(|k| (2 * k + 1) as f64).product()
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn verify_fn_bound(u: &SpectralField, n: usize) -> Result<FnBoundReport> {
    if n > 8 {
        return Err(Error::InvalidParameter(format!("bound check supports n <= 8, got {n}")));
    }
    let norm = f_n(u, n)?.h1();
    let bound = odd_product(n) * u.linf().powi(2 * (n as i32 + 1)) * u.h1();
    let corrected = (2 * n + 3) as f64 * bound;
    Ok(FnBoundReport {
        n,
        norm,
        bound,
        ratio: ratio(norm, bound),
        degree_corrected_bound: corrected,
        degree_corrected_ratio: ratio(norm, corrected),
    })
}

/// The printed directional bound
/// `‖f'_n(u)v‖_{H¹} <= Π(2k+1)(‖u‖∞^{2n+2}‖v‖_{H¹} + ‖u‖∞^{2n+1}‖v‖∞‖u‖_{H¹})`,
/// with the same degree correction.
pub fn verify_fn_directional_bound(
    u: &SpectralField,
    n: usize,
    v: &SpectralField,
) -> Result<FnBoundReport> {
    if n > 8 {
        return Err(Error::InvalidParameter(format!("bound check supports n <= 8, got {n}")));
    }
    let norm = f_n_directional(u, n, v)?.h1();
    let ui = u.linf();
    let e = 2 * n as i32 + 1;
    let bound = odd_product(n) * (ui.powi(e + 1) * v.h1() + ui.powi(e) * v.linf() * u.h1());
    let corrected = (2 * n + 3) as f64 * bound;
    Ok(FnBoundReport {
        n,
        norm,
        bound,
        ratio: ratio(norm, bound),
        degree_corrected_bound: corrected,
        degree_corrected_ratio: ratio(norm, corrected),
    })
}

/// `H¹` norm helper used by reports.
pub fn h1(u: &SpectralField) -> f64 {
    u.norm(Norm::H(1.0))
}
