//! Fourier representation of complex fields on the torus `R / 2πZ`.
//!
//! A [`SpectralField`] stores the coefficients `u_k`, `k ∈ [-K, K]`, under the
//! mean-value convention `u_k = (1/2π) ∫ e^{-iky} u(y) dy`, so that
//! `u(x) = Σ_k u_k e^{ikx}` and the zero mode is the mean of `u`.
//!
//! Norms are coefficient sums: `‖u‖²_{H^s} = Σ_k max(1,|k|)^{2s} |u_k|²`.
//! Physical integrals over the torus are `2π` times the corresponding means.
//!
//! Nonlinear terms are evaluated on a zero-padded grid of at least
//! `2(2K+1)` points, which is alias-free for cubic products truncated back to
//! `|k| <= K` and for the mean of quartic products.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_inplace(buf: &mut [C64], inverse: bool) {
    PLANNER.with(|p| {
        let plan = if inverse {
            p.borrow_mut().plan_fft_inverse(buf.len())
        } else {
            p.borrow_mut().plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Discretization of the torus: retained wavenumbers `|k| <= n_modes` and a
/// collocation grid of `n_points` equispaced nodes `x_j = 2πj / n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n_modes: usize,
    n_points: usize,
}

impl Grid {
    pub fn new(n_modes: usize, n_points: usize) -> Result<Self> {
        if n_modes < 1 || n_points < 2 * n_modes + 1 {
            return Err(Error::InvalidGrid { n_modes, n_points });
        }
        Ok(Self { n_modes, n_points })
    }

    /// Grid with the smallest FFT-friendly collocation size `>= 2K+1`.
    pub fn with_modes(n_modes: usize) -> Result<Self> {
        Self::new(n_modes, smooth_size(2 * n_modes + 1))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Number of stored coefficients, `2K + 1`.
    pub fn len(&self) -> usize {
        2 * self.n_modes + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Size of the zero-padded grid used for nonlinear products.
    pub fn padded_points(&self) -> usize {
        smooth_size(2 * self.len())
    }

    pub fn index(&self, k: i64) -> Option<usize> {
        let kk = self.n_modes as i64;
        (-kk..=kk).contains(&k).then(|| (k + kk) as usize)
    }

    pub fn wavenumber(&self, idx: usize) -> i64 {
        idx as i64 - self.n_modes as i64
    }

    pub fn wavenumbers(&self) -> impl Iterator<Item = i64> {
        let kk = self.n_modes as i64;
        -kk..=kk
    }

    pub fn nodes(&self) -> Vec<f64> {
        nodes(self.n_points)
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Which norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L2,
    /// `H^s` with weight `max(1,|k|)^{2s}`.
    H(f64),
    /// Sup over a physical grid oversampled 4x relative to the collocation grid.
    LInf,
}

/// A complex-valued, band-limited function on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    /// Field with coefficients `f(k)` for every retained wavenumber.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(i64) -> C64) -> Self {
        Self {
            grid,
            coeffs: grid.wavenumbers().map(&mut f).collect(),
        }
    }

    /// `c · e^{ikx}`. Panics if `|k| > K`.
    pub fn single_mode(grid: Grid, k: i64, c: C64) -> Self {
        let mut f = Self::zeros(grid);
        f.set_mode(k, c);
        f
    }

    pub fn constant(grid: Grid, c: C64) -> Self {
        Self::single_mode(grid, 0, c)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Coefficient `u_k`; zero outside the retained band.
    pub fn mode(&self, k: i64) -> C64 {
        self.grid
            .index(k)
            .map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn set_mode(&mut self, k: i64, c: C64) {
        let i = self
            .grid
            .index(k)
            .unwrap_or_else(|| panic!("wavenumber {k} outside |k| <= {}", self.grid.n_modes));
        self.coeffs[i] = c;
    }

    /// Multiply every coefficient by `f(k)`.
    pub fn map_modes(&self, mut f: impl FnMut(i64, C64) -> C64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| f(self.grid.wavenumber(i), c))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Values `Σ_k u_k e^{ikx_j}` on the collocation nodes.
    pub fn to_physical(&self) -> Vec<C64> {
        synthesize(&self.coeffs, self.grid.n_modes, self.grid.n_points)
    }

    /// Values on an arbitrary equispaced grid of `n >= 2K+1` points.
    pub fn to_physical_on(&self, n: usize) -> Vec<C64> {
        assert!(n >= self.grid.len(), "evaluation grid too coarse");
        synthesize(&self.coeffs, self.grid.n_modes, n)
    }

    /// Inverse of [`to_physical`](Self::to_physical) for band-limited values.
    /// Content above `K` aliases onto `k mod n_points`.
    pub fn from_physical(grid: Grid, values: &[C64]) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::LengthMismatch {
                expected: grid.n_points,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            coeffs: analyze(values, grid.n_modes),
        })
    }

    /// Direct evaluation `Σ_k u_k e^{ikx}` (no FFT).
    pub fn evaluate_at(&self, x: f64) -> C64 {
        self.grid
            .wavenumbers()
            .zip(&self.coeffs)
            .map(|(k, &c)| c * C64::from_polar(1.0, k as f64 * x))
            .sum()
    }

    /// Values on the zero-padded product grid.
    pub fn to_padded(&self) -> Vec<C64> {
        synthesize(&self.coeffs, self.grid.n_modes, self.grid.padded_points())
    }

    /// Truncate padded-grid values back to `|k| <= K`.
    pub fn from_padded(grid: Grid, values: &[C64]) -> Self {
        debug_assert_eq!(values.len(), grid.padded_points());
        Self {
            grid,
            coeffs: analyze(values, grid.n_modes),
        }
    }

    /// The multiplier `m`: `u_k / k` for `k != 0`, zero mean.
    pub fn apply_m(&self) -> Self {
        self.map_modes(|k, c| if k == 0 { C64::new(0.0, 0.0) } else { c / k as f64 })
    }

    /// `Π0 u`, the mean value.
    pub fn mean(&self) -> C64 {
        self.coeffs[self.grid.n_modes]
    }

    /// `(Id - Π0) u`.
    pub fn remove_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[self.grid.n_modes] = C64::new(0.0, 0.0);
        out
    }

    /// `∂x^order u`.
    pub fn derivative(&self, order: u32) -> Self {
        self.map_modes(|k, c| c * (I * k as f64).powu(order))
    }

    /// Pointwise complex conjugate: `(ū)_k = conj(u_{-k})`.
    pub fn conj(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map_modes(|_, c| c * a)
    }

    pub fn scale_real(&self, a: f64) -> Self {
        self.map_modes(|_, c| c * a)
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: C64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (s, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *s += a * o;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn norm(&self, kind: Norm) -> f64 {
        match kind {
            Norm::L2 => self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
            Norm::H(s) => self
                .grid
                .wavenumbers()
                .zip(&self.coeffs)
                .map(|(k, c)| (k.unsigned_abs().max(1) as f64).powf(2.0 * s) * c.norm_sqr())
                .sum::<f64>()
                .sqrt(),
            Norm::LInf => self
                .to_physical_on(4 * self.grid.n_points)
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max),
        }
    }

    pub fn l2(&self) -> f64 {
        self.norm(Norm::L2)
    }

    pub fn h1(&self) -> f64 {
        self.norm(Norm::H(1.0))
    }

    pub fn linf(&self) -> f64 {
        self.norm(Norm::LInf)
    }

    /// `Σ_k conj(u_k) v_k`, i.e. the mean of `ū v`.
    pub fn inner(&self, other: &SpectralField) -> C64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Deterministic random field with independent uniform coefficients in the
/// unit square on `|k| <= band` (clipped to `K`), including the mean mode.
pub fn random_field(grid: Grid, seed: u64, band: usize) -> SpectralField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let band = band.min(grid.n_modes) as i64;
    SpectralField::from_fn(grid, |k| {
        if k.abs() <= band {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Alias-free pointwise product of 2 or 3 fields, truncated to `|k| <= K`.
pub fn multiply(fields: &[&SpectralField]) -> Result<SpectralField> {
    if !(2..=3).contains(&fields.len()) {
        return Err(Error::FactorCount(fields.len()));
    }
    let grid = fields[0].grid;
    for f in &fields[1..] {
        grid.check_same(&f.grid)?;
    }
    let mut acc = fields[0].to_padded();
    for f in &fields[1..] {
        for (a, b) in acc.iter_mut().zip(f.to_padded()) {
            *a *= b;
        }
    }
    Ok(SpectralField::from_padded(grid, &acc))
}

/// Apply a pointwise map to fields on the padded grid and truncate to `|k| <= K`.
/// Alias-free when `f` is a polynomial of degree at most 3 in its arguments
/// and their conjugates.
pub fn padded_map<const N: usize>(
    fields: [&SpectralField; N],
    f: impl Fn([C64; N]) -> C64,
) -> SpectralField {
    let grid = fields[0].grid;
    for g in &fields[1..] {
        assert_eq!(grid, g.grid, "grid mismatch");
    }
    let vals: Vec<Vec<C64>> = fields.iter().map(|g| g.to_padded()).collect();
    let out: Vec<C64> = (0..grid.padded_points())
        .map(|j| f(std::array::from_fn(|i| vals[i][j])))
        .collect();
    SpectralField::from_padded(grid, &out)
}

/// Mean over the torus of a pointwise map, evaluated on the padded grid.
/// Exact when `f` has degree at most 4.
pub fn padded_mean<const N: usize>(
    fields: [&SpectralField; N],
    f: impl Fn([C64; N]) -> C64,
) -> C64 {
    let grid = fields[0].grid;
    for g in &fields[1..] {
        assert_eq!(grid, g.grid, "grid mismatch");
    }
    let vals: Vec<Vec<C64>> = fields.iter().map(|g| g.to_padded()).collect();
    let n = grid.padded_points();
    (0..n)
        .map(|j| f(std::array::from_fn(|i| vals[i][j])))
        .sum::<C64>()
        / n as f64
}

fn synthesize(coeffs: &[C64], n_modes: usize, n: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let kk = n_modes as i64;
    for (i, &c) in coeffs.iter().enumerate() {
        let k = i as i64 - kk;
        buf[k.rem_euclid(n as i64) as usize] = c;
    }
    fft_inplace(&mut buf, true);
    buf
}

fn analyze(values: &[C64], n_modes: usize) -> Vec<C64> {
    let n = values.len();
    let mut buf = values.to_vec();
    fft_inplace(&mut buf, false);
    let scale = 1.0 / n as f64;
    let kk = n_modes as i64;
    (-kk..=kk)
        .map(|k| buf[k.rem_euclid(n as i64) as usize] * scale)
        .collect()
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for SpectralField {
    type Output = SpectralField;
    fn add(mut self, rhs: SpectralField) -> SpectralField {
        self += &rhs;
        self
    }
}

impl Sub for SpectralField {
    type Output = SpectralField;
    fn sub(mut self, rhs: SpectralField) -> SpectralField {
        self -= &rhs;
        self
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale_real(-1.0)
    }
}

impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale_real(-1.0)
    }
}

impl Mul<C64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: C64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale_real(rhs)
    }
}

impl Mul<C64> for SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: C64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale_real(rhs)
    }
}
