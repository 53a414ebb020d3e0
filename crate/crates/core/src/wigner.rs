// SPDX-License-Identifier: Apache-2.0

//! Wigner functions of the evolved state.
//!
//! The evolution series is
//!
//! ```text
//! W(α, t) = Σ_{m,n} C_{m,n}(α, t) E_{m,n}
//! C_{m,n} = e^{-iχt(m²-n²) - γt(m+n)} e^{-2|α|²} H_{m,n}(2α*, 2α)
//!           / (m! n! (Λ_{mn}+1)^{(m+n+2)/2})
//! E_{m,n} = 4 ∫ d²β/π W(β, 0) e^{2(Λ-1)|β|²/(Λ+1)} H_{m,n}(2β/√(Λ+1), 2β*/√(Λ+1))
//! ```
//!
//! Internally every term is evaluated as
//! `kerr(m,n) · [e^{-2|α|²} h_{m,n}(2α*, 2α)] · Ẽ_{m,n}` with
//! h = H/√(m!n!) and Ẽ = E / ((Λ+1)^{(m+n+2)/2} √(m!n!)). The bracket is a
//! displacement-operator matrix element, bounded by one, and Ẽ carries no
//! branch-dependent powers, so no factor grows with the order.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{lambda_by_offset, ChannelParams};
use crate::density::{DensityMatrix, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::numeric::{format_complex, log_factorial, CompensatedSum};
use crate::quadrature::{integrate_real, integrate_vec, Window};
use crate::special_fn::{
    assoc_laguerre_column, hermite2_scaled_weighted, laguerre, normalized_laguerre_diagonal, principal_sqrt, sign,
    unit_phase, HermiteTable,
};

/// Default relative tail tolerance of the evolution series.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Largest anti-diagonal m + n the series may reach.
pub const MAX_SERIES_ORDER: usize = 400;
/// Largest imaginary residual tolerated before a value is projected to the reals.
pub const IMAG_TOL: f64 = 1e-9;
/// Absolute tolerance of quadrature-based moments and kernels.
pub const QUADRATURE_TOL: f64 = 1e-11;

const START_ORDER: usize = 32;
const SMALL_BLOCKS: usize = 3;

/// The state at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Coherent(Complex64),
    Number(usize),
    Matrix(DensityMatrix),
}

impl InitialState {
    /// Fock-space density matrix; `n_cut` overrides the automatic size.
    pub fn to_density(&self, n_cut: Option<usize>) -> Result<DensityMatrix> {
        match self {
            Self::Coherent(z) => Ok(match n_cut {
                Some(n) => DensityMatrix::coherent(*z, n),
                None => DensityMatrix::coherent_auto(*z),
            }),
            Self::Number(s) => DensityMatrix::fock(*s, n_cut.unwrap_or(crate::density::DEFAULT_N_CUT.max(s + 1))),
            Self::Matrix(rho) => match n_cut {
                Some(n) if n != rho.n_cut() => Err(Error::Validation(format!(
                    "density matrix has n_cut {}, requested {n}",
                    rho.n_cut()
                ))),
                _ => Ok(rho.clone()),
            },
        }
    }

    /// Largest Fock index with non-zero weight, if finite.
    pub fn support_index(&self) -> Option<usize> {
        match self {
            Self::Coherent(z) if z.norm() == 0.0 => Some(0),
            Self::Coherent(_) => None,
            Self::Number(s) => Some(*s),
            Self::Matrix(rho) => Some(rho.n_cut() - 1),
        }
    }

    /// Short label, e.g. `coherent:2+0i`, `fock:3` or `matrix:n_cut=8`.
    pub fn label(&self) -> String {
        match self {
            Self::Coherent(z) => format!("coherent:{}", format_complex(*z)),
            Self::Number(s) => format!("fock:{s}"),
            Self::Matrix(rho) => format!("matrix:n_cut={}", rho.n_cut()),
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A real function on phase space with Gaussian decay outside a known window.
pub trait PhaseSpaceFunction: Sync {
    fn value(&self, beta: Complex64) -> f64;
    /// Window outside which the function is negligible.
    fn window(&self) -> Window;
}

impl PhaseSpaceFunction for InitialState {
    fn value(&self, beta: Complex64) -> f64 {
        match self {
            Self::Coherent(z) => coherent_wigner(*z, beta),
            Self::Number(s) => number_wigner(*s, beta),
            Self::Matrix(rho) => parity_trace(rho.matrix(), beta).re,
        }
    }

    fn window(&self) -> Window {
        match self {
            Self::Coherent(z) => Window::around(*z, 0.0),
            Self::Number(s) => Window::around(Complex64::new(0.0, 0.0), (*s as f64).sqrt() + 1.0),
            Self::Matrix(rho) => Window::around(Complex64::new(0.0, 0.0), (rho.n_cut() as f64).sqrt() + 1.0),
        }
    }
}

/// A closure paired with the window that contains its support.
pub struct PhaseSpaceFn<F> {
    pub f: F,
    pub window: Window,
}

impl<F: Fn(Complex64) -> f64 + Sync> PhaseSpaceFunction for PhaseSpaceFn<F> {
    fn value(&self, beta: Complex64) -> f64 {
        (self.f)(beta)
    }

    fn window(&self) -> Window {
        self.window
    }
}

/// (1/π) e^{-2|β - z|²}.
pub fn coherent_wigner(z: Complex64, beta: Complex64) -> f64 {
    (-2.0 * (beta - z).norm_sqr()).exp() / std::f64::consts::PI
}

/// ((-1)^s/π) e^{-2|β|²} L_s(4|β|²).
pub fn number_wigner(s: usize, beta: Complex64) -> f64 {
    let r2 = beta.norm_sqr();
    sign(s) * (-2.0 * r2).exp() * laguerre(s, Complex64::new(4.0 * r2, 0.0)).re / std::f64::consts::PI
}

/// Matrix of ⟨n|D(β)|m⟩ (row n, column m) for n, m < dim.
///
/// Uses ⟨n|D(β)|m⟩ = sqrt(m!/n!) β^{n-m} e^{-|β|²/2} L_m^{(n-m)}(|β|²) for
/// n >= m and the adjoint relation otherwise.
pub fn displacement_matrix(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(dim, dim);
    let r2 = beta.norm_sqr();
    let u = Complex64::new(r2, 0.0);
    let log_r = if r2 > 0.0 { 0.5 * r2.ln() } else { f64::NEG_INFINITY };
    let phase_up = unit_phase(beta);
    let phase_down = -phase_up.conj();
    for d in 0..dim {
        let column = assoc_laguerre_column(dim - 1 - d, d, u);
        let log_power = if d == 0 { 0.0 } else { d as f64 * log_r };
        let (pu, pd) = (phase_up.powi(d as i32), phase_down.powi(d as i32));
        for (j, lag) in column.iter().enumerate() {
            let log_mag = 0.5 * (log_factorial(j) - log_factorial(j + d)) + log_power - 0.5 * r2;
            let mag = log_mag.exp();
            out[(j + d, j)] = pu * mag * lag;
            if d > 0 {
                out[(j, j + d)] = pd * mag * lag;
            }
        }
    }
    out
}

/// (1/π) Σ_{m,n} ρ_{mn} ⟨n|D(2α)(-1)^{a†a}|m⟩ without validation.
fn parity_trace(rho: &DMatrix<Complex64>, alpha: Complex64) -> Complex64 {
    let dim = rho.nrows();
    let disp = displacement_matrix(2.0 * alpha, dim);
    let mut acc = CompensatedSum::new();
    for m in 0..dim {
        for n in 0..dim {
            acc.add(rho[(m, n)] * disp[(n, m)] * sign(m));
        }
    }
    acc.value() / std::f64::consts::PI
}

fn project_real(v: Complex64, what: &str) -> Result<f64> {
    if v.im.abs() > IMAG_TOL || !v.re.is_finite() {
        return Err(Error::Validation(format!("{what} has imaginary residual {:e}", v.im)));
    }
    Ok(v.re)
}

/// Wigner function of `rho` at `alpha` from displaced-parity matrix elements.
pub fn wigner_from_density(rho: &DensityMatrix, alpha: Complex64) -> Result<f64> {
    let defect = rho.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Validation(format!("matrix is not Hermitian: defect {defect:e}")));
    }
    project_real(parity_trace(rho.matrix(), alpha), "displaced-parity value")
}

/// The coefficient C_{m,n}(α, t) of the evolution series.
pub fn c_coeff(m: usize, n: usize, alpha: Complex64, params: &ChannelParams) -> Result<Complex64> {
    let lambda = lambda_by_offset(m as i64 - n as i64, params);
    let root = principal_sqrt(lambda + 1.0, "Λ + 1")?;
    let h = hermite2_scaled_weighted(m, n, 2.0 * alpha.conj(), 2.0 * alpha, 2.0 * alpha.norm_sqr());
    let inv_sqrt_fact = (-0.5 * (log_factorial(m) + log_factorial(n))).exp();
    Ok(params.kerr_factor(m, n) * h * inv_sqrt_fact / root.powi((m + n + 2) as i32))
}

/// Ẽ_{m,n} = E_{m,n} / ((Λ+1)^{(m+n+2)/2} √(m!n!)) for a coherent source:
/// e^{(Λ-1)|z|²} z^m z*^n / (π √(m!n!)).
fn coherent_reduced_moment(z: Complex64, m: usize, n: usize, lambda: Complex64) -> Complex64 {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        let v = if m + n == 0 { 1.0 / std::f64::consts::PI } else { 0.0 };
        return Complex64::new(v, 0.0);
    }
    let log_mag = (lambda.re - 1.0) * r2 + (m + n) as f64 * 0.5 * r2.ln()
        - 0.5 * (log_factorial(m) + log_factorial(n))
        - std::f64::consts::PI.ln();
    let phase = lambda.im * r2 + (m as f64 - n as f64) * z.arg();
    Complex64::from_polar(log_mag.exp(), phase)
}

/// Ẽ_{m,m} for a number state: C(s, m) Λ^{s-m} / π.
fn number_reduced_moment(s: usize, m: usize, n: usize, lambda: Complex64) -> Complex64 {
    if m != n || m > s {
        return Complex64::new(0.0, 0.0);
    }
    let binom = (log_factorial(s) - log_factorial(m) - log_factorial(s - m)).exp();
    binom * lambda.powi((s - m) as i32) / std::f64::consts::PI
}

/// Ẽ_{m,n} for the listed pairs by tensor quadrature of the moment integral
/// over the initial Wigner function.
pub fn reduced_moments_quadrature<F: PhaseSpaceFunction + ?Sized>(
    initial_wf: &F,
    pairs: &[(usize, usize)],
    params: &ChannelParams,
    tol: f64,
) -> Result<Vec<Complex64>> {
    struct Offset {
        d: i64,
        len: usize,
        root: Complex64,
        exponent: Complex64,
        members: Vec<(usize, usize)>,
    }
    let mut offsets: Vec<Offset> = Vec::new();
    for (k, &(m, n)) in pairs.iter().enumerate() {
        let d = n as i64 - m as i64;
        let j = m.min(n);
        let entry = match offsets.iter_mut().position(|o| o.d == d) {
            Some(p) => &mut offsets[p],
            None => {
                let lambda = lambda_by_offset(m as i64 - n as i64, params);
                let w = lambda + 1.0;
                offsets.push(Offset {
                    d,
                    len: 0,
                    root: principal_sqrt(w, "Λ + 1")?,
                    exponent: 2.0 * (lambda - 1.0) / w,
                    members: Vec::new(),
                });
                offsets.last_mut().expect("just pushed")
            }
        };
        entry.len = entry.len.max(j + 1);
        entry.members.push((k, j));
    }
    let scale = 4.0 / std::f64::consts::PI;
    let (values, _) = integrate_vec(initial_wf.window(), pairs.len(), tol, |beta, out| {
        let w0 = initial_wf.value(beta);
        if w0 == 0.0 {
            return;
        }
        let r2 = beta.norm_sqr();
        for o in &offsets {
            let x = 2.0 * beta / o.root;
            let y = 2.0 * beta.conj() / o.root;
            let dd = o.d.unsigned_abs() as usize;
            let (mag, ph) = if o.d >= 0 {
                (y.norm(), unit_phase(y))
            } else {
                (x.norm(), unit_phase(x))
            };
            let q = normalized_laguerre_diagonal(dd, o.len, mag, x * y, -o.exponent.re * r2);
            let common = scale * w0 * Complex64::from_polar(1.0, o.exponent.im * r2) * ph.powi(dd as i32);
            let inv_root = 1.0 / o.root;
            for &(k, j) in &o.members {
                out[k] = common * q[j] * sign(j) * inv_root.powi((2 * j + dd + 2) as i32);
            }
        }
    })?;
    Ok(values)
}

/// The moment E_{m,n} of the evolution series.
pub fn e_moment(m: usize, n: usize, source: &InitialState, params: &ChannelParams) -> Result<Complex64> {
    let lambda = lambda_by_offset(m as i64 - n as i64, params);
    let root = principal_sqrt(lambda + 1.0, "Λ + 1")?;
    let reduced = match source {
        InitialState::Coherent(z) => coherent_reduced_moment(*z, m, n, lambda),
        InitialState::Number(s) => number_reduced_moment(*s, m, n, lambda),
        InitialState::Matrix(rho) => {
            if m >= rho.n_cut() || n >= rho.n_cut() {
                Complex64::new(0.0, 0.0)
            } else {
                reduced_moments_quadrature(source, &[(m, n)], params, QUADRATURE_TOL)?[0]
            }
        }
    };
    let sqrt_fact = (0.5 * (log_factorial(m) + log_factorial(n))).exp();
    Ok(reduced * root.powi((m + n + 2) as i32) * sqrt_fact)
}

/// One evaluation of the evolution series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub imag: f64,
    /// Last anti-diagonal m + n included.
    pub order: usize,
    /// Σ|terms|; the rounding error of `value` is a small multiple of
    /// f64::EPSILON times this.
    pub abs_sum: f64,
}

/// Precomputed coefficients kerr(m,n)·Ẽ_{m,n} for repeated evaluation of
/// the evolution series at many phase-space points.
#[derive(Debug, Clone)]
pub struct WignerSeries {
    params: ChannelParams,
    tol: f64,
    /// Largest single index with a stored coefficient.
    limit: usize,
    /// Coefficients vanish beyond `limit`, so summing through 2·limit is exact.
    finite: bool,
    coef: Vec<Complex64>,
    /// Set when the channel is the identity (χt = γt = 0).
    identity: Option<InitialState>,
}

impl WignerSeries {
    pub fn new(source: &InitialState, params: &ChannelParams, tol: f64) -> Result<Self> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::Validation(format!("tol must be positive, got {tol}")));
        }
        let (limit, finite) = match source.support_index() {
            Some(s) => (s, true),
            None => (MAX_SERIES_ORDER, false),
        };
        let dim = limit + 1;
        let lambdas: Vec<Complex64> = (0..2 * dim - 1)
            .map(|k| lambda_by_offset(k as i64 - limit as i64, params))
            .collect();
        let lambda = |m: usize, n: usize| lambdas[m + limit - n];
        let mut coef = vec![Complex64::new(0.0, 0.0); dim * dim];
        match source {
            InitialState::Coherent(z) => {
                coef.par_chunks_mut(dim).enumerate().for_each(|(m, row)| {
                    for (n, c) in row.iter_mut().enumerate() {
                        *c = params.kerr_factor(m, n) * coherent_reduced_moment(*z, m, n, lambda(m, n));
                    }
                });
            }
            InitialState::Number(s) => {
                for m in 0..=*s {
                    coef[m * dim + m] = params.kerr_factor(m, m) * number_reduced_moment(*s, m, m, lambda(m, m));
                }
            }
            InitialState::Matrix(_) => {
                let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|m| (0..dim).map(move |n| (m, n))).collect();
                let reduced = reduced_moments_quadrature(source, &pairs, params, QUADRATURE_TOL)?;
                for (&(m, n), e) in pairs.iter().zip(&reduced) {
                    coef[m * dim + n] = params.kerr_factor(m, n) * e;
                }
            }
        }
        let identity = (params.chi_t() == 0.0 && params.gamma_t() == 0.0).then(|| source.clone());
        Ok(Self {
            params: *params,
            tol,
            limit,
            finite,
            coef,
            identity,
        })
    }

    /// Forces term-by-term summation even for the identity channel, where
    /// [`WignerSeries::evaluate`] otherwise returns the initial function.
    pub fn without_identity_shortcut(mut self) -> Self {
        self.identity = None;
        self
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn coef(&self, m: usize, n: usize) -> Complex64 {
        self.coef[m * (self.limit + 1) + n]
    }

    /// Sums the series at `alpha` by anti-diagonals m + n = k.
    ///
    /// Stops after three consecutive blocks with Σ|terms| below
    /// tol·|partial sum|, or once a finite source is exhausted.
    pub fn evaluate(&self, alpha: Complex64) -> Result<SeriesValue> {
        if let Some(source) = &self.identity {
            let value = source.value(alpha);
            return Ok(SeriesValue {
                value,
                imag: 0.0,
                order: 0,
                abs_sum: value.abs(),
            });
        }
        let x = 2.0 * alpha.conj();
        let y = 2.0 * alpha;
        let weight = 2.0 * alpha.norm_sqr();
        let mut partial = CompensatedSum::new();
        let mut small = 0;
        let mut k = 0;
        let mut block = 0.0;
        let mut abs_sum = 0.0;
        let mut order = if self.finite {
            self.limit
        } else {
            START_ORDER.min(self.limit)
        };
        loop {
            let table = HermiteTable::scaled(order, x, y, weight);
            let last = if self.finite { 2 * order } else { order };
            while k <= last {
                block = 0.0;
                for m in k.saturating_sub(order)..=k.min(order) {
                    let term = self.coef(m, k - m) * table.get(m, k - m);
                    block += term.norm();
                    partial.add(term);
                }
                abs_sum += block;
                if block < self.tol * (partial.value().norm() + 1e-300) {
                    small += 1;
                } else {
                    small = 0;
                }
                if (self.finite && k == last) || (!self.finite && small >= SMALL_BLOCKS) {
                    let v = partial.value();
                    let value = project_real(v, "series value")?;
                    return Ok(SeriesValue {
                        value,
                        imag: v.im,
                        order: k,
                        abs_sum,
                    });
                }
                k += 1;
            }
            if order >= self.limit {
                return Err(Error::Series {
                    partial: partial.value().re,
                    tail: block,
                    order: k - 1,
                });
            }
            order = (2 * order).min(self.limit);
        }
    }
}

/// W(α, t) from the evolution series.
pub fn evolve_wigner(source: &InitialState, alpha: Complex64, params: &ChannelParams, tol: f64) -> Result<f64> {
    Ok(WignerSeries::new(source, params, tol)?.evaluate(alpha)?.value)
}

/// W(α, t) for a coherent input by the double sum
/// (1/π) Σ_{m,n} a_m a_n* e^{Λ_{mn}|z|²} e^{-2|α|²} h_{m,n}(2α*, 2α),
/// a_m = e^{-|z|²/2} z^m e^{-iχtm² - γtm} / √m!, cut where the amplitude
/// tail guarantees an absolute error below `tol`.
pub fn wigner_coherent_evolved(z: Complex64, alpha: Complex64, params: &ChannelParams, tol: f64) -> Result<f64> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Validation(format!("tol must be positive, got {tol}")));
    }
    let r2 = z.norm_sqr();
    let log_r = 0.5 * r2.ln();
    let gt = params.gamma_t();
    let amp_abs = |m: usize| -> f64 {
        if r2 == 0.0 {
            return if m == 0 { 1.0 } else { 0.0 };
        }
        (-0.5 * r2 + m as f64 * (log_r - gt) - 0.5 * log_factorial(m)).exp()
    };
    let growth = (params.damping() * r2).exp();
    let mut total = 0.0;
    let mut size = 0;
    loop {
        if size > MAX_SERIES_ORDER {
            return Err(Error::Series {
                partial: f64::NAN,
                tail: amp_abs(size),
                order: size,
            });
        }
        total += amp_abs(size);
        size += 1;
        let ratio = r2.sqrt() * (-gt).exp() / ((size + 1) as f64).sqrt();
        if ratio < 1.0 {
            let tail = amp_abs(size) / (1.0 - ratio);
            if tail * (2.0 * total + tail) * growth / std::f64::consts::PI < tol {
                break;
            }
        }
    }
    let amps: Vec<Complex64> = (0..size)
        .map(|m| {
            let phase = m as f64 * z.arg() - params.chi_t() * (m * m) as f64;
            Complex64::from_polar(amp_abs(m), phase)
        })
        .collect();
    let lambdas: Vec<Complex64> = (0..2 * size - 1)
        .map(|k| lambda_by_offset(k as i64 - (size as i64 - 1), params))
        .collect();
    let table = HermiteTable::scaled(size - 1, 2.0 * alpha.conj(), 2.0 * alpha, 2.0 * alpha.norm_sqr());
    let mut acc = CompensatedSum::new();
    for m in 0..size {
        for n in 0..size {
            let lambda = lambdas[m + size - 1 - n];
            acc.add(amps[m] * amps[n].conj() * (lambda * r2).exp() * table.get(m, n));
        }
    }
    project_real(acc.value() / std::f64::consts::PI, "coherent series value")
}

/// W(α, t) for pure loss by Gaussian-kernel smoothing of the initial function:
/// (2/T) ∫ d²β/π e^{-(2/T)|α - β e^{-γt}|²} W(β, 0), T = 1 - e^{-2γt}.
pub fn damping_kernel<F: PhaseSpaceFunction + ?Sized>(
    initial_wf: &F,
    alpha: Complex64,
    params: &ChannelParams,
) -> Result<f64> {
    if params.chi != 0.0 && params.t != 0.0 {
        return Err(Error::Validation(format!(
            "damping kernel requires chi = 0, got {}",
            params.chi
        )));
    }
    let big_t = params.damping();
    if big_t == 0.0 {
        return Ok(initial_wf.value(alpha));
    }
    let shrink = (-params.gamma_t()).exp();
    let center = alpha / shrink;
    let width = 2.0 * shrink * shrink / big_t;
    let kernel_window = Window::new(center, (40.0 / width).sqrt());
    let wf_window = initial_wf.window();
    let window = if kernel_window.half_width < wf_window.half_width {
        kernel_window
    } else {
        wf_window
    };
    let norm = 2.0 / (big_t * std::f64::consts::PI);
    let (v, _) = integrate_real(window, QUADRATURE_TOL, |beta| {
        norm * (-width * (beta - center).norm_sqr()).exp() * initial_wf.value(beta)
    })?;
    Ok(v)
}

/// Rectangular phase-space window and resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl GridSpec {
    /// [-half_width, half_width]² at `res` points per axis.
    pub fn square(half_width: f64, res: usize) -> Self {
        Self {
            re_min: -half_width,
            re_max: half_width,
            im_min: -half_width,
            im_max: half_width,
            n_re: res,
            n_im: res,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.re_max > self.re_min) || !(self.im_max > self.im_min) {
            return Err(Error::Validation("grid window is empty".into()));
        }
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::Validation("grid resolution must be at least 2 per axis".into()));
        }
        Ok(())
    }

    pub fn step_re(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64
    }

    pub fn step_im(&self) -> f64 {
        (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.re_min + i as f64 * self.step_re(),
            self.im_min + j as f64 * self.step_im(),
        )
    }
}

/// Wigner values sampled on a rectangular grid.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub spec: GridSpec,
    /// `values[(i, j)]` is W at re index i, im index j.
    pub values: DMatrix<f64>,
    pub params: ChannelParams,
    pub source: InitialState,
    pub tol: f64,
    /// Largest anti-diagonal used at any point.
    pub max_order: usize,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoid-rule integral of W over the window.
    pub fn integral(&self) -> f64 {
        let s = &self.spec;
        let weight = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for i in 0..s.n_re {
            for j in 0..s.n_im {
                acc += weight(i, s.n_re) * weight(j, s.n_im) * self.values[(i, j)];
            }
        }
        acc * s.step_re() * s.step_im()
    }

    /// CSV with header `re_alpha,im_alpha,w`, re index outer.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::with_capacity(self.spec.n_re * self.spec.n_im * 72 + 32);
        out.push_str("re_alpha,im_alpha,w\n");
        for i in 0..self.spec.n_re {
            for j in 0..self.spec.n_im {
                let p = self.spec.point(i, j);
                out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.re, p.im, self.values[(i, j)]));
            }
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    /// `key=value` metadata describing how the grid was produced.
    pub fn metadata(&self) -> String {
        let s = &self.spec;
        let p = &self.params;
        format!(
            "source={}\nchi={}\ngamma={}\nt={}\nre_min={}\nre_max={}\nim_min={}\nim_max={}\n\
             n_re={}\nn_im={}\ntol={}\nmax_series_order={}\nmin={:.16e}\nintegral={:.16e}\n\
             integral_convention=half\n",
            self.source,
            p.chi,
            p.gamma,
            p.t,
            s.re_min,
            s.re_max,
            s.im_min,
            s.im_max,
            s.n_re,
            s.n_im,
            self.tol,
            self.max_order,
            self.min(),
            self.integral()
        )
    }

    /// Writes the CSV to `path` and the metadata next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)?;
        std::fs::write(metadata_path(path), self.metadata())?;
        Ok(())
    }
}

/// `grid.csv` → `grid.meta`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

/// Evaluates the evolution series on every grid point in parallel.
pub fn wigner_grid(source: &InitialState, params: &ChannelParams, spec: GridSpec, tol: f64) -> Result<WignerGrid> {
    spec.validate()?;
    let series = WignerSeries::new(source, params, tol)?;
    let points: Vec<SeriesValue> = (0..spec.n_re * spec.n_im)
        .into_par_iter()
        .map(|k| {
            let p = spec.point(k / spec.n_im, k % spec.n_im);
            series.evaluate(p).map_err(|e| Error::GridPoint {
                re: p.re,
                im: p.im,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(spec.n_re, spec.n_im, |i, j| points[i * spec.n_im + j].value);
    let max_order = points.iter().map(|v| v.order).max().unwrap_or(0);
    Ok(WignerGrid {
        spec,
        values,
        params: *params,
        source: source.clone(),
        tol,
        max_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::evolve_density_exact;
    use crate::numeric::binomial;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(chi: f64, gamma: f64, t: f64) -> ChannelParams {
        ChannelParams::new(chi, gamma, t).unwrap()
    }

    const POINTS: [(f64, f64); 6] = [
        (0.0, 0.0),
        (0.3, -0.2),
        (1.7, 0.4),
        (-1.1, 0.9),
        (2.5, -1.5),
        (-3.0, -2.0),
    ];

    #[test]
    fn displacement_matrix_elements() {
        let beta = c(0.7, -0.4);
        let d = displacement_matrix(beta, 30);
        let g = (-0.5 * beta.norm_sqr()).exp();
        // ⟨n|D(β)|0⟩ = e^{-|β|²/2} β^n / √n!
        for n in 0..6 {
            let want = g * beta.powi(n as i32) / crate::numeric::factorial(n).sqrt();
            assert!((d[(n, 0)] - want).norm() < 1e-15);
        }
        assert!((d[(0, 1)] - g * (-beta.conj())).norm() < 1e-15);
        // unitary on the low block
        let prod = d.adjoint() * &d;
        for i in 0..8 {
            for j in 0..8 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - id).norm() < 1e-12);
            }
        }
        assert_eq!(displacement_matrix(c(0.0, 0.0), 4), DMatrix::identity(4, 4));
    }

    #[test]
    fn static_wigner_functions() {
        let vac = DensityMatrix::vacuum(5);
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let w = wigner_from_density(&vac, alpha).unwrap();
            assert!((w - (-2.0 * alpha.norm_sqr()).exp() / PI).abs() < 1e-15);
            for s in 0..6 {
                let rho = DensityMatrix::fock(s, 8).unwrap();
                let w = wigner_from_density(&rho, alpha).unwrap();
                assert!((w - number_wigner(s, alpha)).abs() < 1e-13, "s={s} at {alpha}");
            }
            let z = c(1.2, -0.5);
            let w = wigner_from_density(&DensityMatrix::coherent_auto(z), alpha).unwrap();
            assert!((w - coherent_wigner(z, alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut m = DMatrix::<Complex64>::zeros(3, 3);
        m[(0, 0)] = c(1.0, 0.0);
        m[(0, 1)] = c(0.2, 0.0);
        let rho = DensityMatrix::from_raw(m, 0.0).unwrap();
        assert!(matches!(
            wigner_from_density(&rho, c(0.1, 0.0)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn c_coeff_values() {
        let p = params(0.8, 0.3, 0.5);
        let alpha = c(0.6, -0.3);
        let lambda = crate::channel::lambda_coeff(0, 0, &p);
        let want = (-2.0 * alpha.norm_sqr()).exp() / (lambda + 1.0);
        assert!((c_coeff(0, 0, alpha, &p).unwrap() - want).norm() < 1e-15);
        assert_eq!(c_coeff(1, 0, c(0.0, 0.0), &p).unwrap(), c(0.0, 0.0));
        // independent 40-digit evaluation of the defining expression
        let got = c_coeff(2, 1, c(0.5, 0.0), &ChannelParams::dimensionless(0.1, 0.05).unwrap()).unwrap();
        let want = c(-0.2002007301937654, 0.05728631836648336);
        assert!((got - want).norm() < 1e-14, "{got}");
    }

    #[test]
    fn moments_closed_forms() {
        let p = params(1.0, 0.3, 0.2);
        let z = c(1.0, 0.5);
        let l00 = crate::channel::lambda_coeff(0, 0, &p);
        let e00 = e_moment(0, 0, &InitialState::Coherent(z), &p).unwrap();
        let want = (l00 + 1.0) * ((l00 - 1.0) * z.norm_sqr()).exp() / PI;
        assert!((e00 - want).norm() < 1e-15);
        assert_eq!(e_moment(2, 1, &InitialState::Number(3), &p).unwrap(), c(0.0, 0.0));
        let l = crate::channel::lambda_coeff(1, 1, &p);
        let e11 = e_moment(1, 1, &InitialState::Number(2), &p).unwrap();
        assert!((e11 - 2.0 / PI * l * (l + 1.0) * (l + 1.0)).norm() < 1e-14);
    }

    #[test]
    fn moment_quadrature_matches_closed_forms() {
        let p = params(1.0, 0.3, 0.2);
        let pairs: Vec<(usize, usize)> = (0..4).flat_map(|m| (0..4).map(move |n| (m, n))).collect();
        for source in [InitialState::Coherent(c(1.0, 0.5)), InitialState::Number(2)] {
            let quad = reduced_moments_quadrature(&source, &pairs, &p, 1e-12).unwrap();
            for (&(m, n), q) in pairs.iter().zip(&quad) {
                let lambda = lambda_by_offset(m as i64 - n as i64, &p);
                let want = match &source {
                    InitialState::Coherent(z) => coherent_reduced_moment(*z, m, n, lambda),
                    InitialState::Number(s) => number_reduced_moment(*s, m, n, lambda),
                    InitialState::Matrix(_) => unreachable!(),
                };
                assert!((q - want).norm() < 1e-10, "{source} ({m},{n}): {q} vs {want}");
            }
        }
    }

    #[test]
    fn matrix_moments_match_channel() {
        // π Ẽ_{mn} e^{-iχt(m²-n²) - γt(m+n)} is the evolved matrix element
        let rho = DensityMatrix::random_mixed(5, 9);
        let p = params(0.7, 0.25, 0.6);
        let evolved = evolve_density_exact(&rho, &p).unwrap();
        let pairs: Vec<(usize, usize)> = (0..5).flat_map(|m| (0..5).map(move |n| (m, n))).collect();
        let quad = reduced_moments_quadrature(&InitialState::Matrix(rho), &pairs, &p, 1e-12).unwrap();
        for (&(m, n), q) in pairs.iter().zip(&quad) {
            let got = PI * p.kerr_factor(m, n) * q;
            assert!((got - evolved.get(m, n)).norm() < 1e-10, "({m},{n})");
        }
    }

    #[test]
    fn series_at_zero_time_is_initial_function() {
        let p = params(3.0, 0.5, 0.0);
        let z = c(2.0, 0.0);
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let w = evolve_wigner(&InitialState::Coherent(z), alpha, &p, DEFAULT_TOL).unwrap();
            assert!((w - coherent_wigner(z, alpha)).abs() < 1e-10, "{alpha}");
            let w = evolve_wigner(&InitialState::Number(3), alpha, &p, DEFAULT_TOL).unwrap();
            assert!((w - number_wigner(3, alpha)).abs() < 1e-12);
        }
        let forced = WignerSeries::new(&InitialState::Coherent(z), &p, DEFAULT_TOL)
            .unwrap()
            .without_identity_shortcut();
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let v = forced.evaluate(alpha).unwrap();
            assert!(v.order > 0);
            assert!((v.value - coherent_wigner(z, alpha)).abs() < 1e-10, "{alpha}");
            assert!(
                (v.value - coherent_wigner(z, alpha)).abs() <= 64.0 * f64::EPSILON * v.abs_sum + 1e-11 * v.value.abs()
            );
        }
    }

    #[test]
    fn series_matches_evolved_density() {
        let p = params(1.0, 0.15, 0.3);
        let rho0 = DensityMatrix::random_mixed(6, 4);
        let evolved = evolve_density_exact(&rho0, &p).unwrap();
        let series = WignerSeries::new(&InitialState::Matrix(rho0), &p, DEFAULT_TOL).unwrap();
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let want = wigner_from_density(&evolved, alpha).unwrap();
            let got = series.evaluate(alpha).unwrap();
            assert!((got.value - want).abs() < 1e-9, "{alpha}: {} vs {want}", got.value);
            assert_eq!(got.order, 10);
        }
        let z = c(1.5, 0.5);
        let evolved = evolve_density_exact(&DensityMatrix::coherent_auto(z), &p).unwrap();
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let want = wigner_from_density(&evolved, alpha).unwrap();
            let got = evolve_wigner(&InitialState::Coherent(z), alpha, &p, DEFAULT_TOL).unwrap();
            assert!((got - want).abs() < 1e-10, "{alpha}");
        }
    }

    #[test]
    fn number_state_binomial_mixture() {
        let p = params(2.0, 0.25, 1.0);
        let eta = (-2.0 * p.gamma_t()).exp();
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let want: f64 = (0..=3)
                .map(|m| binomial(3, m) * eta.powi(m as i32) * (1.0 - eta).powi(3 - m as i32) * number_wigner(m, alpha))
                .sum();
            let got = evolve_wigner(&InitialState::Number(3), alpha, &p, DEFAULT_TOL).unwrap();
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn coherent_double_sum_paths() {
        let z = c(2.0, 0.0);
        let revival = params(1.0, 0.0, 2.0 * PI);
        let general = params(0.06, 0.0, 1.0);
        let lossy = params(0.9, 0.2, 0.3);
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let w = wigner_coherent_evolved(z, alpha, &revival, 1e-12).unwrap();
            assert!((w - coherent_wigner(z, alpha)).abs() < 1e-8);
            for p in [general, lossy] {
                let direct = wigner_coherent_evolved(z, alpha, &p, 1e-12).unwrap();
                let series = evolve_wigner(&InitialState::Coherent(z), alpha, &p, DEFAULT_TOL).unwrap();
                assert!((direct - series).abs() < 1e-10, "{alpha}");
            }
        }
        let w = wigner_coherent_evolved(z, c(0.0, 0.0), &params(0.0, 0.0, 1.0), 1e-12).unwrap();
        assert!((w - (-8.0f64).exp() / PI).abs() < 1e-14);
    }

    #[test]
    fn damping_kernel_limits() {
        let z = c(1.0, -0.5);
        let source = InitialState::Coherent(z);
        let p = params(0.0, 0.2, 1.0);
        let shrunk = z * (-p.gamma_t()).exp();
        for &(a, b) in &POINTS {
            let alpha = c(a, b);
            let got = damping_kernel(&source, alpha, &p).unwrap();
            assert!((got - coherent_wigner(shrunk, alpha)).abs() < 1e-9);
            let at_zero = damping_kernel(&source, alpha, &params(0.0, 0.2, 0.0)).unwrap();
            assert_eq!(at_zero, coherent_wigner(z, alpha));
        }
        assert!(damping_kernel(&source, c(0.0, 0.0), &params(1.0, 0.2, 1.0)).is_err());
    }

    #[test]
    fn series_errors() {
        let p = params(0.1, 0.1, 1.0);
        assert!(WignerSeries::new(&InitialState::Number(1), &p, 0.0).is_err());
        let err = wigner_grid(&InitialState::Number(1), &p, GridSpec::square(1.0, 1), 1e-12).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn grid_of_vacuum() {
        let spec = GridSpec::square(3.0, 41);
        let grid = wigner_grid(&InitialState::Number(0), &params(1.0, 0.3, 1.0), spec, DEFAULT_TOL).unwrap();
        for i in 0..41 {
            for j in 0..41 {
                let alpha = spec.point(i, j);
                assert!((grid.values[(i, j)] - (-2.0 * alpha.norm_sqr()).exp() / PI).abs() < 1e-15);
            }
        }
        assert!((grid.integral() - 0.5).abs() < 1e-6);
        assert!(grid.min() > 0.0);
        let mut csv = Vec::new();
        grid.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("re_alpha,im_alpha,w"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[..2], [-3.0, -3.0]);
        let second: Vec<f64> = text
            .lines()
            .nth(2)
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(second[0], -3.0);
        assert!(second[1] > -3.0);
        assert_eq!(text.lines().count(), 41 * 41 + 1);
        assert!(grid.metadata().contains("integral_convention=half"));
    }
}
