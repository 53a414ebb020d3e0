// SPDX-License-Identifier: Apache-2.0

//! Closed-form Kerr + loss channel on a truncated Fock space.
//!
//! The evolved matrix elements are
//!
//! ```text
//! ρ(t)_{mn} = e^{-iχt(m²-n²) - γt(m+n)}
//!             Σ_l Λ_{mn}^l / l! · sqrt((m+l)!(n+l)!/(m!n!)) · ρ0_{m+l,n+l}
//! Λ_{mn}    = γ(1 - e^{-2t(γ + iχ(m-n))}) / (γ + iχ(m-n))
//! ```
//!
//! which is the operator sum Σ_{m,n,l} M_{m,n,l} ρ0 𝓜†_{m,n,l} of the
//! generalized Kraus pairs built by [`kraus_pair`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::numeric::{expm1, log_factorial};

/// Default tolerance on the probability mass dropped by a truncated l-sum.
pub const L_SUM_TOL: f64 = 1e-12;

/// Kerr coupling χ, decay rate γ and elapsed time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub chi: f64,
    pub gamma: f64,
    pub t: f64,
}

impl ChannelParams {
    pub fn new(chi: f64, gamma: f64, t: f64) -> Result<Self> {
        if !chi.is_finite() || !gamma.is_finite() || !t.is_finite() {
            return Err(Error::Validation("channel parameters must be finite".into()));
        }
        if gamma < 0.0 {
            return Err(Error::Validation(format!("gamma must be >= 0, got {gamma}")));
        }
        if t < 0.0 {
            return Err(Error::Validation(format!("t must be >= 0, got {t}")));
        }
        Ok(Self { chi, gamma, t })
    }

    /// Parameters given as the products χt and γt (with t = 1).
    pub fn dimensionless(chi_t: f64, gamma_t: f64) -> Result<Self> {
        Self::new(chi_t, gamma_t, 1.0)
    }

    pub fn chi_t(&self) -> f64 {
        self.chi * self.t
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma * self.t
    }

    /// Same channel with a different χ.
    pub fn with_chi(self, chi: f64) -> Self {
        Self { chi, ..self }
    }

    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }

    /// T = 1 - e^{-2γt}, the diagonal value of Λ.
    pub fn damping(&self) -> f64 {
        -(-2.0 * self.gamma_t()).exp_m1()
    }

    /// e^{-iχt(m²-n²) - γt(m+n)}.
    pub fn kerr_factor(&self, m: usize, n: usize) -> Complex64 {
        let d2 = (m * m) as f64 - (n * n) as f64;
        let decay = (-self.gamma_t() * (m + n) as f64).exp();
        Complex64::from_polar(decay, -self.chi_t() * d2)
    }

    /// e^{-iχtm² - γtm}, the one-sided Kraus phase.
    fn kraus_factor(&self, m: usize) -> Complex64 {
        let decay = (-self.gamma_t() * m as f64).exp();
        Complex64::from_polar(decay, -self.chi_t() * (m * m) as f64)
    }
}

/// Λ as a function of the offset d = m - n.
pub fn lambda_by_offset(d: i64, params: &ChannelParams) -> Complex64 {
    let rate = Complex64::new(params.gamma, params.chi * d as f64);
    if params.gamma == 0.0 || rate.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let exponent = Complex64::new(-2.0 * params.gamma_t(), -2.0 * params.chi_t() * d as f64);
    -params.gamma * expm1(exponent) / rate
}

/// Λ_{m,n} = γ(1 - e^{-2t(γ + iχ(m-n))}) / (γ + iχ(m-n)), with the
/// continuous limit 0 at γ = 0.
pub fn lambda_coeff(m: usize, n: usize, params: &ChannelParams) -> Complex64 {
    lambda_by_offset(m as i64 - n as i64, params)
}

/// Λ_{m,n} for 0 <= m, n < n_cut.
#[derive(Debug, Clone)]
pub struct LambdaTable {
    pub n_cut: usize,
    pub params: ChannelParams,
    pub values: DMatrix<Complex64>,
}

impl LambdaTable {
    pub fn new(n_cut: usize, params: ChannelParams) -> Result<Self> {
        let by_offset: Vec<Complex64> = (0..2 * n_cut.max(1) - 1)
            .map(|k| lambda_by_offset(k as i64 - (n_cut as i64 - 1), &params))
            .collect();
        if let Some(bad) = by_offset.iter().find(|l| !(l.re + 1.0 > 0.0)) {
            return Err(Error::Domain(format!(
                "Λ + 1 = {} left the right half-plane",
                bad + 1.0
            )));
        }
        let values = DMatrix::from_fn(n_cut, n_cut, |m, n| by_offset[m + n_cut - 1 - n]);
        Ok(Self { n_cut, params, values })
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.values[(m, n)]
    }
}

/// Evolves `rho0` with the loss-quanta sum cut at `l_max`, failing if the
/// dropped probability mass exceeds [`L_SUM_TOL`].
pub fn evolve_density(rho0: &DensityMatrix, params: &ChannelParams, l_max: usize) -> Result<DensityMatrix> {
    evolve_density_tol(rho0, params, l_max, L_SUM_TOL)
}

/// Evolves `rho0` with the full l-sum, which is finite on the truncated space.
pub fn evolve_density_exact(rho0: &DensityMatrix, params: &ChannelParams) -> Result<DensityMatrix> {
    evolve_density_tol(rho0, params, rho0.n_cut(), L_SUM_TOL)
}

pub fn evolve_density_tol(
    rho0: &DensityMatrix,
    params: &ChannelParams,
    l_max: usize,
    tol: f64,
) -> Result<DensityMatrix> {
    let n_cut = rho0.n_cut();
    let tail = l_sum_tail(rho0, params, l_max);
    if tail > tol {
        return Err(Error::Truncation { tail, tol });
    }
    let lambda = LambdaTable::new(n_cut, *params)?;
    let upper: Vec<Vec<Complex64>> = (0..n_cut)
        .into_par_iter()
        .map(|m| {
            (m..n_cut)
                .map(|n| evolved_entry(rho0, params, lambda.get(m, n), m, n, l_max))
                .collect()
        })
        .collect();
    let mut data = DMatrix::zeros(n_cut, n_cut);
    for (m, row) in upper.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            let n = m + k;
            if m == n {
                data[(m, m)] = Complex64::new(v.re, 0.0);
            } else {
                data[(m, n)] = *v;
                data[(n, m)] = v.conj();
            }
        }
    }
    DensityMatrix::from_raw(data, rho0.tail() + tail)
}

fn evolved_entry(
    rho0: &DensityMatrix,
    params: &ChannelParams,
    lambda: Complex64,
    m: usize,
    n: usize,
    l_max: usize,
) -> Complex64 {
    let n_cut = rho0.n_cut();
    let last = l_max.min(n_cut - 1 - m.max(n));
    let mut acc = rho0.get(m, n);
    let r = lambda.norm();
    if r > 0.0 {
        let log_r = r.ln();
        let unit = lambda / r;
        let mut phase = Complex64::new(1.0, 0.0);
        let base = log_factorial(m) + log_factorial(n);
        for l in 1..=last {
            phase *= unit;
            let log_coef =
                l as f64 * log_r - log_factorial(l) + 0.5 * (log_factorial(m + l) + log_factorial(n + l) - base);
            acc += phase * log_coef.exp() * rho0.get(m + l, n + l);
        }
    }
    params.kerr_factor(m, n) * acc
}

/// Probability mass carried by the l > l_max terms of the diagonal.
fn l_sum_tail(rho0: &DensityMatrix, params: &ChannelParams, l_max: usize) -> f64 {
    let n_cut = rho0.n_cut();
    if l_max + 1 >= n_cut {
        return 0.0;
    }
    let big_t = params.damping();
    if big_t == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    for m in 0..n_cut {
        for l in (l_max + 1)..(n_cut - m) {
            let log_coef = l as f64 * big_t.ln() - log_factorial(l) + log_factorial(m + l)
                - log_factorial(m)
                - 2.0 * params.gamma_t() * m as f64;
            tail += log_coef.exp() * rho0.get(m + l, m + l).re.abs();
        }
    }
    tail
}

/// A single-entry operator coeff · |row⟩⟨col|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOne {
    pub row: usize,
    pub col: usize,
    pub coeff: Complex64,
}

impl RankOne {
    pub fn to_dense(&self, n_cut: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(n_cut, n_cut);
        if self.row < n_cut && self.col < n_cut {
            m[(self.row, self.col)] = self.coeff;
        }
        m
    }

    /// Product self · other, `None` when it vanishes.
    pub fn compose(&self, other: &RankOne) -> Option<RankOne> {
        (self.col == other.row).then(|| RankOne {
            row: self.row,
            col: other.col,
            coeff: self.coeff * other.coeff,
        })
    }
}

/// The pair (M_{m,n,l}, 𝓜†_{m,n,l}) in single-entry form.
///
/// M = sqrt(Λ_{mn}^l/l!) e^{-iχtm² - γtm} |m⟩⟨m| a^l and
/// 𝓜† = sqrt(Λ_{mn}^l/l!) e^{+iχtn² - γtn} a†^l |n⟩⟨n|, both square roots
/// taken as (principal sqrt Λ_{mn})^l so that their product is Λ_{mn}^l.
/// Returns `None` when the pair is annihilated by the truncation.
pub fn kraus_terms(
    m: usize,
    n: usize,
    l: usize,
    params: &ChannelParams,
    n_cut: usize,
) -> Result<Option<(RankOne, RankOne)>> {
    for index in [m, n] {
        if index >= n_cut {
            return Err(Error::Dimension { index, n_cut });
        }
    }
    if m + l >= n_cut || n + l >= n_cut {
        return Ok(None);
    }
    let lambda = lambda_coeff(m, n, params);
    let root = lambda.sqrt().powi(l as i32) / (log_factorial(l) / 2.0).exp();
    let lower_m = (0.5 * (log_factorial(m + l) - log_factorial(m))).exp();
    let lower_n = (0.5 * (log_factorial(n + l) - log_factorial(n))).exp();
    let big_m = RankOne {
        row: m,
        col: m + l,
        coeff: root * params.kraus_factor(m) * lower_m,
    };
    let big_n_dag = RankOne {
        row: n + l,
        col: n,
        coeff: root * params.kraus_factor(n).conj() * lower_n,
    };
    Ok(Some((big_m, big_n_dag)))
}

/// Dense matrices of (M_{m,n,l}, 𝓜†_{m,n,l}) on an n_cut-dimensional space.
pub fn kraus_pair(
    m: usize,
    n: usize,
    l: usize,
    params: &ChannelParams,
    n_cut: usize,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    Ok(match kraus_terms(m, n, l, params, n_cut)? {
        Some((a, b)) => (a.to_dense(n_cut), b.to_dense(n_cut)),
        None => (DMatrix::zeros(n_cut, n_cut), DMatrix::zeros(n_cut, n_cut)),
    })
}

/// Σ_{m,n,l<=l_max} M ρ0 𝓜† computed with dense matrices.
pub fn kraus_sandwich(rho0: &DensityMatrix, params: &ChannelParams, l_max: usize) -> Result<DMatrix<Complex64>> {
    let n_cut = rho0.n_cut();
    let mut out = DMatrix::zeros(n_cut, n_cut);
    for m in 0..n_cut {
        for n in 0..n_cut {
            for l in 0..=l_max {
                let (big_m, big_n_dag) = kraus_pair(m, n, l, params, n_cut)?;
                out += &big_m * rho0.matrix() * &big_n_dag;
            }
        }
    }
    Ok(out)
}

/// Dimension of the leading block on which Σ 𝓜†M is free of truncation
/// effects: n_cut - l_max, or all of it when every l-sum is complete.
pub fn insulated_dimension(n_cut: usize, l_max: usize) -> usize {
    if l_max + 1 >= n_cut {
        n_cut
    } else {
        n_cut - l_max
    }
}

/// max |(Σ_{m,n,l} 𝓜†_{m,n,l} M_{m,n,l} - I)_{jk}| over the insulated block.
pub fn normalization_defect(params: &ChannelParams, n_cut: usize, l_max: usize) -> f64 {
    let dim = insulated_dimension(n_cut, l_max);
    let mut sum = DMatrix::<Complex64>::zeros(n_cut, n_cut);
    for m in 0..n_cut {
        for n in 0..n_cut {
            for l in 0..=l_max {
                let Ok(Some((big_m, big_n_dag))) = kraus_terms(m, n, l, params, n_cut) else {
                    continue;
                };
                if let Some(p) = big_n_dag.compose(&big_m) {
                    sum[(p.row, p.col)] += p.coeff;
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for j in 0..dim {
        for k in 0..dim {
            let id = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((sum[(j, k)] - id).norm());
        }
    }
    worst
}
