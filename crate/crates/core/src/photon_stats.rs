// SPDX-License-Identifier: Apache-2.0

//! Photon-number distributions p(s) = ⟨s|ρ(t)|s⟩.
//!
//! Two routes: the diagonal of an evolved density matrix, and the overlap
//! of the initial Wigner function with a Laguerre-Gaussian kernel, which
//! contains no χ at all.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::density::{poisson_tail, DensityMatrix};
use crate::error::{Error, Result};
use crate::numeric::log_factorial;
use crate::quadrature::{integrate, integrate_real, Window};
use crate::special_fn::{hermite2, laguerre};
use crate::wigner::{number_wigner, InitialState, PhaseSpaceFunction};

/// Largest |Im ρ_ss| accepted on the diagonal.
pub const DIAGONAL_IMAG_TOL: f64 = 1e-10;
const OVERLAP_TOL: f64 = 1e-12;

/// p(s) for s < probs.len(), plus the mass estimated to lie beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct PnDistribution {
    pub probs: Vec<f64>,
    pub tail: f64,
}

impl PnDistribution {
    /// Builds a distribution whose tail is the mass missing from `probs`.
    pub fn from_probs(probs: Vec<f64>) -> Self {
        let tail = 1.0 - probs.iter().sum::<f64>();
        Self { probs, tail }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((s, p)) = self
            .probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p >= -1e-10 && **p <= 1.0))
        {
            return Err(Error::Validation(format!("p({s}) = {p} outside [0, 1]")));
        }
        let total = self.probs.iter().sum::<f64>() + self.tail;
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(s, p)| s as f64 * p).sum()
    }

    /// Largest |p(s) - q(s)| over the common support.
    pub fn max_abs_diff(&self, other: &PnDistribution) -> f64 {
        let n = self.probs.len().max(other.probs.len());
        (0..n)
            .map(|s| {
                let a = self.probs.get(s).copied().unwrap_or(0.0);
                let b = other.probs.get(s).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `s,p` and a trailing `# tail=<value>` line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::from("s,p\n");
        for (s, p) in self.probs.iter().enumerate() {
            out.push_str(&format!("{s},{p:.16e}\n"));
        }
        out.push_str(&format!("# tail={:.16e}\n", self.tail));
        w.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// p(s) = Re ρ_ss.
pub fn pn_from_density(rho: &DensityMatrix) -> Result<PnDistribution> {
    let mut probs = Vec::with_capacity(rho.n_cut());
    for s in 0..rho.n_cut() {
        let v = rho.get(s, s);
        if v.im.abs() > DIAGONAL_IMAG_TOL {
            return Err(Error::Validation(format!(
                "diagonal entry {s} has imaginary part {:e}",
                v.im
            )));
        }
        probs.push(v.re);
    }
    Ok(PnDistribution::from_probs(probs))
}

/// p(s) by quadrature of
/// 4(-1)^s g/(2g-1)^{s+1} ∫ d²β e^{-2|β|²/(2g-1)} L_s(4g|β|²/(2g-1)) W(β, 0),
/// g = e^{2γt}.
pub fn pn_overlap_wf<F: PhaseSpaceFunction + ?Sized>(initial_wf: &F, s: usize, params: &ChannelParams) -> Result<f64> {
    let g = (2.0 * params.gamma_t()).exp();
    let d = 2.0 * g - 1.0;
    let log_pref = (4.0 * g).ln() - (s + 1) as f64 * d.ln();
    let pref = if s.is_multiple_of(2) {
        log_pref.exp()
    } else {
        -log_pref.exp()
    };
    let tol = OVERLAP_TOL / pref.abs().max(1e-300);
    let (v, _) = integrate_real(initial_wf.window(), tol, |beta| {
        let r2 = beta.norm_sqr();
        let w = initial_wf.value(beta);
        (-2.0 * r2 / d).exp() * laguerre(s, Complex64::new(4.0 * g * r2 / d, 0.0)).re * w
    })?;
    Ok(pref * v)
}

/// [`pn_overlap_wf`] for one of the standard initial states.
pub fn pn_overlap(source: &InitialState, s: usize, params: &ChannelParams) -> Result<f64> {
    pn_overlap_wf(source, s, params)
}

/// p(0), ..., p(n_max) by the overlap route, computed in parallel.
pub fn pn_overlap_distribution(source: &InitialState, params: &ChannelParams, n_max: usize) -> Result<PnDistribution> {
    let probs = (0..=n_max)
        .into_par_iter()
        .map(|s| pn_overlap(source, s, params))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PnDistribution::from_probs(probs))
}

/// Poisson law with mean |z|² e^{-2γt}, the exact distribution for a coherent input.
pub fn pn_coherent(z: Complex64, params: &ChannelParams, n_cut: usize) -> PnDistribution {
    let mean = z.norm_sqr() * (-2.0 * params.gamma_t()).exp();
    let probs = (0..n_cut)
        .map(|s| {
            if mean == 0.0 {
                return if s == 0 { 1.0 } else { 0.0 };
            }
            (-mean + s as f64 * mean.ln() - log_factorial(s)).exp()
        })
        .collect();
    PnDistribution {
        probs,
        tail: poisson_tail(mean, n_cut),
    }
}

/// F_{m,n} = ∫ d²α e^{-2|α|²} W_s(α) H_{m,n}(2α*, 2α) by quadrature, where
/// W_s is the number-state Wigner function; equals (s!/4) δ_{ms} δ_{ns}.
pub fn f_overlap_check(m: usize, n: usize, s: usize) -> Result<Complex64> {
    let radius = (s.max(m).max(n) as f64).sqrt() + 1.0;
    let window = Window::around(Complex64::new(0.0, 0.0), radius);
    let (v, _) = integrate(window, 1e-13, |alpha| {
        let h = hermite2(m, n, 2.0 * alpha.conj(), 2.0 * alpha).unwrap_or(Complex64::new(f64::NAN, 0.0));
        (-2.0 * alpha.norm_sqr()).exp() * number_wigner(s, alpha) * h
    })?;
    Ok(v)
}
