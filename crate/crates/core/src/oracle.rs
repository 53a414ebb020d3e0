// SPDX-License-Identifier: Apache-2.0

//! Brute-force references: RK4 integration of the master equation in the
//! Fock basis and direct quadrature of the moment integral.
//!
//! Nothing here calls the closed-form evolution code; only elementary
//! special functions and the quadrature rule are shared.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::ChannelParams;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::numeric::expm1;
use crate::quadrature::integrate;
use crate::special_fn::{hermite2, principal_sqrt};
use crate::wigner::PhaseSpaceFunction;

/// dt·(γ·n_cut + |χ|·n_cut²) must stay below this.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub n_cut: usize,
    /// Max-norm change allowed when the step is halved.
    pub tol: f64,
}

impl IntegratorConfig {
    pub fn new(dt: f64, n_cut: usize, tol: f64, params: &ChannelParams) -> Result<Self> {
        if !(dt > 0.0) || !(tol > 0.0) || n_cut == 0 {
            return Err(Error::Validation("integrator needs dt > 0, tol > 0, n_cut > 0".into()));
        }
        let stiffness = stiffness(params, n_cut);
        if dt * stiffness >= STABILITY_LIMIT {
            return Err(Error::Validation(format!(
                "dt = {dt} too large: dt·(γN + |χ|N²) = {} >= {STABILITY_LIMIT}",
                dt * stiffness
            )));
        }
        Ok(Self { dt, n_cut, tol })
    }

    /// Step at a fifth of the stability limit.
    pub fn auto(params: &ChannelParams, n_cut: usize, tol: f64) -> Result<Self> {
        let stiffness = stiffness(params, n_cut);
        let dt = if stiffness > 0.0 {
            0.2 * STABILITY_LIMIT / stiffness
        } else {
            params.t.max(1.0)
        };
        Self::new(dt, n_cut, tol, params)
    }
}

fn stiffness(params: &ChannelParams, n_cut: usize) -> f64 {
    let n = n_cut as f64;
    params.gamma * n + params.chi.abs() * n * n
}

/// ρ̇_{mn} = -iχ(m²-n²)ρ_{mn} + γ(2√((m+1)(n+1)) ρ_{m+1,n+1} - (m+n)ρ_{mn}).
fn derivative(rho: &DMatrix<Complex64>, chi: f64, gamma: f64, out: &mut DMatrix<Complex64>) {
    let n_cut = rho.nrows();
    for n in 0..n_cut {
        for m in 0..n_cut {
            let kerr = Complex64::new(0.0, -chi * ((m * m) as f64 - (n * n) as f64));
            let mut v = kerr * rho[(m, n)] - gamma * (m + n) as f64 * rho[(m, n)];
            if m + 1 < n_cut && n + 1 < n_cut {
                v += 2.0 * gamma * (((m + 1) * (n + 1)) as f64).sqrt() * rho[(m + 1, n + 1)];
            }
            out[(m, n)] = v;
        }
    }
}

/// Classical RK4 over [0, t] with `steps` equal steps.
pub fn rk4_fixed(rho0: &DMatrix<Complex64>, params: &ChannelParams, steps: usize) -> DMatrix<Complex64> {
    let n_cut = rho0.nrows();
    let h = params.t / steps.max(1) as f64;
    let (chi, gamma) = (params.chi, params.gamma);
    let mut rho = rho0.clone();
    let mut k1 = DMatrix::zeros(n_cut, n_cut);
    let mut k2 = DMatrix::zeros(n_cut, n_cut);
    let mut k3 = DMatrix::zeros(n_cut, n_cut);
    let mut k4 = DMatrix::zeros(n_cut, n_cut);
    for _ in 0..steps {
        derivative(&rho, chi, gamma, &mut k1);
        derivative(&(&rho + &k1 * Complex64::new(0.5 * h, 0.0)), chi, gamma, &mut k2);
        derivative(&(&rho + &k2 * Complex64::new(0.5 * h, 0.0)), chi, gamma, &mut k3);
        derivative(&(&rho + &k3 * Complex64::new(h, 0.0)), chi, gamma, &mut k4);
        let incr = (&k1 + &k2 * Complex64::new(2.0, 0.0) + &k3 * Complex64::new(2.0, 0.0) + &k4)
            * Complex64::new(h / 6.0, 0.0);
        rho += incr;
    }
    rho
}

/// Integrates the master equation from `rho0` over [0, params.t].
///
/// The run is repeated with half the step; the finer result is returned if
/// the two agree to `cfg.tol` in max-norm.
pub fn integrate_master_equation(
    rho0: &DensityMatrix,
    params: &ChannelParams,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix> {
    if rho0.n_cut() != cfg.n_cut {
        return Err(Error::Validation(format!(
            "integrator configured for n_cut {}, state has {}",
            cfg.n_cut,
            rho0.n_cut()
        )));
    }
    if params.t == 0.0 {
        return Ok(rho0.clone());
    }
    let steps = (params.t / cfg.dt).ceil().max(1.0) as usize;
    let coarse = rk4_fixed(rho0.matrix(), params, steps);
    let fine = rk4_fixed(rho0.matrix(), params, 2 * steps);
    let max_diff = (&coarse - &fine).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let coarse = DensityMatrix::from_raw(coarse, rho0.tail())?;
    let fine = DensityMatrix::from_raw(fine, rho0.tail())?;
    if !(max_diff < cfg.tol) {
        return Err(Error::Integrator {
            max_diff,
            tol: cfg.tol,
            coarse: Box::new(coarse),
            fine: Box::new(fine),
        });
    }
    Ok(fine)
}

/// E_{m,n} = 4 ∫ d²β/π W(β, 0) e^{2(Λ-1)|β|²/(Λ+1)} H_{m,n}(2β/√(Λ+1), 2β*/√(Λ+1))
/// by tensor quadrature, with Λ evaluated directly from its definition.
pub fn quadrature_moment<F: PhaseSpaceFunction + ?Sized>(
    initial_wf: &F,
    m: usize,
    n: usize,
    params: &ChannelParams,
    tol: f64,
) -> Result<Complex64> {
    let rate = Complex64::new(params.gamma, params.chi * (m as f64 - n as f64));
    let lambda = if params.gamma == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        -params.gamma * expm1(-2.0 * params.t * rate) / rate
    };
    let root = principal_sqrt(lambda + 1.0, "Λ + 1")?;
    let exponent = 2.0 * (lambda - 1.0) / (lambda + 1.0);
    let (v, _) = integrate(initial_wf.window(), tol, |beta| {
        // an out-of-range Hermite value poisons the estimate, so the
        // quadrature reports non-convergence
        let h =
            hermite2(m, n, 2.0 * beta / root, 2.0 * beta.conj() / root).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        4.0 / std::f64::consts::PI * initial_wf.value(beta) * (exponent * beta.norm_sqr()).exp() * h
    })?;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner::InitialState;
    use std::f64::consts::PI;

    fn params(chi: f64, gamma: f64, t: f64) -> ChannelParams {
        ChannelParams::new(chi, gamma, t).unwrap()
    }

    #[test]
    fn config_enforces_stability() {
        let p = params(1.0, 0.2, 0.1);
        assert!(IntegratorConfig::new(1e-3, 20, 1e-8, &p).is_err());
        assert!(IntegratorConfig::new(1e-4, 20, 1e-8, &p).is_ok());
        let auto = IntegratorConfig::auto(&p, 20, 1e-8).unwrap();
        assert!(auto.dt * (0.2 * 20.0 + 400.0) < STABILITY_LIMIT);
    }

    #[test]
    fn vacuum_is_unchanged() {
        let p = params(3.0, 0.5, 0.4);
        let rho = DensityMatrix::vacuum(6);
        let out = integrate_master_equation(&rho, &p, &IntegratorConfig::auto(&p, 6, 1e-10).unwrap()).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn single_photon_decay() {
        let p = params(2.5, 0.3, 1.0);
        let rho = DensityMatrix::fock(1, 2).unwrap();
        let out = integrate_master_equation(&rho, &p, &IntegratorConfig::auto(&p, 2, 1e-10).unwrap()).unwrap();
        let e = (-0.6f64).exp();
        assert!((out.get(0, 0).re - (1.0 - e)).abs() < 1e-8);
        assert!((out.get(1, 1).re - e).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let p = params(0.0, 1.0, 1.0);
        let rho = DensityMatrix::fock(1, 2).unwrap();
        let exact = (-2.0f64).exp();
        let err = |steps| (rk4_fixed(rho.matrix(), &p, steps)[(1, 1)].re - exact).abs();
        let ratio = err(40) / err(80);
        assert!((ratio - 16.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn halving_failure_is_reported() {
        let p = params(0.0, 1.0, 1.0);
        let rho = DensityMatrix::fock(1, 2).unwrap();
        let cfg = IntegratorConfig::new(0.04, 2, 1e-14, &p).unwrap();
        match integrate_master_equation(&rho, &p, &cfg) {
            Err(Error::Integrator {
                max_diff, coarse, fine, ..
            }) => {
                assert!(max_diff > 1e-14);
                assert_eq!(coarse.n_cut(), 2);
                assert_eq!(fine.n_cut(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn moment_quadrature_against_known_values() {
        // coherent z = 1, m = n = 0, pure loss: (T+1) e^{(T-1)} / π
        let p = params(0.0, 0.2, 1.0);
        let big_t = 1.0 - (-0.4f64).exp();
        let e = quadrature_moment(&InitialState::Coherent(Complex64::new(1.0, 0.0)), 0, 0, &p, 1e-12).unwrap();
        assert!((e.re - (big_t + 1.0) * (big_t - 1.0).exp() / PI).abs() < 1e-9);
        let e = quadrature_moment(&InitialState::Number(2), 1, 2, &p, 1e-12).unwrap();
        assert!(e.norm() < 1e-8);
        let e = quadrature_moment(&InitialState::Number(2), 1, 1, &p, 1e-12).unwrap();
        let want = 2.0 / PI * big_t * (big_t + 1.0).powi(2);
        assert!((e.re - want).abs() < 1e-9, "{e} vs {want}");
    }
}
