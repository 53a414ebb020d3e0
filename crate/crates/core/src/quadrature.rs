// SPDX-License-Identifier: Apache-2.0

//! Tensor Gauss–Legendre quadrature over rectangles in the complex plane.
//!
//! Node counts are doubled until two successive estimates agree, which gives
//! a computable error estimate for the smooth, Gaussian-decaying integrands
//! used throughout the crate.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const START_NODES: usize = 32;
pub const MAX_NODES: usize = 512;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Square window [re ± half_width] × [im ± half_width] in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub center: Complex64,
    pub half_width: f64,
}

impl Window {
    pub fn new(center: Complex64, half_width: f64) -> Self {
        Self { center, half_width }
    }

    /// Window for a function concentrated within `radius` of `center`
    /// with Gaussian decay at least e^{-2|β - β0|²} beyond it.
    pub fn around(center: Complex64, radius: f64) -> Self {
        Self::new(center, radius + 6.0 / std::f64::consts::SQRT_2)
    }
}

/// Tensor rule with `n` nodes per axis, for a vector-valued integrand that
/// writes `out.len()` components.
fn tensor_rule<F>(window: Window, n: usize, dim: usize, f: &F) -> Vec<Complex64>
where
    F: Fn(Complex64, &mut [Complex64]),
{
    let (x, w) = gauss_legendre(n);
    let h = window.half_width;
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    for (xi, wi) in x.iter().zip(&w) {
        for (yj, wj) in x.iter().zip(&w) {
            let beta = window.center + Complex64::new(h * xi, h * yj);
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            f(beta, &mut buf);
            let weight = wi * wj * h * h;
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b * weight;
            }
        }
    }
    acc
}

/// Integrates a vector-valued function over `window` (measure d²β =
/// d(Re β) d(Im β)), doubling the node count until the max-norm change
/// between successive estimates is below `tol / 10`.
///
/// Returns the estimate and the final change.
pub fn integrate_vec<F>(window: Window, dim: usize, tol: f64, f: F) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(Complex64, &mut [Complex64]),
{
    let mut n = START_NODES;
    let mut prev = tensor_rule(window, n, dim, &f);
    let mut change = f64::INFINITY;
    while n < MAX_NODES {
        n *= 2;
        let cur = tensor_rule(window, n, dim, &f);
        change = prev.iter().zip(&cur).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if change < tol / 10.0 {
            return Ok((cur, change));
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        estimate: change,
        nodes: n,
    })
}

/// Scalar complex version of [`integrate_vec`].
pub fn integrate<F>(window: Window, tol: f64, f: F) -> Result<(Complex64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    let (v, change) = integrate_vec(window, 1, tol, |beta, out| out[0] = f(beta))?;
    Ok((v[0], change))
}

/// Scalar real version of [`integrate_vec`].
pub fn integrate_real<F>(window: Window, tol: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> f64,
{
    let (v, change) = integrate(window, tol, |beta| Complex64::new(f(beta), 0.0))?;
    Ok((v.re, change))
}
