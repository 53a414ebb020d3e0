// SPDX-License-Identifier: Apache-2.0

//! Cross-validation battery shared by the `verify` command and the
//! acceptance tests. Each check returns a [`CriterionReport`] instead of
//! panicking so that a full table can always be printed.

use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{evolve_density_exact, normalization_defect, ChannelParams};
use crate::density::DensityMatrix;
use crate::error::Result;
use crate::numeric::{binomial, factorial};
use crate::oracle::{integrate_master_equation, quadrature_moment, IntegratorConfig};
use crate::photon_stats::{pn_coherent, pn_from_density, pn_overlap, PnDistribution};
use crate::quadrature::{integrate_vec, Window};
use crate::special_fn::{hermite2, hermite_bilinear_sum, hermite_diagonal_sum, laguerre, HermiteTable};
use crate::wigner::{
    coherent_wigner, damping_kernel, e_moment, number_wigner, wigner_coherent_evolved, wigner_from_density,
    wigner_grid, GridSpec, InitialState, WignerGrid, WignerSeries, DEFAULT_TOL,
};

/// Coherent amplitude of the Kerr-squeezing figure.
pub const FIG1_AMPLITUDE: f64 = 2.0;
/// Panels of the Kerr-squeezing figure and their χt values.
pub const FIG1_PANELS: [(&str, f64); 6] = [
    ("a", 0.0),
    ("b", 0.04),
    ("c", 0.06),
    ("d", 0.08),
    ("e", 0.1),
    ("f", 0.2),
];
pub const FIG1_HALF_WIDTH: f64 = 4.0;
pub const FIG1_RES: usize = 201;

const SEED: u64 = 0x5eed_2024;
const ORACLE_TOL: f64 = 1e-9;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// An acceptance criterion: id, name and the check itself.
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    check: fn() -> Result<(bool, String)>,
}

impl Criterion {
    pub fn run(&self) -> CriterionReport {
        let start = Instant::now();
        let (passed, detail) = match (self.check)() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        CriterionReport {
            id: self.id,
            name: self.name,
            passed,
            detail,
            elapsed: start.elapsed(),
        }
    }
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            name: "operator-sum vs master-equation integrator",
            check: kraus_vs_integrator,
        },
        Criterion {
            id: 2,
            name: "Kraus normalization",
            check: kraus_normalization,
        },
        Criterion {
            id: 3,
            name: "three-path Wigner agreement",
            check: three_path_wigner,
        },
        Criterion {
            id: 4,
            name: "pure-loss limit vs Gaussian kernel",
            check: pure_loss_limit,
        },
        Criterion {
            id: 5,
            name: "lossless limit and Kerr revival",
            check: lossless_limit,
        },
        Criterion {
            id: 6,
            name: "number-state binomial law",
            check: number_state_binomial,
        },
        Criterion {
            id: 7,
            name: "photon-number χ-independence",
            check: pn_chi_independence,
        },
        Criterion {
            id: 8,
            name: "Hermite identities and overlap integrals",
            check: hermite_identities,
        },
        Criterion {
            id: 9,
            name: "Kerr-squeezing figure grids",
            check: fig1_check,
        },
        Criterion {
            id: 10,
            name: "coherent moment closed form vs quadrature",
            check: coherent_moments,
        },
    ]
}

/// Runs every criterion, handing each report to `on_report` as it finishes.
pub fn run_all(mut on_report: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    criteria()
        .iter()
        .map(|c| {
            let r = c.run();
            on_report(&r);
            r
        })
        .collect()
}

fn random_points(n: usize, half_width: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Complex64::new(
                rng.gen_range(-half_width..=half_width),
                rng.gen_range(-half_width..=half_width),
            )
        })
        .collect()
}

fn oracle_evolve(rho0: &DensityMatrix, params: &ChannelParams) -> Result<DensityMatrix> {
    let cfg = IntegratorConfig::auto(params, rho0.n_cut(), ORACLE_TOL)?;
    integrate_master_equation(rho0, params, &cfg)
}

fn kraus_vs_integrator() -> Result<(bool, String)> {
    let start = Instant::now();
    let params = ChannelParams::new(1.0, 0.2, 0.1)?;
    let n = 25;
    let sources = [
        ("coherent 2", DensityMatrix::coherent(Complex64::new(2.0, 0.0), n)),
        ("fock 3", DensityMatrix::fock(3, n)?),
        ("random", DensityMatrix::random_mixed(n, SEED)),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (label, rho0) in &sources {
        let closed = evolve_density_exact(rho0, &params)?;
        let oracle = oracle_evolve(rho0, &params)?;
        let diff = closed.max_abs_diff(&oracle);
        worst = worst.max(diff);
        parts.push(format!("{label} {diff:.1e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = worst <= 1e-6 && secs < 10.0;
    Ok((
        passed,
        format!(
            "max |Δρ| {worst:.2e} <= 1e-6 [{}], {secs:.1} s < 10 s",
            parts.join(", ")
        ),
    ))
}

fn kraus_normalization() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for gamma_t in [0.1, 0.5] {
        let params = ChannelParams::dimensionless(0.3, gamma_t)?;
        worst = worst.max(normalization_defect(&params, 30, 20));
    }
    Ok((
        worst <= 1e-10,
        format!("max defect {worst:.2e} <= 1e-10 (n_cut 30, l_max 20, γt 0.1 and 0.5)"),
    ))
}

fn three_path_wigner() -> Result<(bool, String)> {
    let start = Instant::now();
    let points = random_points(50, 4.0, SEED);
    let mut worst: f64 = 0.0;
    let sources = [
        InitialState::Coherent(Complex64::new(2.0, 0.0)),
        InitialState::Number(3),
    ];
    for source in &sources {
        let rho0 = source.to_density(None)?;
        for chi_t in [0.0, 0.1] {
            for gamma_t in [0.0, 0.3] {
                let params = ChannelParams::dimensionless(chi_t, gamma_t)?;
                let series = WignerSeries::new(source, &params, DEFAULT_TOL)?;
                let by_oracle = oracle_evolve(&rho0, &params)?;
                let by_kraus = evolve_density_exact(&rho0, &params)?;
                for &alpha in &points {
                    let a = series.evaluate(alpha)?.value;
                    let b = wigner_from_density(&by_oracle, alpha)?;
                    let c = wigner_from_density(&by_kraus, alpha)?;
                    worst = worst.max((a - b).abs()).max((a - c).abs()).max((b - c).abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-6 && secs < 60.0,
        format!("max pairwise |ΔW| {worst:.2e} <= 1e-6 over 400 evaluations, {secs:.1} s < 60 s"),
    ))
}

fn pure_loss_limit() -> Result<(bool, String)> {
    let params = ChannelParams::dimensionless(0.0, 0.4)?;
    let source = InitialState::Coherent(Complex64::new(2.0, 0.0));
    let series = WignerSeries::new(&source, &params, DEFAULT_TOL)?;
    let mut worst: f64 = 0.0;
    for alpha in random_points(50, 4.0, SEED + 4) {
        let a = series.evaluate(alpha)?.value;
        let b = damping_kernel(&source, alpha, &params)?;
        worst = worst.max((a - b).abs());
    }
    Ok((
        worst <= 1e-7,
        format!("max |series - kernel| {worst:.2e} <= 1e-7 (z = 2, γt = 0.4)"),
    ))
}

fn lossless_limit() -> Result<(bool, String)> {
    let z = Complex64::new(FIG1_AMPLITUDE, 0.0);
    let source = InitialState::Coherent(z);
    let points = random_points(50, 4.0, SEED + 5);
    let mut limit: f64 = 0.0;
    for chi_t in [0.04, 0.1, 0.2] {
        let params = ChannelParams::dimensionless(chi_t, 0.0)?;
        let series = WignerSeries::new(&source, &params, DEFAULT_TOL)?;
        for &alpha in &points {
            let a = series.evaluate(alpha)?.value;
            let b = wigner_coherent_evolved(z, alpha, &params, 1e-12)?;
            limit = limit.max((a - b).abs());
        }
    }
    let revival_params = ChannelParams::new(1.0, 0.0, 2.0 * std::f64::consts::PI)?;
    let series = WignerSeries::new(&source, &revival_params, DEFAULT_TOL)?;
    let mut revival: f64 = 0.0;
    for &alpha in &points {
        let w0 = coherent_wigner(z, alpha);
        revival = revival
            .max((series.evaluate(alpha)?.value - w0).abs())
            .max((wigner_coherent_evolved(z, alpha, &revival_params, 1e-12)? - w0).abs());
    }
    Ok((
        limit <= 1e-8 && revival <= 1e-8,
        format!("max |series - lossless sum| {limit:.2e} <= 1e-8, max |W(2π) - W(0)| {revival:.2e} <= 1e-8"),
    ))
}

fn binomial_law(s: usize, gamma_t: f64) -> Vec<f64> {
    let eta = (-2.0 * gamma_t).exp();
    (0..=s)
        .map(|m| binomial(s, m) * eta.powi(m as i32) * (1.0 - eta).powi((s - m) as i32))
        .collect()
}

fn number_state_binomial() -> Result<(bool, String)> {
    let s = 4;
    let source = InitialState::Number(s);
    let points = random_points(50, 4.0, SEED + 6);
    let (mut w_err, mut p_err, mut chi_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for gamma_t in [0.25, 0.5] {
        let law = binomial_law(s, gamma_t);
        let mut per_chi: Vec<(Vec<f64>, PnDistribution)> = Vec::new();
        for chi in [0.0, 3.0] {
            let params = ChannelParams::new(chi, gamma_t, 1.0)?;
            let series = WignerSeries::new(&source, &params, DEFAULT_TOL)?;
            let mut values = Vec::with_capacity(points.len());
            for &alpha in &points {
                let mixture: f64 = law.iter().enumerate().map(|(m, p)| p * number_wigner(m, alpha)).sum();
                let w = series.evaluate(alpha)?.value;
                w_err = w_err.max((w - mixture).abs());
                values.push(w);
            }
            let pn = pn_from_density(&evolve_density_exact(&source.to_density(Some(12))?, &params)?)?;
            for (m, want) in law.iter().enumerate() {
                p_err = p_err.max((pn.probs[m] - want).abs());
                p_err = p_err.max((pn_overlap(&source, m, &params)? - want).abs());
            }
            for extra in pn.probs.iter().skip(s + 1) {
                p_err = p_err.max(extra.abs());
            }
            per_chi.push((values, pn));
        }
        let (a, b) = (&per_chi[0], &per_chi[1]);
        for (x, y) in a.0.iter().zip(&b.0) {
            chi_err = chi_err.max((x - y).abs());
        }
        chi_err = chi_err.max(a.1.max_abs_diff(&b.1));
    }
    Ok((
        w_err <= 1e-7 && p_err <= 1e-10 && chi_err <= 1e-7,
        format!(
            "max |W - mixture| {w_err:.2e} <= 1e-7, max |p - binomial| {p_err:.2e} <= 1e-10, χ=0 vs 3 spread {chi_err:.2e}"
        ),
    ))
}

fn pn_chi_independence() -> Result<(bool, String)> {
    let z = Complex64::new(1.5, 0.0);
    let source = InitialState::Coherent(z);
    let rho0 = source.to_density(None)?;
    let mut overlap = Vec::new();
    let mut density = Vec::new();
    for chi in [0.0, 2.0] {
        let params = ChannelParams::new(chi, 0.3, 0.2)?;
        let probs = (0..=10)
            .map(|s| pn_overlap(&source, s, &params))
            .collect::<Result<Vec<_>>>()?;
        overlap.push(PnDistribution::from_probs(probs));
        density.push(pn_from_density(&evolve_density_exact(&rho0, &params)?)?);
    }
    let d_overlap = overlap[0].max_abs_diff(&overlap[1]);
    let d_density = density[0].max_abs_diff(&density[1]);
    let poisson = pn_coherent(z, &ChannelParams::new(0.0, 0.3, 0.2)?, 11);
    let vs_poisson = overlap[0].max_abs_diff(&poisson);
    Ok((
        d_overlap <= 1e-10 && d_density <= 1e-10 && vs_poisson <= 1e-8,
        format!(
            "overlap spread {d_overlap:.2e}, density spread {d_density:.2e} (both <= 1e-10); overlap vs Poisson {vs_poisson:.2e} <= 1e-8"
        ),
    ))
}

/// H_{m,n}(x, y) = Σ_k (-1)^k m! n! / (k! (m-k)! (n-k)!) x^{m-k} y^{n-k}.
pub fn hermite2_expansion(m: usize, n: usize, x: Complex64, y: Complex64) -> Complex64 {
    hermite2_expansion_scaled(m, n, x, y).0
}

/// The expansion together with Σ_k |term_k|, which bounds its rounding error
/// up to a factor of a few ulps.
pub fn hermite2_expansion_scaled(m: usize, n: usize, x: Complex64, y: Complex64) -> (Complex64, f64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for k in 0..=m.min(n) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let coef = sign * factorial(m) * factorial(n) / (factorial(k) * factorial(m - k) * factorial(n - k));
        let term = coef * x.powi((m - k) as i32) * y.powi((n - k) as i32);
        sum += term;
        scale += term.norm();
    }
    (sum, scale)
}

/// Σ_l z^l/l! H_{m+l,n+l}(x, y), stopped after ten consecutive terms below
/// 1e-16 of the running sum.
fn diagonal_series(z: Complex64, m: usize, n: usize, x: Complex64, y: Complex64) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut small = 0;
    let mut zl = Complex64::new(1.0, 0.0);
    for l in 0..150 {
        if l > 0 {
            zl *= z / l as f64;
        }
        let term = zl * hermite2(m + l, n + l, x, y)?;
        sum += term;
        if term.norm() < 1e-16 * sum.norm() {
            small += 1;
            if small >= 10 {
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok(sum)
}

/// (1/π) ∫ e^{-|α|²} H_{m',n'}(α*, α) H_{m,n}(α*, α) d²α for all indices
/// up to `max`, indexed as [((m' * d + n') * d + m) * d + n] with d = max + 1.
pub fn hermite_orthogonality_table(max: usize, tol: f64) -> Result<Vec<Complex64>> {
    let d = max + 1;
    let window = Window::new(Complex64::new(0.0, 0.0), 9.0);
    let (v, _) = integrate_vec(window, d * d * d * d, tol, |alpha, out| {
        let t = HermiteTable::unscaled(max, alpha.conj(), alpha);
        let w = (-alpha.norm_sqr()).exp() / std::f64::consts::PI;
        for (i, a) in t.values.iter().enumerate() {
            for (j, b) in t.values.iter().enumerate() {
                out[i * d * d + j] = w * a * b;
            }
        }
    })?;
    Ok(v)
}

fn hermite_identities() -> Result<(bool, String)> {
    use crate::photon_stats::f_overlap_check;
    let c = Complex64::new;
    let mut parts = Vec::new();
    let mut ok = true;

    let mut diag: f64 = 0.0;
    for (z, m, n, x, y) in [
        (c(0.3, 0.0), 1, 1, c(1.0, 0.0), c(1.0, 0.0)),
        (c(0.1, 0.05), 2, 0, c(1.0, 1.0), c(1.0, -1.0)),
        (c(-0.4, 0.2), 3, 2, c(0.5, -0.7), c(1.2, 0.3)),
    ] {
        let closed = hermite_diagonal_sum(z, m, n, x, y)?;
        let series = diagonal_series(z, m, n, x, y)?;
        diag = diag.max((closed - series).norm() / series.norm().max(1.0));
    }
    ok &= diag <= 1e-12;
    parts.push(format!("diagonal sum {diag:.1e}"));

    let mut bilinear: f64 = 0.0;
    for (s, t, x, y, a, b) in [
        (
            c(0.2, 0.0),
            c(0.3, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
        ),
        (
            c(0.1, 0.2),
            c(0.3, -0.1),
            c(0.5, 0.2),
            c(-0.3, 1.0),
            c(1.1, 0.0),
            c(0.4, -0.7),
        ),
    ] {
        let closed = hermite_bilinear_sum(s, t, x, y, a, b)?;
        let mut series = Complex64::new(0.0, 0.0);
        for m in 0..=40 {
            for n in 0..=40 {
                let w = s.powi(m as i32) * t.powi(n as i32) / (factorial(m) * factorial(n));
                series += w * hermite2(m, n, x, y)? * hermite2(m, n, a, b)?;
            }
        }
        bilinear = bilinear.max((closed - series).norm() / series.norm().max(1.0));
    }
    ok &= bilinear <= 1e-12;
    parts.push(format!("bilinear sum {bilinear:.1e}"));

    let max = 4;
    let d = max + 1;
    let table = hermite_orthogonality_table(max, 1e-6)?;
    let mut orth: f64 = 0.0;
    for mp in 0..d {
        for np in 0..d {
            for m in 0..d {
                for n in 0..d {
                    let want = if mp == n && np == m {
                        factorial(m) * factorial(n)
                    } else {
                        0.0
                    };
                    let got = table[((mp * d + np) * d + m) * d + n];
                    orth = orth.max((got - want).norm());
                }
            }
        }
    }
    ok &= orth <= 1e-6;
    parts.push(format!("orthogonality {orth:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut in_disk = |r: f64| {
        let (rho, phi): (f64, f64) = (r * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
        Complex64::from_polar(rho, phi)
    };
    let mut expansion: f64 = 0.0;
    for _ in 0..20 {
        let (x, y) = (in_disk(3.0), in_disk(3.0));
        for m in 0..=6 {
            for n in 0..=6 {
                let want = hermite2_expansion(m, n, x, y);
                expansion = expansion.max((hermite2(m, n, x, y)? - want).norm() / want.norm().max(1.0));
            }
        }
    }
    ok &= expansion <= 1e-12;
    parts.push(format!("recurrence vs expansion {expansion:.1e}"));

    let mut lag: f64 = 0.0;
    for _ in 0..40 {
        let u = in_disk(9.0);
        for s in 0..=12 {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let want = hermite2(s, s, Complex64::new(1.0, 0.0), u)?;
            let got = sign * factorial(s) * laguerre(s, u);
            lag = lag.max((got - want).norm() / want.norm().max(1.0));
        }
    }
    ok &= lag <= 1e-11;
    parts.push(format!("Laguerre relation {lag:.1e}"));

    let mut overlap: f64 = 0.0;
    for s in 0..=3 {
        for m in 0..=3 {
            for n in 0..=3 {
                let want = if m == s && n == s { factorial(s) / 4.0 } else { 0.0 };
                overlap = overlap.max((f_overlap_check(m, n, s)? - want).norm());
            }
        }
    }
    ok &= overlap <= 1e-8;
    parts.push(format!("F overlap {overlap:.1e}"));

    Ok((ok, parts.join(", ")))
}

/// The six grids of the Kerr-squeezing figure, labelled `a` through `f`.
pub fn fig1_grids(half_width: f64, res: usize, tol: f64) -> Result<Vec<(&'static str, WignerGrid)>> {
    let source = InitialState::Coherent(Complex64::new(FIG1_AMPLITUDE, 0.0));
    FIG1_PANELS
        .iter()
        .map(|&(label, chi_t)| {
            let params = ChannelParams::dimensionless(chi_t, 0.0)?;
            Ok((
                label,
                wigner_grid(&source, &params, GridSpec::square(half_width, res), tol)?,
            ))
        })
        .collect()
}

fn fig1_check() -> Result<(bool, String)> {
    let start = Instant::now();
    let grids = fig1_grids(FIG1_HALF_WIDTH, FIG1_RES, DEFAULT_TOL)?;
    let secs = start.elapsed().as_secs_f64();
    let mut ok = secs < 300.0;
    let mut parts = Vec::new();
    for (label, grid) in &grids {
        let min = grid.min();
        let integral = grid.integral();
        let sign_ok = match *label {
            "a" => min >= 0.0,
            "b" => true,
            _ => min < 0.0,
        };
        ok &= sign_ok && (integral - 0.5).abs() <= 1e-3;
        let note = if grid.params.chi_t() == 0.0 {
            " identity channel"
        } else {
            ""
        };
        parts.push(format!("({label}{note}) min {min:.3e} ∫ {integral:.6}"));
    }
    Ok((ok, format!("{}; {secs:.1} s < 300 s", parts.join(", "))))
}

fn coherent_moments() -> Result<(bool, String)> {
    let z = Complex64::new(1.0, 0.5);
    let source = InitialState::Coherent(z);
    let params = ChannelParams::new(1.0, 0.3, 0.2)?;
    let mut worst: f64 = 0.0;
    for m in 0..=4 {
        for n in 0..=4 {
            let closed = e_moment(m, n, &source, &params)?;
            let quad = quadrature_moment(&source, m, n, &params, 1e-11)?;
            worst = worst.max((closed - quad).norm());
        }
    }
    Ok((
        worst <= 1e-8,
        format!("max |closed - quadrature| {worst:.2e} <= 1e-8 for m, n <= 4"),
    ))
}
