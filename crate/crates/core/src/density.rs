// SPDX-License-Identifier: Apache-2.0

//! Truncated Fock-basis density matrices and their text format.
//!
//! ```text
//! fock-density v1 N=<n_cut>
//! m n re im        (N^2 lines, row-major, 17 significant digits)
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::log_factorial;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-10;

/// Default Fock truncation.
pub const DEFAULT_N_CUT: usize = 32;
/// Poisson tail allowed when sizing the space for a coherent state.
pub const COHERENT_TAIL_TOL: f64 = 1e-12;

/// A density matrix ρ_{mn} = ⟨m|ρ|n⟩ on the first `n_cut` Fock states.
///
/// `tail` is the probability mass known to be lost to truncation, so the
/// trace lies in [1 - tail, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
    tail: f64,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, trace and positivity.
    pub fn new(data: DMatrix<Complex64>, tail: f64) -> Result<Self> {
        let rho = Self::from_raw(data, tail)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a square matrix without the physical checks.
    pub fn from_raw(data: DMatrix<Complex64>, tail: f64) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::Validation(format!(
                "density matrix must be square and non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data, tail })
    }

    pub fn vacuum(n_cut: usize) -> Self {
        Self::fock(0, n_cut.max(1)).expect("vacuum fits any truncation")
    }

    /// Number-state projector |s⟩⟨s|.
    pub fn fock(s: usize, n_cut: usize) -> Result<Self> {
        if s >= n_cut {
            return Err(Error::Dimension { index: s, n_cut });
        }
        let mut data = DMatrix::zeros(n_cut, n_cut);
        data[(s, s)] = Complex64::new(1.0, 0.0);
        Ok(Self { data, tail: 0.0 })
    }

    /// Coherent projector |z⟩⟨z| truncated to `n_cut` states.
    pub fn coherent(z: Complex64, n_cut: usize) -> Self {
        let amps = coherent_amplitudes(z, n_cut);
        let data = DMatrix::from_fn(n_cut, n_cut, |m, n| amps[m] * amps[n].conj());
        let tail = poisson_tail(z.norm_sqr(), n_cut);
        Self { data, tail }
    }

    /// Coherent projector on a space large enough that the Poisson tail is
    /// below [`COHERENT_TAIL_TOL`], never smaller than [`DEFAULT_N_CUT`].
    pub fn coherent_auto(z: Complex64) -> Self {
        Self::coherent(z, coherent_n_cut(z, DEFAULT_N_CUT))
    }

    /// A random full-rank mixed state, deterministic in `seed`.
    pub fn random_mixed(n_cut: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = || {
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let a = DMatrix::from_fn(n_cut, n_cut, |_, _| Complex64::new(gauss(), gauss()));
        let mut data = &a * a.adjoint();
        let tr = data.trace().re;
        data /= Complex64::new(tr, 0.0);
        // symmetrize away rounding
        let data = (&data + data.adjoint()) * Complex64::new(0.5, 0.0);
        Self { data, tail: 0.0 }
    }

    pub fn n_cut(&self) -> usize {
        self.data.nrows()
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[(m, n)]
    }

    /// Entry (m, n), zero outside the truncated space.
    #[inline]
    pub fn get_or_zero(&self, m: usize, n: usize) -> Complex64 {
        if m < self.n_cut() && n < self.n_cut() {
            self.data[(m, n)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// max |ρ_{mn} - conj(ρ_{nm})|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n_cut();
        let mut worst: f64 = 0.0;
        for m in 0..n {
            for k in m..n {
                worst = worst.max((self.data[(m, k)] - self.data[(k, m)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest elementwise difference to `other`, padding the smaller with zeros.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let n = self.n_cut().max(other.n_cut());
        let mut worst: f64 = 0.0;
        for m in 0..n {
            for k in 0..n {
                worst = worst.max((self.get_or_zero(m, k) - other.get_or_zero(m, k)).norm());
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::Validation(format!("matrix is not Hermitian: defect {herm:e}")));
        }
        self.validate_trace()?;
        let min_eig = self.min_eigenvalue();
        if min_eig < -EIGEN_TOL {
            return Err(Error::Validation(format!(
                "matrix is not positive semidefinite: smallest eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    fn validate_trace(&self) -> Result<()> {
        let tr = self.trace();
        if tr.im.abs() > HERMITIAN_TOL || tr.re > 1.0 + TRACE_TOL || tr.re < 1.0 - self.tail - TRACE_TOL {
            return Err(Error::Validation(format!(
                "trace {tr} outside [1 - {:e}, 1]",
                self.tail
            )));
        }
        Ok(())
    }

    /// Serializes to the `fock-density v1` text format.
    pub fn to_text(&self) -> String {
        let n = self.n_cut();
        let mut out = String::with_capacity(64 * n * n);
        let _ = writeln!(out, "fock-density v1 N={n}");
        for m in 0..n {
            for k in 0..n {
                let v = self.data[(m, k)];
                let _ = writeln!(out, "{m} {k} {:.16e} {:.16e}", v.re, v.im);
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    /// Parses the `fock-density v1` format without physical validation.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let header = header?;
        let n: usize = header
            .trim()
            .strip_prefix("fock-density v1 N=")
            .and_then(|s| s.parse().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: format!("expected header `fock-density v1 N=<n>`, got `{header}`"),
            })?;
        let mut data = DMatrix::zeros(n, n);
        let mut seen = vec![false; n * n];
        for (idx, line) in lines {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: lineno, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(bad(format!("expected `m n re im`, got `{line}`")));
            }
            let m: usize = fields[0].parse().map_err(|e| bad(format!("row index: {e}")))?;
            let k: usize = fields[1].parse().map_err(|e| bad(format!("column index: {e}")))?;
            let re: f64 = fields[2].parse().map_err(|e| bad(format!("real part: {e}")))?;
            let im: f64 = fields[3].parse().map_err(|e| bad(format!("imaginary part: {e}")))?;
            if m >= n || k >= n {
                return Err(bad(format!("index ({m}, {k}) outside N={n}")));
            }
            if std::mem::replace(&mut seen[m * n + k], true) {
                return Err(bad(format!("duplicate entry ({m}, {k})")));
            }
            data[(m, k)] = Complex64::new(re, im);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("missing entry ({}, {})", missing / n, missing % n),
            });
        }
        let tail = (1.0 - data.trace().re).max(0.0);
        Self::from_raw(data, tail)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

/// ⟨k|z⟩ for k < n_cut, computed in log form.
pub fn coherent_amplitudes(z: Complex64, n_cut: usize) -> Vec<Complex64> {
    let r2 = z.norm_sqr();
    let phase = if r2 > 0.0 {
        z / z.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut ph = Complex64::new(1.0, 0.0);
    (0..n_cut)
        .map(|k| {
            let mag = if k == 0 {
                (-0.5 * r2).exp()
            } else if r2 == 0.0 {
                0.0
            } else {
                (-0.5 * r2 + k as f64 * z.norm().ln() - 0.5 * log_factorial(k)).exp()
            };
            let v = ph * mag;
            ph *= phase;
            v
        })
        .collect()
}

/// Poisson(mean) probability mass at k >= n_cut.
pub fn poisson_tail(mean: f64, n_cut: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut k = n_cut;
    loop {
        let p = (-mean + k as f64 * mean.ln() - log_factorial(k)).exp();
        tail += p;
        if k as f64 > mean && (p == 0.0 || p < 1e-18 * tail) {
            break;
        }
        k += 1;
    }
    tail
}

/// Smallest truncation >= `min` whose coherent Poisson tail is below
/// [`COHERENT_TAIL_TOL`].
pub fn coherent_n_cut(z: Complex64, min: usize) -> usize {
    let mut n = min.max(1);
    while poisson_tail(z.norm_sqr(), n) >= COHERENT_TAIL_TOL {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fock_and_vacuum() {
        let v = DensityMatrix::vacuum(4);
        assert_eq!(v.get(0, 0), Complex64::new(1.0, 0.0));
        v.validate().unwrap();
        assert!(matches!(
            DensityMatrix::fock(5, 5),
            Err(Error::Dimension { index: 5, n_cut: 5 })
        ));
    }

    #[test]
    fn coherent_truncation_is_sized_by_tail() {
        let rho = DensityMatrix::coherent_auto(Complex64::new(2.0, 0.0));
        assert!(rho.n_cut() >= DEFAULT_N_CUT);
        assert!(rho.tail() < COHERENT_TAIL_TOL);
        rho.validate().unwrap();
        let big = DensityMatrix::coherent_auto(Complex64::new(5.0, 1.0));
        assert!(big.n_cut() > DEFAULT_N_CUT);
        assert!((big.trace().re - 1.0).abs() < 1e-11);
        let small = DensityMatrix::coherent(Complex64::new(2.0, 0.0), 6);
        assert!(small.tail() > 0.1);
        small.validate().unwrap();
    }

    #[test]
    fn random_state_is_physical() {
        let rho = DensityMatrix::random_mixed(20, 7);
        rho.validate().unwrap();
        assert!(rho.min_eigenvalue() > 0.0);
    }

    #[test]
    fn validation_rejects_bad_input() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.5, 0.0);
        m[(1, 1)] = Complex64::new(0.5, 0.0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone(), 0.0).is_err());
        m[(1, 0)] = Complex64::new(0.1, 0.0);
        DensityMatrix::new(m.clone(), 0.0).unwrap();
        m[(0, 0)] = Complex64::new(0.7, 0.0);
        assert!(DensityMatrix::new(m.clone(), 0.0).is_err());
        m[(0, 0)] = Complex64::new(1.2, 0.0);
        m[(1, 1)] = Complex64::new(-0.2, 0.0);
        assert!(DensityMatrix::new(m, 0.0).is_err());
    }

    #[test]
    fn text_format_header_and_errors() {
        let rho = DensityMatrix::fock(1, 2).unwrap();
        let text = rho.to_text();
        assert!(text.starts_with("fock-density v1 N=2\n"));
        assert_eq!(text.lines().count(), 5);
        assert!(DensityMatrix::from_text("fock-density v2 N=2\n").is_err());
        assert!(DensityMatrix::from_text("fock-density v1 N=1\n0 0 1 0\n0 0 1 0\n").is_err());
        assert!(DensityMatrix::from_text("fock-density v1 N=2\n0 0 1 0\n").is_err());
        assert!(DensityMatrix::from_text("fock-density v1 N=1\n0 1 1 0\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(seed in any::<u64>(), n in 1usize..8, scale in -300i32..300) {
            let mut rho = DensityMatrix::random_mixed(n, seed).into_matrix();
            rho *= Complex64::new(10f64.powi(scale), 0.0);
            let rho = DensityMatrix::from_raw(rho, 0.0).unwrap();
            let back = DensityMatrix::from_text(&rho.to_text()).unwrap();
            for m in 0..n {
                for k in 0..n {
                    prop_assert_eq!(rho.get(m, k).re.to_bits(), back.get(m, k).re.to_bits());
                    prop_assert_eq!(rho.get(m, k).im.to_bits(), back.get(m, k).im.to_bits());
                }
            }
        }
    }
}
