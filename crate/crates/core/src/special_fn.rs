// SPDX-License-Identifier: Apache-2.0

//! Two-variable Hermite polynomials H_{m,n}(x, y), Laguerre polynomials and
//! the summation identities built on them.
//!
//! H_{m,n} is generated by exp(-t t' + x t + y t'), so that
//! H_{1,0} = x, H_{0,1} = y, H_{1,1} = x y - 1.
//!
//! Large-order values are produced through the Laguerre representation
//!
//! ```text
//! H_{m,n}(x, y) = (-1)^m m! y^{n-m} L_m^{(n-m)}(x y),   n >= m,
//! ```
//!
//! one offset diagonal at a time, with the factorial normalization folded
//! into the three-term recurrence. The plain two-index recurrence is kept
//! for low orders and as a cross-check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::log_factorial;

/// ln of the largest finite f64.
const LOG_F64_MAX: f64 = 709.78;

/// Associated Laguerre polynomials L_0^{(d)}(u), ..., L_k^{(d)}(u).
pub fn assoc_laguerre_column(k: usize, d: usize, u: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(Complex64::new(1.0, 0.0));
    if k == 0 {
        return out;
    }
    let df = d as f64;
    out.push(Complex64::new(1.0 + df, 0.0) - u);
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + df - u) * out[j] - (jf + df) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// Associated Laguerre polynomial L_n^{(d)}(u).
pub fn assoc_laguerre(n: usize, d: usize, u: Complex64) -> Complex64 {
    assoc_laguerre_column(n, d, u)[n]
}

/// Laguerre polynomial L_n(u) by the three-term recurrence.
pub fn laguerre(n: usize, u: Complex64) -> Complex64 {
    assoc_laguerre(n, 0, u)
}

/// H_{m,n}(x, y) by the integer two-index recurrence
/// H_{i+1,j} = x H_{i,j} - j H_{i,j-1}, seeded with H_{0,j} = y^j.
///
/// Exact in structure and cheap for low orders; for orders beyond a few
/// dozen at |x y| >> 1 it loses accuracy, use [`hermite2`] there.
pub fn hermite2_recurrence(m: usize, n: usize, x: Complex64, y: Complex64) -> Complex64 {
    let mut row: Vec<Complex64> = Vec::with_capacity(n + 1);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..=n {
        row.push(p);
        p *= y;
    }
    let mut next = vec![Complex64::new(0.0, 0.0); n + 1];
    for _ in 0..m {
        next[0] = x * row[0];
        for j in 1..=n {
            next[j] = x * row[j] - j as f64 * row[j - 1];
        }
        std::mem::swap(&mut row, &mut next);
    }
    row[n]
}

/// Normalized values along one offset diagonal.
///
/// Returns q_j = sqrt(j!/(j+d)!) * mag^d * e^{-log_weight} * L_j^{(d)}(u)
/// for j = 0..=len-1 using the recurrence
/// q_{j+1} = ((2j+1+d-u) q_j - sqrt(j(j+d)) q_{j-1}) / sqrt((j+1)(j+1+d)).
pub(crate) fn normalized_laguerre_diagonal(
    d: usize,
    len: usize,
    mag: f64,
    u: Complex64,
    log_weight: f64,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let df = d as f64;
    let log_p0 = if d == 0 {
        -log_weight
    } else {
        df * mag.ln() - 0.5 * log_factorial(d) - log_weight
    };
    let p0 = log_p0.exp();
    out.push(Complex64::new(p0, 0.0));
    if len == 1 {
        return out;
    }
    out.push((Complex64::new(1.0 + df, 0.0) - u) * (p0 / (1.0 + df).sqrt()));
    for j in 1..len - 1 {
        let jf = j as f64;
        let a = Complex64::new(2.0 * jf + 1.0 + df, 0.0) - u;
        let b = (jf * (jf + df)).sqrt();
        let c = ((jf + 1.0) * (jf + 1.0 + df)).sqrt();
        let next = (a * out[j] - b * out[j - 1]) / c;
        out.push(next);
    }
    out
}

pub(crate) fn unit_phase(w: Complex64) -> Complex64 {
    let r = w.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        w / r
    }
}

pub(crate) fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Scaled value e^{-log_weight} H_{m,n}(x, y) / sqrt(m! n!).
pub fn hermite2_scaled_weighted(m: usize, n: usize, x: Complex64, y: Complex64, log_weight: f64) -> Complex64 {
    let u = x * y;
    if n >= m {
        let d = n - m;
        let q = normalized_laguerre_diagonal(d, m + 1, y.norm(), u, log_weight)[m];
        q * unit_phase(y).powi(d as i32) * sign(m)
    } else {
        let d = m - n;
        let q = normalized_laguerre_diagonal(d, n + 1, x.norm(), u, log_weight)[n];
        q * unit_phase(x).powi(d as i32) * sign(n)
    }
}

/// H_{m,n}(x, y) / sqrt(m! n!).
///
/// Stays finite at orders where the unscaled polynomial overflows.
pub fn hermite2_scaled(m: usize, n: usize, x: Complex64, y: Complex64) -> Complex64 {
    hermite2_scaled_weighted(m, n, x, y, 0.0)
}

/// H_{m,n}(x, y).
///
/// Fails with [`Error::ScalingRequired`] when the value is outside the f64
/// range.
pub fn hermite2(m: usize, n: usize, x: Complex64, y: Complex64) -> Result<Complex64> {
    if m + n <= 12 {
        let v = hermite2_recurrence(m, n, x, y);
        if v.re.is_finite() && v.im.is_finite() {
            return Ok(v);
        }
    }
    let h = hermite2_scaled(m, n, x, y);
    let half_log_fact = 0.5 * (log_factorial(m) + log_factorial(n));
    let log_magnitude = h.norm().ln() + half_log_fact;
    if !h.re.is_finite() || !h.im.is_finite() || log_magnitude > LOG_F64_MAX {
        return Err(Error::ScalingRequired { m, n, log_magnitude });
    }
    Ok(h * half_log_fact.exp())
}

/// A (max_order+1)^2 table of two-variable Hermite values at fixed (x, y).
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub max_order: usize,
    pub x: Complex64,
    pub y: Complex64,
    /// Row-major, entry (m, n) at `m * (max_order + 1) + n`.
    pub values: Vec<Complex64>,
    /// Entries are H_{m,n} / sqrt(m! n!).
    pub scaled: bool,
    /// Every entry carries an extra factor e^{-log_weight}.
    pub log_weight: f64,
}

impl HermiteTable {
    /// Scaled table e^{-log_weight} H_{m,n}(x,y)/sqrt(m!n!), 0 <= m,n <= max_order.
    ///
    /// With y = conj(x) and log_weight = |x|^2 / 2 every entry is a
    /// displacement-operator matrix element, hence bounded by 1.
    pub fn scaled(max_order: usize, x: Complex64, y: Complex64, log_weight: f64) -> Self {
        let dim = max_order + 1;
        let mut values = vec![Complex64::new(0.0, 0.0); dim * dim];
        let u = x * y;
        let (px, py) = (unit_phase(x), unit_phase(y));
        let (mut phx, mut phy) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for d in 0..dim {
            let len = dim - d;
            let upper = normalized_laguerre_diagonal(d, len, y.norm(), u, log_weight);
            for (j, q) in upper.iter().enumerate() {
                values[j * dim + j + d] = q * phy * sign(j);
            }
            if d > 0 {
                let lower = normalized_laguerre_diagonal(d, len, x.norm(), u, log_weight);
                for (j, q) in lower.iter().enumerate() {
                    values[(j + d) * dim + j] = q * phx * sign(j);
                }
            }
            phx *= px;
            phy *= py;
        }
        Self {
            max_order,
            x,
            y,
            values,
            scaled: true,
            log_weight,
        }
    }

    /// Unscaled table by the two-index recurrence.
    pub fn unscaled(max_order: usize, x: Complex64, y: Complex64) -> Self {
        let dim = max_order + 1;
        let mut values = vec![Complex64::new(0.0, 0.0); dim * dim];
        values[0] = Complex64::new(1.0, 0.0);
        for n in 1..dim {
            values[n] = values[n - 1] * y;
        }
        for m in 0..max_order {
            for n in 0..dim {
                let mut v = x * values[m * dim + n];
                if n > 0 {
                    v -= n as f64 * values[m * dim + n - 1];
                }
                values[(m + 1) * dim + n] = v;
            }
        }
        Self {
            max_order,
            x,
            y,
            values,
            scaled: false,
            log_weight: 0.0,
        }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.values[m * (self.max_order + 1) + n]
    }
}

/// Principal square root of `w`, requiring Re(w) > 0.
pub fn principal_sqrt(w: Complex64, what: &str) -> Result<Complex64> {
    if !(w.re > 0.0) {
        return Err(Error::Domain(format!(
            "{what} = {w} is outside the right half-plane; principal branch undefined"
        )));
    }
    Ok(w.sqrt())
}

/// Closed form of sum_l z^l/l! H_{m+l,n+l}(x, y):
///
/// e^{z x y/(z+1)} / (z+1)^{(m+n+2)/2} * H_{m,n}(x/sqrt(z+1), y/sqrt(z+1)).
pub fn hermite_diagonal_sum(z: Complex64, m: usize, n: usize, x: Complex64, y: Complex64) -> Result<Complex64> {
    let w = z + 1.0;
    let root = principal_sqrt(w, "z + 1")?;
    let h = hermite2(m, n, x / root, y / root)?;
    let power = root.powi((m + n + 2) as i32);
    Ok((z * x * y / w).exp() / power * h)
}

/// Closed form of sum_{m,n} s^m t^n/(m! n!) H_{m,n}(x, y) H_{m,n}(a, b):
///
/// 1/(1 - st) * exp[(s x a + t y b - (x y + a b) s t) / (1 - st)].
pub fn hermite_bilinear_sum(
    s: Complex64,
    t: Complex64,
    x: Complex64,
    y: Complex64,
    a: Complex64,
    b: Complex64,
) -> Result<Complex64> {
    let st = s * t;
    if st.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "bilinear Hermite sum requires |s t| < 1, got {}",
            st.norm()
        )));
    }
    let denom = Complex64::new(1.0, 0.0) - st;
    Ok(((s * x * a + t * y * b - (x * y + a * b) * st) / denom).exp() / denom)
}
