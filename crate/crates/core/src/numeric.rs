// SPDX-License-Identifier: Apache-2.0

//! Small numerical helpers shared across modules.

use std::sync::OnceLock;

use num_complex::Complex64;

const LOG_FACTORIAL_TABLE: usize = 2048;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LOG_FACTORIAL_TABLE);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..LOG_FACTORIAL_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// ln(n!).
pub fn log_factorial(n: usize) -> f64 {
    let table = log_factorial_table();
    if n < table.len() {
        return table[n];
    }
    // Stirling series, accurate to ~1e-16 relative at this size.
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// n! as f64 (may be infinite for n > 170).
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient C(n, k) as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (log_factorial(n) - log_factorial(k) - log_factorial(n - k))
        .exp()
        .round()
}

/// e^w − 1 without cancellation for small |w|.
pub fn expm1(w: Complex64) -> Complex64 {
    let (s, c) = w.im.sin_cos();
    let half = (0.5 * w.im).sin();
    Complex64::new(w.re.exp_m1() * c - 2.0 * half * half, w.re.exp() * s)
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn neumaier(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

/// Parses a complex number written as `a+bi`, `a-bi`, `a` or `bi`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let s = text.trim();
    if s.is_empty() || s.contains(char::is_whitespace) {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().ok()?,
    };
    (re.is_finite() && im.is_finite()).then(|| Complex64::new(re, im))
}

/// Formats `z` as `a+bi` with round-trip precision.
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_text_round_trip() {
        let c = |re, im| Some(Complex64::new(re, im));
        assert_eq!(parse_complex("2"), c(2.0, 0.0));
        assert_eq!(parse_complex("2+0i"), c(2.0, 0.0));
        assert_eq!(parse_complex("1.5-0.25i"), c(1.5, -0.25));
        assert_eq!(parse_complex("-3i"), c(0.0, -3.0));
        assert_eq!(parse_complex("i"), c(0.0, 1.0));
        assert_eq!(parse_complex("1e-3-2E+1i"), c(1e-3, -20.0));
        assert_eq!(parse_complex("-1e-3"), c(-1e-3, 0.0));
        assert_eq!(parse_complex("1 + 2i"), None);
        assert_eq!(parse_complex("abc"), None);
        assert_eq!(parse_complex("1+2j"), None);
        for z in [
            Complex64::new(0.1, -1.0 / 3.0),
            Complex64::new(-2.5e-300, 7.0),
            Complex64::new(0.0, -0.0),
        ] {
            let back = parse_complex(&format_complex(z)).unwrap();
            assert_eq!(back.re.to_bits(), z.re.to_bits());
            assert_eq!(back.im.to_bits(), z.im.to_bits());
        }
    }

    #[test]
    fn log_factorial_matches_direct_product() {
        for n in [0usize, 1, 5, 20, 100] {
            let direct: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
            assert!((log_factorial(n) - direct).abs() < 1e-10 * direct.max(1.0));
        }
        let direct: f64 = (1..=5000).map(|k| (k as f64).ln()).sum();
        assert!((log_factorial(5000) - direct).abs() / direct < 1e-13);
    }

    #[test]
    fn expm1_small_argument() {
        let w = Complex64::new(1e-10, -2e-10);
        let v = expm1(w);
        assert!((v - w).norm() < 1e-19);
        let w = Complex64::new(0.3, 1.7);
        assert!((expm1(w) - (w.exp() - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(Complex64::new(1.0, 0.0));
        for _ in 0..1000 {
            s.add(Complex64::new(1e-17, 0.0));
        }
        s.add(Complex64::new(-1.0, 0.0));
        assert!((s.value().re - 1e-14).abs() < 1e-20);
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(10, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
    }
}
