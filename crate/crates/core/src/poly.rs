//! Univariate polynomial helpers: evaluation and all-roots solving through
//! the companion matrix.
//!
//! Coefficients are stored lowest degree first, `c[0] + c[1] x + ...`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluate a real polynomial at a complex point (Horner).
pub fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Evaluate a real polynomial at a real point.
pub fn eval_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// Drop leading coefficients that are negligible relative to the largest one.
pub fn trim(coeffs: &[f64], rel: f64) -> &[f64] {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1].abs() <= rel * scale {
        end -= 1;
    }
    &coeffs[..end]
}

/// All complex roots of a real polynomial, via eigenvalues of the companion
/// matrix followed by Newton polishing.
///
/// Leading coefficients below `1e-14` of the coefficient scale are treated as
/// zero, so a nominal quartic with a vanishing top term yields three roots.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = trim(coeffs, 1e-14);
    if c.len() < 2 {
        return Vec::new();
    }
    let deg = c.len() - 1;
    let lead = c[deg];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -c[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let dc = derivative(c);
    eig.iter().map(|&z| polish(c, &dc, z)).collect()
}

/// Newton refinement that only accepts steps which reduce |p(z)|.
fn polish(c: &[f64], dc: &[f64], mut z: Complex64) -> Complex64 {
    let mut val = eval(c, z).norm();
    for _ in 0..4 {
        let d = eval(dc, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - eval(c, z) / d;
        let cand_val = eval(c, cand).norm();
        if cand_val.partial_cmp(&val) != Some(std::cmp::Ordering::Less) {
            break;
        }
        z = cand;
        val = cand_val;
    }
    z
}
