//! Dense real polynomials stored as ascending coefficient vectors.
//!
//! `p[k]` is the coefficient of `x^k`. These are only ever used for tableau
//! construction and the small stage polynomials, so degrees stay below ~12.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Evaluates `p(x)` by Horner's rule.
pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Evaluates `p(x)` and `p'(x)` together.
pub fn eval_with_derivative(p: &[f64], x: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut deriv = 0.0;
    for &c in p.iter().rev() {
        deriv = deriv * x + value;
        value = value * x + c;
    }
    (value, deriv)
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn add_scaled(a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(0.0) + scale * b.get(k).copied().unwrap_or(0.0))
        .collect()
}

/// Antiderivative with zero constant term.
pub fn integrate(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k + 1] = c / (k as f64 + 1.0);
    }
    out
}

/// Drops trailing zero coefficients (exact zeros only).
pub fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.len() > 1 && p[p.len() - 1] == 0.0 {
        p.pop();
    }
    p
}

/// Legendre polynomial `P_n` shifted to `[0, 1]`, i.e. `P_n(2x - 1)`.
pub fn shifted_legendre(n: usize) -> Vec<f64> {
    let t = [-1.0, 2.0];
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = t.to_vec();
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) t P_k - k P_{k-1}
        let kf = k as f64;
        let tp = mul(&t, &cur);
        let next: Vec<f64> = add_scaled(&tp, &prev, -kf / (2.0 * kf + 1.0))
            .into_iter()
            .map(|c| c * (2.0 * kf + 1.0) / (kf + 1.0))
            .collect();
        prev = cur;
        cur = next;
    }
    cur
}

/// Real roots of a polynomial whose roots are known to be real and simple.
///
/// Roots come from the companion-matrix eigenvalues and are then polished by
/// Newton's method on `p` itself. Returned in ascending order.
pub fn real_roots(p: &[f64]) -> Result<Vec<f64>> {
    let p = trim(p.to_vec());
    let degree = p.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = p[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -p[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let mut roots = Vec::with_capacity(degree);
    for z in eig.iter() {
        if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
            return Err(Error::ConstructionFailure(format!(
                "expected real roots, found {} + {}i",
                z.re, z.im
            )));
        }
        roots.push(newton_polish(&p, z.re));
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

fn newton_polish(p: &[f64], mut x: f64) -> f64 {
    for _ in 0..50 {
        let (v, d) = eval_with_derivative(p, x);
        if v == 0.0 || d == 0.0 {
            break;
        }
        let step = v / d;
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}
