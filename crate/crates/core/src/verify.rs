//! Direct checks of the conditioning theory for the preconditioned quadratic
//! factors.
//!
//! For a factor `(eta I - L)^2 + beta^2 I` and shifts `delta, gamma > 0` the
//! preconditioned operator is
//!
//! ```text
//! P = (delta I - L)^-1 (gamma I - L)^-1 [(eta I - L)^2 + beta^2 I].
//! ```
//!
//! With `gamma = gamma*(delta) = (eta^2 + beta^2) / delta` and `W(L) <= 0`,
//! `kappa(P) <= (delta + gamma*(delta)) / (2 eta)`, which is
//! `sqrt(1 + beta^2 / eta^2)` at `delta = gamma = sqrt(eta^2 + beta^2)`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest matrix handled by the dense routines here.
pub const MAX_DENSE_DIM: usize = 512;

/// Frequency used to stand in for `xi -> infinity` in worst-case matrices.
pub const LARGE_FREQUENCY: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondResult {
    pub kappa_measured: f64,
    pub kappa_bound: f64,
    pub delta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub beta: f64,
}

/// `gamma*(delta) = (eta^2 + beta^2) / delta`
pub fn optimal_partner(delta: f64, eta: f64, beta: f64) -> f64 {
    (eta * eta + beta * beta) / delta
}

/// `(delta + gamma*(delta)) / (2 eta)`
pub fn kappa_bound(delta: f64, eta: f64, beta: f64) -> f64 {
    (delta + optimal_partner(delta, eta, beta)) / (2.0 * eta)
}

/// Forms `P` densely and returns `sigma_max / sigma_min`.
///
/// `kappa_bound` is always the bound for the pair `(delta, gamma*(delta))`;
/// for other `gamma` it is the reference the measured value is compared to.
pub fn compute_kappa(l: &DMatrix<f64>, eta: f64, beta: f64, delta: f64, gamma: f64) -> Result<CondResult> {
    let n = l.nrows();
    if n != l.ncols() || n > MAX_DENSE_DIM {
        return Err(Error::InvalidArgument(format!(
            "compute_kappa needs a square matrix of size <= {MAX_DENSE_DIM}"
        )));
    }
    let id = DMatrix::<f64>::identity(n, n);
    let shifted_eta = &id * eta - l;
    let q = &shifted_eta * &shifted_eta + &id * (beta * beta);
    let x = (&id * gamma - l)
        .lu()
        .solve(&q)
        .ok_or_else(|| Error::SingularShift(format!("gamma I - L singular at gamma = {gamma}")))?;
    let p = (&id * delta - l)
        .lu()
        .solve(&x)
        .ok_or_else(|| Error::SingularShift(format!("delta I - L singular at delta = {delta}")))?;
    let sv = p.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > 0.0) {
        return Err(Error::SingularShift("preconditioned operator is singular".into()));
    }
    Ok(CondResult {
        kappa_measured: smax / smin,
        kappa_bound: kappa_bound(delta, eta, beta),
        delta,
        gamma,
        eta,
        beta,
    })
}

/// `H(xi) = |f(i xi)|^2` where `f` is the scalar symbol of `P`.
pub fn h_value(delta: f64, gamma: f64, eta: f64, beta: f64, xi: f64) -> f64 {
    let gs = optimal_partner(delta, eta, beta);
    let x2 = xi * xi;
    let num = (delta * gs - x2).powi(2) + (2.0 * eta * xi).powi(2);
    let den = (delta * gamma - x2).powi(2) + (xi * (delta + gamma)).powi(2);
    num / den
}

pub fn h_scan(delta: f64, gamma: f64, eta: f64, beta: f64, xi_grid: &[f64]) -> Vec<f64> {
    xi_grid.iter().map(|&xi| h_value(delta, gamma, eta, beta, xi)).collect()
}

/// The constants of the bound's proof.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProofConstants {
    /// `gamma == (eta^2 + beta^2) / delta`, which makes `c0 = 1`.
    pub gamma_is_optimal: bool,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn proof_constants(delta: f64, gamma: f64, eta: f64, beta: f64) -> ProofConstants {
    let c2 = 2.0 * eta / (delta + gamma);
    ProofConstants {
        gamma_is_optimal: (gamma - optimal_partner(delta, eta, beta)).abs() <= 1e-12 * gamma,
        c1: (eta * eta + beta * beta) / (delta * gamma) * c2,
        c2,
        c3: c2 * c2,
    }
}

/// Real block-diagonal matrix with eigenvalues `0` and `±i omega` for each
/// listed frequency.
pub fn rotation_blocks(frequencies: &[f64]) -> DMatrix<f64> {
    let n = 1 + 2 * frequencies.len();
    let mut l = DMatrix::zeros(n, n);
    for (k, &w) in frequencies.iter().enumerate() {
        let i = 1 + 2 * k;
        l[(i, i + 1)] = w;
        l[(i + 1, i)] = -w;
    }
    l
}

/// The matrix attaining the bound: eigenvalues `{0, ±i sqrt(delta gamma*(delta))}`.
pub fn tight_matrix(delta: f64, eta: f64, beta: f64) -> DMatrix<f64> {
    rotation_blocks(&[(delta * optimal_partner(delta, eta, beta)).sqrt()])
}

/// Eigenvalues `{0, ±i omega, ±i LARGE_FREQUENCY}`: realizes both lower
/// bounds used for `gamma != gamma*(delta)`.
pub fn worst_case_matrix(delta: f64, eta: f64, beta: f64) -> DMatrix<f64> {
    let omega = (delta * optimal_partner(delta, eta, beta)).sqrt();
    rotation_blocks(&[omega, LARGE_FREQUENCY])
}

/// Lower bound on `kappa^2(P_{delta, gamma})` from two values of `H`:
/// `H(0) / H(omega)` below `gamma*(delta)`, `H(inf) / H(omega)` above it.
pub fn lower_bound_ratio(delta: f64, gamma: f64, eta: f64, beta: f64) -> f64 {
    let gs = optimal_partner(delta, eta, beta);
    let omega = (delta * gs).sqrt();
    let h_omega = h_value(delta, gamma, eta, beta, omega);
    if gamma <= gs {
        h_value(delta, gamma, eta, beta, 0.0) / h_omega
    } else {
        1.0 / h_omega
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalityRow {
    pub gamma: f64,
    /// Lower bound on `kappa^2` at this `gamma`.
    pub ratio: f64,
    /// `1 + beta^2 / eta^2`, the squared bound at `gamma*`.
    pub reference: f64,
    /// `kappa` measured on the worst-case matrix.
    pub kappa_measured: f64,
}

/// Evaluates the worst-case lower bounds with `delta = gamma* = sqrt(eta^2 + beta^2)`.
pub fn optimality_probe(eta: f64, beta: f64, gamma_grid: &[f64]) -> Result<Vec<OptimalityRow>> {
    let delta = eta.hypot(beta);
    let l = worst_case_matrix(delta, eta, beta);
    gamma_grid
        .iter()
        .map(|&gamma| {
            if !(gamma > 0.0) {
                return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
            }
            Ok(OptimalityRow {
                gamma,
                ratio: lower_bound_ratio(delta, gamma, eta, beta),
                reference: 1.0 + (beta / eta).powi(2),
                kappa_measured: compute_kappa(&l, eta, beta, delta, gamma)?.kappa_measured,
            })
        })
        .collect()
}

/// `points` shifts spread geometrically over `[center / 4, 4 center]`,
/// symmetric in log scale. An even count never hits `center` itself.
pub fn gamma_grid(center: f64, points: usize) -> Vec<f64> {
    let half = (points.max(2) as f64 - 1.0) / 2.0;
    (0..points)
        .map(|k| center * 4f64.powf((k as f64 - half) / half))
        .collect()
}

/// `L = scale (S + K)` with `S = -B B^T` and `K = C - C^T`, so `W(L) <= 0`.
///
/// `skew` in `[0, 1]` weights the skew part against the symmetric part.
pub fn random_stable_matrix<R: Rng + ?Sized>(n: usize, scale: f64, skew: f64, rng: &mut R) -> DMatrix<f64> {
    let norm = 1.0 / (n as f64).sqrt();
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0) * norm);
    let c = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0) * norm);
    let s = -(&b * b.transpose());
    let k = &c - c.transpose();
    (s * (1.0 - skew) + k * skew) * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETA: f64 = 3.0;

    fn beta() -> f64 {
        3f64.sqrt()
    }

    #[test]
    fn zero_operator_is_perfectly_conditioned() {
        let gs = ETA.hypot(beta());
        let r = compute_kappa(&DMatrix::zeros(4, 4), ETA, beta(), gs, gs).unwrap();
        assert!((r.kappa_measured - 1.0).abs() < 1e-14);
    }

    #[test]
    fn h_at_zero_and_omega() {
        let (d, g) = (2.0, 5.0);
        let gs = optimal_partner(d, ETA, beta());
        assert!((h_value(d, g, ETA, beta(), 0.0) - gs * gs / (g * g)).abs() < 1e-14);
        let w = (d * gs).sqrt();
        let expect = (2.0 * ETA).powi(2) * gs / (d * (g - gs).powi(2) + gs * (d + g).powi(2));
        assert!((h_value(d, g, ETA, beta(), w) - expect).abs() < 1e-14);
        assert!((h_value(d, g, ETA, beta(), 1e6) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn constants_at_optimal_partner() {
        let gs = ETA.hypot(beta());
        let c = proof_constants(gs, gs, ETA, beta());
        assert!(c.gamma_is_optimal);
        assert!((c.c1 - c.c2).abs() < 1e-15);
        assert!((c.c2 - c.c3.sqrt()).abs() < 1e-15);
        assert!((c.c2 - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let c = proof_constants(1.0, 1.0, 1.0, 0.0);
        assert_eq!((c.c1, c.c2, c.c3), (1.0, 1.0, 1.0));
    }

    #[test]
    fn grid_avoids_center() {
        let g = gamma_grid(2.0, 20);
        assert_eq!(g.len(), 20);
        assert!(g.iter().all(|&x| (x - 2.0).abs() > 1e-3));
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[19] - 8.0).abs() < 1e-12);
    }
}
