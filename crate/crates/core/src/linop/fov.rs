use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use super::{dot, norm, to_dense, CsrMatrix, LinearOperator};
use crate::error::{Error, Result};

/// Above this dimension the symmetric part is handled by Lanczos instead of a
/// dense eigensolve.
pub const DENSE_FOV_LIMIT: usize = 1024;

const LANCZOS_STEPS: usize = 400;

/// Largest eigenvalue of `(A + A^T) / 2` by a dense symmetric eigensolve.
pub fn symmetric_part_max_eig(a: &DMatrix<f64>) -> Result<f64> {
    let s = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(s, 1e-15, 100_000)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `max Re W(L)`, the largest eigenvalue of the symmetric part of `L`.
///
/// A nonpositive value certifies that the field of values lies in the closed
/// left half plane. Large operators need a sparse form. For them the value is
/// a certified upper bound: the smallest of a few candidates above the
/// Lanczos estimate `theta` (fractions of its residual, and `max(theta, 0)`)
/// confirmed by a sparse Cholesky factorization of `tau I - S`, falling back
/// to the Gershgorin bound.
pub fn fov_upper_bound(op: &dyn LinearOperator) -> Result<f64> {
    let n = op.dim();
    if n <= DENSE_FOV_LIMIT {
        let a = match op.to_csr() {
            Some(c) => c.to_dense(),
            None => to_dense(op),
        };
        return symmetric_part_max_eig(&a);
    }
    let a = op.to_csr().ok_or_else(|| {
        Error::EigenFailure(format!(
            "operator of size {n} exposes no sparse form for the field-of-values check"
        ))
    })?;
    let s = a.linear_combination(0.5, &a.transpose(), 0.5);
    let (theta, residual) = lanczos_max(n, |x, y| s.apply(x, y))?;
    let scale = s.norm_inf().max(f64::MIN_POSITIVE);
    let eps = 1e-12 * scale;
    let mut ladder: Vec<f64> = [0.0, 1e-3, 1e-2, 1e-1, 1.0]
        .iter()
        .map(|k| theta + k * residual + eps)
        .collect();
    ladder.push(theta.max(0.0) + eps);
    ladder.sort_by(f64::total_cmp);
    // smallest candidate the factorization accepts
    for tau in ladder {
        if is_positive_definite(&CsrMatrix::identity(n).linear_combination(tau, &s, -1.0)) {
            return Ok(tau);
        }
    }
    Ok(scale)
}

fn is_positive_definite(a: &CsrMatrix) -> bool {
    let n = a.n();
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .into_iter()
        .filter(|&(i, j, _)| i >= j)
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    match SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets) {
        Ok(m) => m.sp_cholesky(Side::Lower).is_ok(),
        Err(_) => false,
    }
}

/// Largest Ritz value and its residual norm.
fn lanczos_max(n: usize, apply: impl Fn(&[f64], &mut [f64])) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let steps = LANCZOS_STEPS.min(n);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    for j in 0..steps {
        apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);
        if j + 1 == steps || b < 1e-14 {
            beta.push(b);
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::try_new(t, 1e-15, 100_000)
        .ok_or_else(|| Error::EigenFailure("Lanczos tridiagonal eigensolve failed".into()))?;
    let (idx, theta) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
    let residual = (beta[m - 1] * eig.eigenvectors[(m - 1, idx)]).abs();
    Ok((theta, residual))
}
