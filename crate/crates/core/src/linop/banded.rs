use nalgebra::{DMatrix, DVector, LU};

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the row's largest entry are rejected.
pub const PIVOT_TOL: f64 = 1e-14;

/// LU factorization of a banded matrix without pivoting, extended to periodic
/// (cyclic banded) matrices by a Woodbury correction for the corner entries.
///
/// `A = B + U V^T` where `B` keeps the entries with `|j - i| <= k` and the
/// rows of `V^T` hold the wrapped entries.
pub struct CyclicBandedLu {
    n: usize,
    k: usize,
    /// Row-major band storage, `band[i * (2k + 1) + (j - i + k)]`.
    band: Vec<f64>,
    corner_rows: Vec<usize>,
    corner_vals: Vec<Vec<(usize, f64)>>,
    /// `B^-1 U`, one column per corner row.
    w: Vec<Vec<f64>>,
    capacitance: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl CyclicBandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let k = a.cyclic_bandwidth();
        let width = 2 * k + 1;
        let mut band = vec![0.0; n * width];
        let mut corners: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let row_norms: Vec<f64> = (0..n).map(|i| a.row_norm_inf(i)).collect();
        for (i, j, v) in a.triplets() {
            if i.abs_diff(j) <= k {
                band[i * width + (j + k - i)] += v;
            } else {
                corners[i].push((j, v));
            }
        }

        for p in 0..n {
            let piv = band[p * width + k];
            if !(piv.abs() > PIVOT_TOL * row_norms[p]) {
                return Err(Error::FactorizationFailure(format!(
                    "pivot {piv:e} at row {p} (row norm {:e})",
                    row_norms[p]
                )));
            }
            for i in (p + 1)..(p + k + 1).min(n) {
                let lidx = i * width + (p + k - i);
                let l = band[lidx] / piv;
                band[lidx] = l;
                if l == 0.0 {
                    continue;
                }
                for j in (p + 1)..(p + k + 1).min(n) {
                    band[i * width + (j + k - i)] -= l * band[p * width + (j + k - p)];
                }
            }
        }

        let mut lu = CyclicBandedLu {
            n,
            k,
            band,
            corner_rows: Vec::new(),
            corner_vals: Vec::new(),
            w: Vec::new(),
            capacitance: None,
        };
        for (r, vals) in corners.into_iter().enumerate() {
            if !vals.is_empty() {
                lu.corner_rows.push(r);
                lu.corner_vals.push(vals);
            }
        }
        let m = lu.corner_rows.len();
        if m > 0 {
            let mut e = vec![0.0; n];
            for &r in &lu.corner_rows {
                e[r] = 1.0;
                let mut col = vec![0.0; n];
                lu.band_solve(&e, &mut col);
                lu.w.push(col);
                e[r] = 0.0;
            }
            let mut s = DMatrix::<f64>::identity(m, m);
            for a_idx in 0..m {
                for b_idx in 0..m {
                    s[(a_idx, b_idx)] += lu.corner_vals[a_idx]
                        .iter()
                        .map(|&(j, v)| v * lu.w[b_idx][j])
                        .sum::<f64>();
                }
            }
            let f = s.lu();
            if !f.is_invertible() {
                return Err(Error::FactorizationFailure(
                    "singular periodic correction".into(),
                ));
            }
            lu.capacitance = Some(f);
        }
        Ok(lu)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.k
    }

    pub fn corner_rank(&self) -> usize {
        self.corner_rows.len()
    }

    fn band_solve(&self, b: &[f64], x: &mut [f64]) {
        let (n, k) = (self.n, self.k);
        let width = 2 * k + 1;
        x.copy_from_slice(b);
        for i in 0..n {
            let mut acc = x[i];
            for p in i.saturating_sub(k)..i {
                acc -= self.band[i * width + (p + k - i)] * x[p];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..(i + k + 1).min(n) {
                acc -= self.band[i * width + (j + k - i)] * x[j];
            }
            x[i] = acc / self.band[i * width + k];
        }
    }

    /// `x = A^-1 b`
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        self.band_solve(b, x);
        if let Some(cap) = &self.capacitance {
            let vy = DVector::from_iterator(
                self.corner_rows.len(),
                self.corner_vals
                    .iter()
                    .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>()),
            );
            let t = cap.solve(&vy).expect("capacitance checked at factorization");
            for (wc, tc) in self.w.iter().zip(t.iter()) {
                for (xi, wi) in x.iter_mut().zip(wc) {
                    *xi -= tc * wi;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::LinearOperator;

    fn periodic(n: usize, stencil: &[(i64, f64)]) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for &(o, v) in stencil {
                t.push((i, (i as i64 + o).rem_euclid(n as i64) as usize, v));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn cyclic_tridiagonal_matches_dense() {
        let a = periodic(32, &[(-1, -1.0), (0, 3.0), (1, -0.5)]);
        let lu = CyclicBandedLu::factor(&a).unwrap();
        assert_eq!(lu.bandwidth(), 1);
        assert_eq!(lu.corner_rank(), 2);
        let b: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut x = vec![0.0; 32];
        lu.solve(&b, &mut x);
        let dense = a.to_dense().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for (xi, di) in x.iter().zip(dense.iter()) {
            assert!((xi - di).abs() < 1e-12 * di.abs().max(1.0));
        }
    }

    #[test]
    fn pentadiagonal_residual() {
        let a = periodic(64, &[(-2, 0.1), (-1, -1.0), (0, 4.0), (1, -1.2), (2, 0.2)]);
        let lu = CyclicBandedLu::factor(&a).unwrap();
        let b: Vec<f64> = (0..64).map(|i| 1.0 + (i as f64).sin()).collect();
        let mut x = vec![0.0; 64];
        lu.solve(&b, &mut x);
        let r = a.apply_vec(&x);
        let err: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(matches!(
            CyclicBandedLu::factor(&a),
            Err(Error::FactorizationFailure(_))
        ));
    }
}
