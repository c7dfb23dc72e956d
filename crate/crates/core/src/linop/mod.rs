//! Linear operators: the spatial operator `L`, mass operators, shifted
//! operators `gamma M - dt L` and the inner preconditioners that approximate
//! their inverses.

mod banded;
mod csr;
mod fov;
mod mass;
mod precond;
mod sparse_lu;

pub use banded::CyclicBandedLu;
pub use csr::CsrMatrix;
pub use fov::{fov_upper_bound, symmetric_part_max_eig, DENSE_FOV_LIMIT};
pub use mass::{DiagonalMass, IdentityMass, MassOperator, SparseMass, MASS_SOLVE_TOL};
pub use precond::{
    build_inner_preconditioner, IdentityPreconditioner, InnerKind, InnerPreconditioner,
    Preconditioner,
};
pub use sparse_lu::SparseLu;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

/// A square real linear operator.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. `x` and `y` both have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Assembled sparse form, when one is available.
    fn to_csr(&self) -> Option<CsrMatrix> {
        None
    }

    fn is_symmetric(&self) -> bool {
        false
    }

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn to_csr(&self) -> Option<CsrMatrix> {
        (**self).to_csr()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn to_csr(&self) -> Option<CsrMatrix> {
        (**self).to_csr()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

/// Dense operator, used for small random test systems and oracles.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    m: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        Ok(DenseOperator { m })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.m[(i, j)] * x[j];
            }
            *yi = acc;
        }
    }

    fn to_csr(&self) -> Option<CsrMatrix> {
        Some(CsrMatrix::from_dense(&self.m))
    }

    fn is_symmetric(&self) -> bool {
        self.m == self.m.transpose()
    }
}

/// Densifies any operator by applying it to unit vectors.
pub fn to_dense<T: LinearOperator + ?Sized>(op: &T) -> DMatrix<f64> {
    let n = op.dim();
    let mut out = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    out
}

/// `gamma M - dt L`, assembled when both parts are sparse.
pub struct ShiftedOperator {
    gamma: f64,
    dt: f64,
    mass: Arc<dyn MassOperator>,
    op: Arc<dyn LinearOperator>,
    assembled: Option<CsrMatrix>,
}

impl ShiftedOperator {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn assembled(&self) -> Option<&CsrMatrix> {
        self.assembled.as_ref()
    }
}

pub fn shifted_operator(
    gamma: f64,
    dt: f64,
    mass: Arc<dyn MassOperator>,
    op: Arc<dyn LinearOperator>,
) -> Result<ShiftedOperator> {
    check_dim(mass.dim(), op.dim())?;
    if !(gamma > 0.0) || dt < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "shift requires gamma > 0 and dt >= 0, got gamma = {gamma}, dt = {dt}"
        )));
    }
    let assembled = match (mass.to_csr(), op.to_csr()) {
        (Some(m), Some(l)) => Some(m.linear_combination(gamma, &l, -dt)),
        _ => None,
    };
    Ok(ShiftedOperator {
        gamma,
        dt,
        mass,
        op,
        assembled,
    })
}

impl LinearOperator for ShiftedOperator {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        if let Some(a) = &self.assembled {
            a.apply(x, y);
            return;
        }
        let mut lx = vec![0.0; x.len()];
        self.op.apply(x, &mut lx);
        self.mass.apply(x, y);
        for (yi, li) in y.iter_mut().zip(&lx) {
            *yi = self.gamma * *yi - self.dt * li;
        }
    }

    fn to_csr(&self) -> Option<CsrMatrix> {
        self.assembled.clone()
    }

    fn is_symmetric(&self) -> bool {
        self.mass.is_symmetric() && self.op.is_symmetric()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second_difference(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, -2.0));
            t.push((i, (i + 1) % n, 1.0));
            t.push((i, (i + n - 1) % n, 1.0));
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn zero_dt_shift_is_mass() {
        let n = 8;
        let l = Arc::new(second_difference(n));
        let s = shifted_operator(1.0, 0.0, Arc::new(IdentityMass::new(n)), l).unwrap();
        let d = to_dense(&s);
        assert_eq!(d, DMatrix::identity(n, n));
    }

    #[test]
    fn shifted_entries() {
        let n = 6;
        let l = Arc::new(second_difference(n));
        let s = shifted_operator(2.0, 0.1, Arc::new(IdentityMass::new(n)), l).unwrap();
        let d = to_dense(&s);
        for i in 0..n {
            for j in 0..n {
                let lij = if i == j {
                    -2.0
                } else if (i + 1) % n == j || (j + 1) % n == i {
                    1.0
                } else {
                    0.0
                };
                let expect = if i == j { 2.0 } else { 0.0 } - 0.1 * lij;
                assert!((d[(i, j)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn matrix_free_shift_matches_assembled() {
        let n = 10;
        let l = second_difference(n);
        let dense = Arc::new(DenseOperator::new(l.to_dense()).unwrap());
        let mass: Arc<dyn MassOperator> = Arc::new(DiagonalMass::new(vec![2.0; n]).unwrap());
        let a = shifted_operator(1.5, 0.3, mass.clone(), Arc::new(l)).unwrap();
        struct NoCsr(Arc<DenseOperator>);
        impl LinearOperator for NoCsr {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn apply(&self, x: &[f64], y: &mut [f64]) {
                self.0.apply(x, y)
            }
        }
        let b = shifted_operator(1.5, 0.3, mass, Arc::new(NoCsr(dense))).unwrap();
        assert!(b.assembled().is_none());
        assert!((to_dense(&a) - to_dense(&b)).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let l = Arc::new(second_difference(5));
        let r = shifted_operator(1.0, 1.0, Arc::new(IdentityMass::new(4)), l);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
