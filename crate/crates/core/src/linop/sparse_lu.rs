use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Sparse LU with partial pivoting (fill-reducing ordering included).
pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let triplets: Vec<Triplet<usize, usize, f64>> = a
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::FactorizationFailure(format!("sparse assembly: {e:?}")))?;
        let lu = m
            .sp_lu()
            .map_err(|e| Error::FactorizationFailure(format!("sparse LU: {e:?}")))?;
        Ok(SparseLu { n, lu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let sol = self.lu.solve(&rhs);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = sol[(i, 0)];
        }
    }
}
