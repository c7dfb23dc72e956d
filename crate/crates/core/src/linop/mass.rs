use super::{CsrMatrix, CyclicBandedLu, LinearOperator};
use crate::error::{Error, Result};

/// Relative residual for iterative mass solves.
pub const MASS_SOLVE_TOL: f64 = 1e-14;

/// A symmetric positive definite mass matrix `M` with a solve.
pub trait MassOperator: LinearOperator {
    /// `y = M^-1 x`
    fn solve(&self, x: &[f64], y: &mut [f64]) -> Result<()>;

    fn is_identity(&self) -> bool {
        false
    }
}

impl<T: MassOperator + ?Sized> MassOperator for std::sync::Arc<T> {
    fn solve(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).solve(x, y)
    }
    fn is_identity(&self) -> bool {
        (**self).is_identity()
    }
}

#[derive(Clone, Debug)]
pub struct IdentityMass {
    n: usize,
}

impl IdentityMass {
    pub fn new(n: usize) -> Self {
        IdentityMass { n }
    }
}

impl LinearOperator for IdentityMass {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
    fn to_csr(&self) -> Option<CsrMatrix> {
        Some(CsrMatrix::identity(self.n))
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

impl MassOperator for IdentityMass {
    fn solve(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }
    fn is_identity(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalMass {
    d: Vec<f64>,
}

impl DiagonalMass {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(
                "diagonal mass entries must be positive".into(),
            ));
        }
        Ok(DiagonalMass { d })
    }
}

impl LinearOperator for DiagonalMass {
    fn dim(&self) -> usize {
        self.d.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.d) {
            *yi = di * xi;
        }
    }
    fn to_csr(&self) -> Option<CsrMatrix> {
        let t: Vec<_> = self.d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Some(CsrMatrix::from_triplets(self.d.len(), &t))
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

impl MassOperator for DiagonalMass {
    fn solve(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.d) {
            *yi = xi / di;
        }
        Ok(())
    }
}

enum MassSolver {
    Banded(CyclicBandedLu),
    /// Jacobi-preconditioned CG to `MASS_SOLVE_TOL`.
    Cg { inv_diag: Vec<f64> },
}

/// A sparse SPD mass matrix. Narrow (cyclic) bands are factored exactly,
/// anything wider is solved by CG.
pub struct SparseMass {
    m: CsrMatrix,
    solver: MassSolver,
}

impl SparseMass {
    pub const MAX_BANDED: usize = 8;

    pub fn new(m: CsrMatrix) -> Result<Self> {
        let solver = if m.cyclic_bandwidth() <= Self::MAX_BANDED {
            MassSolver::Banded(CyclicBandedLu::factor(&m)?)
        } else {
            let inv_diag = m
                .diagonal()
                .into_iter()
                .map(|d| {
                    if d > 0.0 {
                        Ok(1.0 / d)
                    } else {
                        Err(Error::InvalidArgument("mass diagonal must be positive".into()))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            MassSolver::Cg { inv_diag }
        };
        Ok(SparseMass { m, solver })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.m
    }

    fn cg_solve(&self, inv_diag: &[f64], b: &[f64], x: &mut [f64]) -> Result<()> {
        use super::{axpy, dot, norm};
        let n = b.len();
        x.iter_mut().for_each(|v| *v = 0.0);
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(());
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        for _ in 0..10 * n + 100 {
            self.m.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap.abs() < 1e-300 {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, x);
            axpy(-alpha, &ap, &mut r);
            if norm(&r) <= MASS_SOLVE_TOL * bnorm {
                return Ok(());
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::Breakdown(
            "mass-matrix CG did not reach its tolerance".into(),
        ))
    }
}

impl LinearOperator for SparseMass {
    fn dim(&self) -> usize {
        self.m.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.m.apply(x, y)
    }
    fn to_csr(&self) -> Option<CsrMatrix> {
        Some(self.m.clone())
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

impl MassOperator for SparseMass {
    fn solve(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        match &self.solver {
            MassSolver::Banded(lu) => {
                lu.solve(x, y);
                Ok(())
            }
            MassSolver::Cg { inv_diag } => self.cg_solve(inv_diag, x, y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        (0..n)
            .map(|i| ((i as f64 + 1.0) * (seed as f64 + 0.37)).sin())
            .collect()
    }

    #[test]
    fn wide_mass_uses_cg() {
        // periodic pentadiagonal-ish SPD matrix with a wide coupling
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            for off in [1, 15] {
                t.push((i, (i + off) % n, 0.5));
                t.push((i, (i + n - off) % n, 0.5));
            }
        }
        let m = SparseMass::new(CsrMatrix::from_triplets(n, &t)).unwrap();
        assert!(matches!(m.solver, MassSolver::Cg { .. }));
        let v = random_vec(n, 3);
        let mut y = vec![0.0; n];
        m.solve(&v, &mut y).unwrap();
        let back = m.apply_vec(&y);
        let err: f64 = back.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn diagonal_rejects_nonpositive() {
        assert!(DiagonalMass::new(vec![1.0, 0.0]).is_err());
    }
}
