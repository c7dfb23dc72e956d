use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linop::to_dense;
use crate::tableaux::ButcherTableau;

use super::LinearProblem;

/// Largest `N * s` the dense oracle accepts.
pub const ORACLE_MAX_DIM: usize = 4096;

/// Reference step: assembles `(I ⊗ M - dt A0 ⊗ L) k = f` densely, solves it
/// by LU and returns `u_n + dt sum_i b_i k_i`.
pub fn advance_oracle(
    tableau: &ButcherTableau,
    problem: &LinearProblem,
    u_n: &[f64],
    t_n: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let n = problem.dim();
    let s = tableau.stages();
    check_dim(n, u_n.len())?;
    if n * s > ORACLE_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dense oracle limited to N * s <= {ORACLE_MAX_DIM}, got {}",
            n * s
        )));
    }
    let m = to_dense(problem.mass().as_ref());
    let l = to_dense(problem.op().as_ref());
    let a = tableau.a();
    let mut big = DMatrix::<f64>::zeros(n * s, n * s);
    for i in 0..s {
        for j in 0..s {
            let mut block = l.clone() * (-dt * a[(i, j)]);
            if i == j {
                block += &m;
            }
            big.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    let lu_n = &l * DVector::from_column_slice(u_n);
    let mut rhs = DVector::<f64>::zeros(n * s);
    let mut f = vec![0.0; n];
    for i in 0..s {
        problem.forcing(t_n + dt * tableau.c()[i], &mut f);
        for r in 0..n {
            rhs[i * n + r] = f[r] + lu_n[r];
        }
    }
    let k = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("dense stage system".into()))?;
    let mut u = u_n.to_vec();
    for i in 0..s {
        let w = dt * tableau.b()[i];
        for r in 0..n {
            u[r] += w * k[i * n + r];
        }
    }
    Ok(u)
}
