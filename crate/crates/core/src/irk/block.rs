use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::krylov::{self, KrylovConfig, KrylovReport};
use crate::linop::{
    build_inner_preconditioner, shifted_operator, InnerPreconditioner, LinearOperator,
    Preconditioner,
};
use crate::tableaux::ButcherTableau;

use super::{LinearProblem, SolverOptions};

/// Lower-triangular approximation of `A0` used by the block preconditioner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockVariant {
    /// Lower triangle of `A0`, diagonal included.
    Gsl,
    /// `L D` from `A0 = L D U` with unit triangular `L` and `U`.
    Ld,
}

impl BlockVariant {
    pub fn name(self) -> &'static str {
        match self {
            BlockVariant::Gsl => "gsl",
            BlockVariant::Ld => "ld",
        }
    }

    pub fn approximation(self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let s = a.nrows();
        match self {
            BlockVariant::Gsl => Ok(a.lower_triangle()),
            BlockVariant::Ld => {
                // Doolittle elimination without pivoting
                let mut u = a.clone();
                let mut l = DMatrix::<f64>::identity(s, s);
                for p in 0..s {
                    if u[(p, p)].abs() < 1e-14 {
                        return Err(Error::FactorizationFailure(format!(
                            "zero pivot in the LDU factorization of A0 at {p}"
                        )));
                    }
                    for i in (p + 1)..s {
                        let m = u[(i, p)] / u[(p, p)];
                        l[(i, p)] = m;
                        for j in p..s {
                            u[(i, j)] -= m * u[(p, j)];
                        }
                    }
                }
                let d = DMatrix::from_diagonal(&u.diagonal());
                Ok(l * d)
            }
        }
    }
}

impl fmt::Display for BlockVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gsl" => Ok(BlockVariant::Gsl),
            "ld" => Ok(BlockVariant::Ld),
            other => Err(Error::InvalidArgument(format!("unknown block variant {other:?}"))),
        }
    }
}

/// `k -> (I ⊗ M - dt A0 ⊗ L) k` on stacked stage vectors.
struct StageOperator {
    a: DMatrix<f64>,
    problem: Arc<LinearProblem>,
    dt: f64,
}

impl LinearOperator for StageOperator {
    fn dim(&self) -> usize {
        self.problem.dim() * self.a.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.problem.dim();
        let s = self.a.nrows();
        let mut lk = vec![0.0; n * s];
        for j in 0..s {
            self.problem
                .op()
                .apply(&x[j * n..(j + 1) * n], &mut lk[j * n..(j + 1) * n]);
        }
        for i in 0..s {
            let yi = &mut y[i * n..(i + 1) * n];
            self.problem.mass().apply(&x[i * n..(i + 1) * n], yi);
            for j in 0..s {
                let c = self.dt * self.a[(i, j)];
                if c != 0.0 {
                    for (yr, lr) in yi.iter_mut().zip(&lk[j * n..(j + 1) * n]) {
                        *yr -= c * lr;
                    }
                }
            }
        }
    }
}

/// Forward substitution with `I ⊗ M - dt A_p ⊗ L`, diagonal blocks through the
/// inner preconditioner.
struct BlockTriangular {
    a_p: DMatrix<f64>,
    problem: Arc<LinearProblem>,
    dt: f64,
    diag: Vec<Arc<InnerPreconditioner>>,
}

impl Preconditioner for BlockTriangular {
    fn dim(&self) -> usize {
        self.problem.dim() * self.a_p.nrows()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<usize> {
        let n = self.problem.dim();
        let s = self.a_p.nrows();
        let mut lz = vec![0.0; n * s];
        let mut rhs = vec![0.0; n];
        let mut count = 0;
        for i in 0..s {
            rhs.copy_from_slice(&r[i * n..(i + 1) * n]);
            for j in 0..i {
                let c = self.dt * self.a_p[(i, j)];
                if c != 0.0 {
                    for (rr, lr) in rhs.iter_mut().zip(&lz[j * n..(j + 1) * n]) {
                        *rr += c * lr;
                    }
                }
            }
            count += self.diag[i].apply(&rhs, &mut z[i * n..(i + 1) * n])?;
            if i + 1 < s {
                self.problem
                    .op()
                    .apply(&z[i * n..(i + 1) * n], &mut lz[i * n..(i + 1) * n]);
            }
        }
        Ok(count)
    }

    fn is_variable(&self) -> bool {
        self.diag.iter().any(|p| p.is_variable())
    }
}

/// Krylov on the full stage system with a block lower-triangular
/// preconditioner.
pub struct BlockStepper {
    tableau: ButcherTableau,
    problem: Arc<LinearProblem>,
    dt: f64,
    variant: BlockVariant,
    op: StageOperator,
    precond: BlockTriangular,
    cfg: KrylovConfig,
}

impl BlockStepper {
    pub fn new(
        tableau: ButcherTableau,
        problem: Arc<LinearProblem>,
        dt: f64,
        variant: BlockVariant,
        options: &SolverOptions,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let a_p = variant.approximation(tableau.a())?;
        let mut cache: HashMap<u64, Arc<InnerPreconditioner>> = HashMap::new();
        let mut diag = Vec::new();
        for i in 0..tableau.stages() {
            let d = a_p[(i, i)];
            if !(d > 0.0) {
                return Err(Error::UnsupportedScheme(format!(
                    "{variant} diagonal entry {d} at stage {i} is not positive"
                )));
            }
            let p = match cache.get(&d.to_bits()) {
                Some(p) => p.clone(),
                None => {
                    let shifted =
                        shifted_operator(1.0, dt * d, problem.mass().clone(), problem.op().clone())?;
                    let p = Arc::new(build_inner_preconditioner(&options.inner, &shifted)?);
                    cache.insert(d.to_bits(), p.clone());
                    p
                }
            };
            diag.push(p);
        }
        let cfg = options.krylov_config(false);
        Ok(BlockStepper {
            op: StageOperator {
                a: tableau.a().clone(),
                problem: problem.clone(),
                dt,
            },
            precond: BlockTriangular {
                a_p,
                problem: problem.clone(),
                dt,
                diag,
            },
            tableau,
            problem,
            dt,
            variant,
            cfg,
        })
    }

    pub fn variant(&self) -> BlockVariant {
        self.variant
    }

    pub fn advance(&self, u_n: &[f64], t_n: f64) -> Result<(Vec<f64>, KrylovReport)> {
        let n = self.problem.dim();
        check_dim(n, u_n.len())?;
        let s = self.tableau.stages();
        let mut l_un = vec![0.0; n];
        self.problem.op().apply(u_n, &mut l_un);
        let mut rhs = vec![0.0; n * s];
        for i in 0..s {
            self.problem.stage_rhs(
                t_n + self.dt * self.tableau.c()[i],
                &l_un,
                &mut rhs[i * n..(i + 1) * n],
            );
        }
        let mut k = vec![0.0; n * s];
        let report = krylov::solve(&self.op, &rhs, &self.precond, &self.cfg, &mut k)?;
        if !report.converged {
            return Err(Error::FactorSolveFailure {
                index: 0,
                report: Box::new(report),
            });
        }
        let mut u = u_n.to_vec();
        for i in 0..s {
            let c = self.dt * self.tableau.b()[i];
            for (ur, kr) in u.iter_mut().zip(&k[i * n..(i + 1) * n]) {
                *ur += c * kr;
            }
        }
        Ok((u, report))
    }
}
