use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::krylov::{self, KrylovConfig, KrylovReport};
use crate::linop::{
    build_inner_preconditioner, shifted_operator, InnerPreconditioner, LinearOperator,
    ShiftedOperator,
};
use crate::tableaux::ButcherTableau;

use super::{LinearProblem, SolverOptions};

struct Stage {
    op: ShiftedOperator,
    precond: Arc<InnerPreconditioner>,
}

/// Stage-by-stage solver for lower-triangular tableaux: `s` solves with
/// `M - dt a_ii L`.
pub struct SdirkStepper {
    tableau: ButcherTableau,
    problem: Arc<LinearProblem>,
    dt: f64,
    cfg: KrylovConfig,
    stages: Vec<Stage>,
}

impl SdirkStepper {
    pub fn new(
        tableau: ButcherTableau,
        problem: Arc<LinearProblem>,
        dt: f64,
        options: &SolverOptions,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !tableau.is_lower_triangular() {
            return Err(Error::UnsupportedScheme(format!(
                "{} is not diagonally implicit",
                tableau.family()
            )));
        }
        let mut cache: HashMap<u64, Arc<InnerPreconditioner>> = HashMap::new();
        let mut stages = Vec::new();
        for i in 0..tableau.stages() {
            let aii = tableau.a()[(i, i)];
            if !(aii > 0.0) {
                return Err(Error::UnsupportedScheme(format!(
                    "diagonal entry a[{i}][{i}] = {aii} is not positive"
                )));
            }
            let op = shifted_operator(1.0, dt * aii, problem.mass().clone(), problem.op().clone())?;
            let precond = match cache.get(&aii.to_bits()) {
                Some(p) => p.clone(),
                None => {
                    let p = Arc::new(build_inner_preconditioner(&options.inner, &op)?);
                    cache.insert(aii.to_bits(), p.clone());
                    p
                }
            };
            stages.push(Stage { op, precond });
        }
        let cfg = options.krylov_config(problem.is_symmetric());
        Ok(SdirkStepper {
            tableau,
            problem,
            dt,
            cfg,
            stages,
        })
    }

    pub fn advance(&self, u_n: &[f64], t_n: f64) -> Result<(Vec<f64>, Vec<KrylovReport>)> {
        let n = self.problem.dim();
        check_dim(n, u_n.len())?;
        let s = self.tableau.stages();
        let a = self.tableau.a();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(s);
        let mut w = vec![0.0; n];
        let mut lw = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut reports = Vec::with_capacity(s);
        for (i, stage) in self.stages.iter().enumerate() {
            w.copy_from_slice(u_n);
            for (j, kj) in k.iter().enumerate() {
                let c = self.dt * a[(i, j)];
                for (wr, kr) in w.iter_mut().zip(kj) {
                    *wr += c * kr;
                }
            }
            self.problem.op().apply(&w, &mut lw);
            self.problem
                .stage_rhs(t_n + self.dt * self.tableau.c()[i], &lw, &mut rhs);
            let mut ki = vec![0.0; n];
            let report = krylov::solve(&stage.op, &rhs, stage.precond.as_ref(), &self.cfg, &mut ki)?;
            if !report.converged {
                return Err(Error::FactorSolveFailure {
                    index: i,
                    report: Box::new(report),
                });
            }
            reports.push(report);
            k.push(ki);
        }
        let mut u = u_n.to_vec();
        for (i, ki) in k.iter().enumerate() {
            let c = self.dt * self.tableau.b()[i];
            for (ur, kr) in u.iter_mut().zip(ki) {
                *ur += c * kr;
            }
        }
        Ok((u, reports))
    }
}
