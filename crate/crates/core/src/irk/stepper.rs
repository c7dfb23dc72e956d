use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::krylov::{self, KrylovConfig, KrylovMethod, KrylovReport, DEFAULT_MAX_ITERS,
    DEFAULT_REL_TOL, DEFAULT_RESTART};
use crate::linop::{
    build_inner_preconditioner, shifted_operator, InnerKind, InnerPreconditioner,
    LinearOperator, MassOperator, Preconditioner, ShiftedOperator,
};
use crate::spectral::{
    adjugate_row_polynomials, factor_list, spectral_decompose, Factor, SpectralData,
    StagePolynomials,
};
use crate::tableaux::ButcherTableau;

use super::LinearProblem;

/// Shift used in the preconditioner of each quadratic factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GammaMode {
    /// `gamma* = sqrt(eta^2 + beta^2)`
    GammaStar,
    /// `gamma = eta`, the real part alone.
    Eta,
}

impl GammaMode {
    pub fn name(self) -> &'static str {
        match self {
            GammaMode::GammaStar => "gamma_star",
            GammaMode::Eta => "eta",
        }
    }

    pub fn shift(self, factor: &Factor) -> f64 {
        match (self, factor) {
            (GammaMode::GammaStar, Factor::Quadratic(p)) => p.gamma_star,
            (_, f) => f.pair().eta,
        }
    }
}

impl fmt::Display for GammaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GammaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gamma_star" | "gammastar" | "star" | "optimal" => Ok(GammaMode::GammaStar),
            "eta" => Ok(GammaMode::Eta),
            other => Err(Error::InvalidArgument(format!("unknown gamma mode {other:?}"))),
        }
    }
}

/// Outer Krylov and inner preconditioner settings shared by all steppers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub inner: InnerKind,
    /// `None` picks CG, GMRES or FGMRES from the problem and inner kind.
    pub method: Option<KrylovMethod>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iters: usize,
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            inner: InnerKind::Exact,
            method: None,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: 0.0,
            max_iters: DEFAULT_MAX_ITERS,
            restart: DEFAULT_RESTART,
        }
    }
}

impl SolverOptions {
    pub fn krylov_config(&self, symmetric: bool) -> KrylovConfig {
        let method = self.method.unwrap_or(if self.inner.is_variable() {
            KrylovMethod::Fgmres {
                restart: self.restart,
            }
        } else if symmetric && self.inner.preserves_symmetry() {
            KrylovMethod::Cg
        } else {
            KrylovMethod::Gmres {
                restart: self.restart,
            }
        });
        KrylovConfig {
            method,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_iters: self.max_iters,
        }
    }
}

/// `M Q v = (eta M - dt L) M^-1 (eta M - dt L) v + beta^2 M v`, matrix free.
struct ScaledQuadratic {
    linear: ShiftedOperator,
    mass: Arc<dyn MassOperator>,
    beta2: f64,
}

impl LinearOperator for ScaledQuadratic {
    fn dim(&self) -> usize {
        self.linear.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        let mut t = vec![0.0; n];
        let mut u = vec![0.0; n];
        self.linear.apply(x, &mut t);
        if let Err(e) = self.mass.solve(&t, &mut u) {
            log::error!("mass solve failed inside the quadratic operator: {e}");
            y.iter_mut().for_each(|v| *v = f64::NAN);
            return;
        }
        self.linear.apply(&u, y);
        self.mass.apply(x, &mut t);
        for (yi, ti) in y.iter_mut().zip(&t) {
            *yi += self.beta2 * ti;
        }
    }

    fn is_symmetric(&self) -> bool {
        self.linear.is_symmetric() && self.mass.is_symmetric()
    }
}

/// `P M P` for an inner preconditioner `P ~ (gamma M - dt L)^-1`.
struct SandwichPreconditioner {
    inner: Arc<InnerPreconditioner>,
    mass: Arc<dyn MassOperator>,
}

impl Preconditioner for SandwichPreconditioner {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<usize> {
        let n = r.len();
        let mut t = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut count = self.inner.apply(r, &mut t)?;
        self.mass.apply(&t, &mut u);
        count += self.inner.apply(&u, z)?;
        Ok(count)
    }

    fn is_variable(&self) -> bool {
        self.inner.is_variable()
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric() && self.mass.is_symmetric()
    }
}

/// Outcome of one factor solve within a step.
#[derive(Clone, Debug)]
pub struct FactorReport {
    pub index: usize,
    pub factor: Factor,
    pub gamma: f64,
    pub report: KrylovReport,
}

struct FactorSolver {
    factor: Factor,
    gamma: f64,
    op: Box<dyn LinearOperator>,
    precond: Box<dyn Preconditioner>,
    cfg: KrylovConfig,
}

/// Number of length-`N` vectors used to assemble the right-hand side.
pub const RHS_WORK_VECTORS: usize = 5;

/// Fully implicit Runge-Kutta stepper that solves one real factor of the
/// characteristic polynomial at a time.
pub struct IrkStepper {
    tableau: ButcherTableau,
    spectral: SpectralData,
    polys: StagePolynomials,
    problem: Arc<LinearProblem>,
    dt: f64,
    gamma_mode: GammaMode,
    options: SolverOptions,
    solvers: Vec<FactorSolver>,
    preconditioners: HashMap<u64, Arc<InnerPreconditioner>>,
}

impl IrkStepper {
    pub fn new(
        tableau: ButcherTableau,
        problem: Arc<LinearProblem>,
        dt: f64,
        gamma_mode: GammaMode,
        options: SolverOptions,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let spectral = spectral_decompose(&tableau)?;
        let polys = adjugate_row_polynomials(&tableau)?;
        let mass = problem.mass().clone();
        let op = problem.op().clone();
        let symmetric = problem.is_symmetric();
        let mut preconditioners: HashMap<u64, Arc<InnerPreconditioner>> = HashMap::new();
        let mut solvers = Vec::new();
        for factor in factor_list(&spectral) {
            let gamma = gamma_mode.shift(&factor);
            let inner = match preconditioners.get(&gamma.to_bits()) {
                Some(p) => p.clone(),
                None => {
                    let shifted = shifted_operator(gamma, dt, mass.clone(), op.clone())?;
                    let p = Arc::new(build_inner_preconditioner(&options.inner, &shifted)?);
                    preconditioners.insert(gamma.to_bits(), p.clone());
                    p
                }
            };
            let eta = factor.pair().eta;
            let linear = shifted_operator(eta, dt, mass.clone(), op.clone())?;
            let (fop, precond): (Box<dyn LinearOperator>, Box<dyn Preconditioner>) = match factor
            {
                Factor::Quadratic(p) => (
                    Box::new(ScaledQuadratic {
                        linear,
                        mass: mass.clone(),
                        beta2: p.beta * p.beta,
                    }),
                    Box::new(SandwichPreconditioner {
                        inner,
                        mass: mass.clone(),
                    }),
                ),
                Factor::Linear(_) => (Box::new(linear), Box::new(inner)),
            };
            solvers.push(FactorSolver {
                factor,
                gamma,
                op: fop,
                precond,
                cfg: options.krylov_config(symmetric),
            });
        }
        Ok(IrkStepper {
            tableau,
            spectral,
            polys,
            problem,
            dt,
            gamma_mode,
            options,
            solvers,
            preconditioners,
        })
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tableau
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn polynomials(&self) -> &StagePolynomials {
        &self.polys
    }

    pub fn problem(&self) -> &Arc<LinearProblem> {
        &self.problem
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn gamma_mode(&self) -> GammaMode {
        self.gamma_mode
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn factors(&self) -> Vec<(Factor, f64)> {
        self.solvers.iter().map(|s| (s.factor, s.gamma)).collect()
    }

    /// Distinct shifts that needed an inner preconditioner.
    pub fn preconditioner_count(&self) -> usize {
        self.preconditioners.len()
    }

    /// Outer Krylov configuration used for factor `i`.
    pub fn factor_config(&self, i: usize) -> Option<&KrylovConfig> {
        self.solvers.get(i).map(|s| &s.cfg)
    }

    /// `v <- dt M^-1 L v`, using `tmp` as scratch.
    fn apply_lhat(&self, v: &mut [f64], tmp: &mut [f64]) -> Result<()> {
        self.problem.op().apply(v, tmp);
        self.problem.mass().solve(tmp, v)?;
        v.iter_mut().for_each(|x| *x *= self.dt);
        Ok(())
    }

    /// `z = sum_i R_i(Lhat) M^-1 f_i` with `f_i = f(t_n + c_i dt) + L u_n`.
    pub fn assemble_rhs(&self, u_n: &[f64], t_n: f64) -> Result<Vec<f64>> {
        let n = self.problem.dim();
        check_dim(n, u_n.len())?;
        // the RHS_WORK_VECTORS vectors
        let mut l_un = vec![0.0; n];
        let mut f = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut acc = vec![0.0; n];
        let mut z = vec![0.0; n];
        self.problem.op().apply(u_n, &mut l_un);
        for (i, r) in self.polys.r.iter().enumerate() {
            let degree = match r.iter().rposition(|&c| c != 0.0) {
                Some(d) => d,
                None => continue,
            };
            self.problem
                .stage_rhs(t_n + self.dt * self.tableau.c()[i], &l_un, &mut f);
            self.problem.mass().solve(&f, &mut g)?;
            for (a, gi) in acc.iter_mut().zip(&g) {
                *a = r[degree] * gi;
            }
            for k in (0..degree).rev() {
                self.apply_lhat(&mut acc, &mut f)?;
                for (a, gi) in acc.iter_mut().zip(&g) {
                    *a += r[k] * gi;
                }
            }
            for (zi, a) in z.iter_mut().zip(&acc) {
                *zi += a;
            }
        }
        Ok(z)
    }

    /// `y = P_s(Lhat)^-1 z`, one factor at a time.
    pub fn solve_factors(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<FactorReport>)> {
        let n = self.problem.dim();
        check_dim(n, z.len())?;
        let mut y = z.to_vec();
        let mut rhs = vec![0.0; n];
        let mut reports = Vec::with_capacity(self.solvers.len());
        for (index, s) in self.solvers.iter().enumerate() {
            self.problem.mass().apply(&y, &mut rhs);
            // warm start from the scaled input is no better than zero here
            y.iter_mut().for_each(|v| *v = 0.0);
            let report = krylov::solve(s.op.as_ref(), &rhs, s.precond.as_ref(), &s.cfg, &mut y)?;
            if !report.converged {
                return Err(Error::FactorSolveFailure {
                    index,
                    report: Box::new(report),
                });
            }
            reports.push(FactorReport {
                index,
                factor: s.factor,
                gamma: s.gamma,
                report,
            });
        }
        Ok((y, reports))
    }

    /// `u_{n+1} = u_n + dt y`.
    pub fn advance(&self, u_n: &[f64], t_n: f64) -> Result<(Vec<f64>, Vec<FactorReport>)> {
        let z = self.assemble_rhs(u_n, t_n)?;
        let (y, reports) = self.solve_factors(&z)?;
        let u = u_n.iter().zip(&y).map(|(u, y)| u + self.dt * y).collect();
        Ok((u, reports))
    }
}
