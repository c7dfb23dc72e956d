//! Experiment drivers: convergence studies, shift comparisons, inner sweeps
//! and baseline comparisons. All of them produce [`RunRecord`]s, which are
//! written as CSV with one row per (grid, factor).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::irk::{BlockStepper, BlockVariant, GammaMode, IrkStepper, SdirkStepper, SolverOptions};
use crate::krylov::KrylovReport;
use crate::linop::InnerKind;
use crate::spatial::{
    build_fd_mms, build_fem_diffusion_problem, build_upwind_problem, GridSpec, MmsProblem,
};
use crate::spectral::Factor;
use crate::tableaux::{build_tableau, ButcherTableau, Family};

pub const CSV_HEADER: [&str; 15] = [
    "family",
    "stages",
    "gamma_mode",
    "nx",
    "dt",
    "steps",
    "err_linf",
    "err_l2",
    "factor_index",
    "eta",
    "beta",
    "gamma",
    "mean_outer_iters",
    "total_precond_apps",
    "converged",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemId {
    AdvDiff1d,
    AdvDiff2d,
    Advect1dUpwind,
    Diffusion1dFem,
}

impl ProblemId {
    pub const ALL: [ProblemId; 4] = [
        ProblemId::AdvDiff1d,
        ProblemId::AdvDiff2d,
        ProblemId::Advect1dUpwind,
        ProblemId::Diffusion1dFem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::AdvDiff1d => "advdiff1d",
            ProblemId::AdvDiff2d => "advdiff2d",
            ProblemId::Advect1dUpwind => "advect1d-upwind",
            ProblemId::Diffusion1dFem => "diffusion1d-fem",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        ProblemId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub id: ProblemId,
    /// Order of the central differences (advection-diffusion problems only).
    pub fd_order: usize,
    /// Advection speed of the upwind problem.
    pub speed: f64,
    /// Diffusion coefficient of the FEM problem.
    pub diffusion: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            id: ProblemId::AdvDiff2d,
            fd_order: 4,
            speed: 1.0,
            diffusion: 0.1,
        }
    }
}

impl ProblemConfig {
    pub fn build(&self, nx: usize) -> Result<MmsProblem> {
        match self.id {
            ProblemId::AdvDiff1d => build_fd_mms(&GridSpec::new(1, nx)?, self.fd_order),
            ProblemId::AdvDiff2d => build_fd_mms(&GridSpec::new(2, nx)?, self.fd_order),
            ProblemId::Advect1dUpwind => build_upwind_problem(&GridSpec::new(1, nx)?, self.speed),
            ProblemId::Diffusion1dFem => {
                build_fem_diffusion_problem(&GridSpec::new(1, nx)?, self.diffusion)
            }
        }
    }
}

/// How the stage equations are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Irk(GammaMode),
    Sdirk,
    Block(BlockVariant),
}

impl Method {
    /// Value of the `gamma_mode` CSV column.
    pub fn tag(self) -> &'static str {
        match self {
            Method::Irk(mode) => mode.name(),
            Method::Sdirk => "sdirk",
            Method::Block(v) => v.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemConfig,
    pub family: Family,
    pub stages: usize,
    /// Target `dt / h`; the actual step divides the final time evenly.
    pub dt_ratio: f64,
    pub grids: Vec<usize>,
    pub t_final: f64,
    pub solver: SolverOptions,
    pub gamma_mode: GammaMode,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty() || self.grids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("grid list must be nonempty and strictly increasing".into()));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {}", self.t_final)));
        }
        if !(self.dt_ratio > 0.0) || !self.dt_ratio.is_finite() {
            return Err(Error::InvalidArgument(format!("dt ratio must be positive, got {}", self.dt_ratio)));
        }
        if !self.family.supports(self.stages) {
            return Err(Error::UnsupportedScheme(format!("{} with {} stages", self.family, self.stages)));
        }
        Ok(())
    }

    /// SDIRK for diagonally implicit families, the factored solver otherwise.
    pub fn default_method(&self) -> Method {
        if self.family.is_diagonally_implicit() {
            Method::Sdirk
        } else {
            Method::Irk(self.gamma_mode)
        }
    }

    pub fn tableau(&self) -> Result<ButcherTableau> {
        build_tableau(self.family, self.stages)
    }

    fn with_inner(&self, inner: InnerKind) -> ExperimentSpec {
        let mut s = self.clone();
        s.solver.inner = inner;
        s
    }
}

/// Number of steps of size close to `dt_target` that end exactly at `t_final`.
pub fn step_count(t_final: f64, dt_target: f64) -> usize {
    ((t_final / dt_target) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Iteration totals of one factor (or stage, or block solve) over a run.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorStats {
    pub index: usize,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub solves: usize,
    pub outer_iterations: usize,
    pub precond_apps: usize,
}

impl FactorStats {
    fn new(index: usize, eta: Option<f64>, beta: Option<f64>, gamma: Option<f64>) -> Self {
        FactorStats {
            index,
            eta,
            beta,
            gamma,
            solves: 0,
            outer_iterations: 0,
            precond_apps: 0,
        }
    }

    fn add(&mut self, r: &KrylovReport) {
        self.solves += 1;
        self.outer_iterations += r.iterations;
        self.precond_apps += r.preconditioner_applications;
    }

    pub fn mean_outer_iters(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.outer_iterations as f64 / self.solves as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub family: Family,
    pub stages: usize,
    pub method: Method,
    pub nx: usize,
    pub dt: f64,
    pub steps: usize,
    /// `NaN` when the run did not finish.
    pub err_linf: f64,
    pub err_l2: f64,
    pub factors: Vec<FactorStats>,
    pub converged: bool,
}

impl RunRecord {
    pub fn total_precond_apps(&self) -> usize {
        self.factors.iter().map(|f| f.precond_apps).sum()
    }
}

enum Stepper {
    Irk(IrkStepper),
    Sdirk(SdirkStepper),
    Block(BlockStepper),
}

/// Integrates one grid of `spec` with `method`; returns the record and the
/// final state (empty if the run stopped early).
pub fn run_single(spec: &ExperimentSpec, method: Method, nx: usize) -> Result<(RunRecord, Vec<f64>)> {
    spec.validate()?;
    let tableau = spec.tableau()?;
    let mms = spec.problem.build(nx)?;
    let steps = step_count(spec.t_final, spec.dt_ratio * mms.grid.h());
    let dt = spec.t_final / steps as f64;
    let problem = mms.problem.clone();

    let (stepper, mut factors) = match method {
        Method::Irk(mode) => {
            let st = IrkStepper::new(tableau.clone(), problem, dt, mode, spec.solver.clone())?;
            let stats = st
                .factors()
                .iter()
                .enumerate()
                .map(|(i, (f, g))| {
                    let p = f.pair();
                    FactorStats::new(i, Some(p.eta), Some(p.beta), Some(*g))
                })
                .collect();
            (Stepper::Irk(st), stats)
        }
        Method::Sdirk => {
            let stats = (0..tableau.stages())
                .map(|i| {
                    let eta = 1.0 / tableau.a()[(i, i)];
                    FactorStats::new(i, Some(eta), Some(0.0), Some(eta))
                })
                .collect();
            let st = SdirkStepper::new(tableau.clone(), problem, dt, &spec.solver)?;
            (Stepper::Sdirk(st), stats)
        }
        Method::Block(v) => {
            let st = BlockStepper::new(tableau.clone(), problem, dt, v, &spec.solver)?;
            (Stepper::Block(st), vec![FactorStats::new(0, None, None, None)])
        }
    };

    let mut u = mms.exact(0.0);
    let mut converged = true;
    for n in 0..steps {
        let t = n as f64 * dt;
        let outcome = match &stepper {
            Stepper::Irk(st) => st.advance(&u, t).map(|(v, reps)| {
                for r in &reps {
                    factors[r.index].add(&r.report);
                }
                v
            }),
            Stepper::Sdirk(st) => st.advance(&u, t).map(|(v, reps)| {
                for (i, r) in reps.iter().enumerate() {
                    factors[i].add(r);
                }
                v
            }),
            Stepper::Block(st) => st.advance(&u, t).map(|(v, r)| {
                factors[0].add(&r);
                v
            }),
        };
        match outcome {
            Ok(v) => u = v,
            Err(Error::FactorSolveFailure { index, report }) => {
                log::warn!(
                    "{} nx={nx}: solve {index} failed at step {n} after {} iterations",
                    method.tag(),
                    report.iterations
                );
                if let Some(f) = factors.get_mut(index) {
                    f.add(&report);
                }
                converged = false;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let (err_linf, err_l2) = if converged {
        let exact = mms.exact(spec.t_final);
        let diff: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
        (
            diff.iter().fold(0.0f64, |m, d| m.max(d.abs())),
            mms.grid.l2_norm(&diff),
        )
    } else {
        u.clear();
        (f64::NAN, f64::NAN)
    };
    let record = RunRecord {
        family: spec.family,
        stages: spec.stages,
        method,
        nx,
        dt,
        steps,
        err_linf,
        err_l2,
        factors,
        converged,
    };
    Ok((record, u))
}

/// Runs every grid in order and stops after the first non-converged run.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let method = spec.default_method();
    let mut out = Vec::new();
    for &nx in &spec.grids {
        let (rec, _) = run_single(spec, method, nx)?;
        let stop = !rec.converged;
        out.push(rec);
        if stop {
            break;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservedOrder {
    pub coarse: usize,
    pub fine: usize,
    pub linf: f64,
    pub l2: f64,
}

/// `log(e_coarse / e_fine) / log(n_fine / n_coarse)` between consecutive
/// converged records.
pub fn observed_orders(records: &[RunRecord]) -> Vec<ObservedOrder> {
    records
        .windows(2)
        .filter(|w| w[0].converged && w[1].converged)
        .map(|w| {
            let r = (w[1].nx as f64 / w[0].nx as f64).ln();
            ObservedOrder {
                coarse: w[0].nx,
                fine: w[1].nx,
                linf: (w[0].err_linf / w[1].err_linf).ln() / r,
                l2: (w[0].err_l2 / w[1].err_l2).ln() / r,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaRow {
    pub nx: usize,
    pub factor_index: usize,
    pub eta: f64,
    pub beta: f64,
    pub iters_eta: f64,
    pub iters_gamma_star: f64,
    /// `iters_eta / iters_gamma_star`
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaComparison {
    pub records: Vec<RunRecord>,
    pub rows: Vec<GammaRow>,
}

/// Identical integrations with `gamma = eta` and `gamma = gamma*` on every grid.
pub fn run_gamma_comparison(spec: &ExperimentSpec) -> Result<GammaComparison> {
    spec.validate()?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for &nx in &spec.grids {
        let (eta_run, _) = run_single(spec, Method::Irk(GammaMode::Eta), nx)?;
        let (gs_run, _) = run_single(spec, Method::Irk(GammaMode::GammaStar), nx)?;
        for (a, b) in eta_run.factors.iter().zip(&gs_run.factors) {
            let (ie, ig) = (a.mean_outer_iters(), b.mean_outer_iters());
            rows.push(GammaRow {
                nx,
                factor_index: a.index,
                eta: a.eta.unwrap_or(f64::NAN),
                beta: a.beta.unwrap_or(f64::NAN),
                iters_eta: ie,
                iters_gamma_star: ig,
                speedup: if ie == ig { 1.0 } else { ie / ig },
            });
        }
        records.push(eta_run);
        records.push(gs_run);
    }
    Ok(GammaComparison { records, rows })
}

/// Replaces the sweep count of a relaxation or inner-Krylov kind.
pub fn inner_with_count(base: &InnerKind, k: usize) -> Result<InnerKind> {
    match base {
        InnerKind::Jacobi(_) => Ok(InnerKind::Jacobi(k)),
        InnerKind::GaussSeidel(_) => Ok(InnerKind::GaussSeidel(k)),
        InnerKind::InnerKrylov { tol, base, .. } => Ok(InnerKind::InnerKrylov {
            tol: *tol,
            max_iters: k,
            base: base.clone(),
        }),
        other => Err(Error::InvalidArgument(format!(
            "inner kind {other} has no iteration count to sweep"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub inner: InnerKind,
    pub record: RunRecord,
}

/// One run per inner kind on every grid; non-convergence is recorded, not
/// fatal.
pub fn run_inner_sweep(spec: &ExperimentSpec, kinds: &[InnerKind]) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut out = Vec::new();
    for inner in kinds {
        let s = spec.with_inner(inner.clone());
        for &nx in &spec.grids {
            let (record, _) = run_single(&s, s.default_method(), nx)?;
            out.push(SweepRow {
                inner: inner.clone(),
                record,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineRow {
    pub method: Method,
    pub family: Family,
    pub stages: usize,
    pub apps_per_step: f64,
    pub apps_per_step_per_stage: f64,
    /// `max |u - u_irk| / max |u_irk|` when both runs used the same tableau.
    pub deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineComparison {
    pub records: Vec<RunRecord>,
    pub rows: Vec<BaselineRow>,
}

/// The factored solver, GSL, LD and SDIRK on the finest grid of `spec`.
///
/// SDIRK uses the experiment's tableau when it is lower triangular and the 3-stage
/// L-stable scheme otherwise.
pub fn run_baseline_comparison(spec: &ExperimentSpec) -> Result<BaselineComparison> {
    spec.validate()?;
    let nx = *spec.grids.last().unwrap();
    let tableau = spec.tableau()?;
    let sdirk_spec = if tableau.is_lower_triangular() {
        spec.clone()
    } else {
        ExperimentSpec {
            family: Family::Sdirk3L,
            stages: 3,
            ..spec.clone()
        }
    };
    let runs = [
        (spec, Method::Irk(spec.gamma_mode)),
        (spec, Method::Block(BlockVariant::Gsl)),
        (spec, Method::Block(BlockVariant::Ld)),
        (&sdirk_spec, Method::Sdirk),
    ];
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut reference: Option<Vec<f64>> = None;
    for (s, method) in runs {
        let (rec, u) = run_single(s, method, nx)?;
        let deviation = match (&reference, s.family == spec.family && rec.converged) {
            (Some(r), true) if !r.is_empty() => {
                let scale = r.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                Some(u.iter().zip(r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale)
            }
            _ => None,
        };
        if reference.is_none() {
            reference = Some(u);
        }
        let per_step = rec.total_precond_apps() as f64 / rec.steps as f64;
        rows.push(BaselineRow {
            method,
            family: s.family,
            stages: s.stages,
            apps_per_step: per_step,
            apps_per_step_per_stage: per_step / s.stages as f64,
            deviation,
        });
        records.push(rec);
    }
    Ok(BaselineComparison { records, rows })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the header and one row per (record, factor).
pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    write_rows(&mut w, records)?;
    w.flush()?;
    Ok(())
}

/// Rows only, for callers that interleave comment lines.
pub fn write_rows<W: Write>(w: &mut csv::Writer<W>, records: &[RunRecord]) -> Result<()> {
    for r in records {
        for f in &r.factors {
            w.write_record([
                r.family.name().to_string(),
                r.stages.to_string(),
                r.method.tag().to_string(),
                r.nx.to_string(),
                r.dt.to_string(),
                r.steps.to_string(),
                r.err_linf.to_string(),
                r.err_l2.to_string(),
                f.index.to_string(),
                opt(f.eta),
                opt(f.beta),
                opt(f.gamma),
                f.mean_outer_iters().to_string(),
                f.precond_apps.to_string(),
                r.converged.to_string(),
            ])?;
        }
    }
    Ok(())
}

/// Factor list of a tableau with the shifts chosen by `mode`.
pub fn factor_shifts(tableau: &ButcherTableau, mode: GammaMode) -> Result<Vec<(Factor, f64)>> {
    let spec = crate::spectral::spectral_decompose(tableau)?;
    Ok(crate::spectral::factor_list(&spec)
        .into_iter()
        .map(|f| {
            let g = mode.shift(&f);
            (f, g)
        })
        .collect())
}
