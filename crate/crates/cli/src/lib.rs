//! Command-line front end for `irk-core`.
//!
//! Every command starts its output with the resolved configuration as
//! `# key=value` lines; [`parse::parse_config_header`] turns those lines back
//! into arguments that reproduce the same output.

pub mod commands;
pub mod parse;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irk_core::error::Error;
use irk_core::experiments::{ExperimentSpec, ProblemConfig, ProblemId};
use irk_core::irk::{GammaMode, SolverOptions};
use irk_core::krylov::KrylovMethod;
use irk_core::linop::InnerKind;
use irk_core::tableaux::Family;

use parse::{
    parse_count_list, parse_family, parse_fd_order, parse_gamma_mode, parse_grid_list, parse_inner_spec,
    parse_nonnegative, parse_positive, parse_problem,
};

#[derive(Parser, Debug)]
#[command(name = "irk", version, about = "Preconditioned fully implicit Runge-Kutta experiments")]
pub struct Cli {
    /// Write the output to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print a Butcher tableau and its validation residuals.
    Tableau(TableauArgs),
    /// Eigenvalues of A0^-1, optimal shifts and conditioning bounds per factor.
    Spectrum(TableauArgs),
    /// Measure condition numbers of the preconditioned quadratic factors.
    Cond(CondArgs),
    /// Convergence study on a manufactured problem.
    Run(RunArgs),
    /// Same runs with gamma = eta and gamma = gamma*.
    CompareGamma(RunArgs),
    /// Runs over a list of inner iteration counts.
    InnerSweep(SweepArgs),
    /// Factored solver against block-triangular and SDIRK baselines.
    Baseline(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tableau(_) => "tableau",
            Command::Spectrum(_) => "spectrum",
            Command::Cond(_) => "cond",
            Command::Run(_) => "run",
            Command::CompareGamma(_) => "compare-gamma",
            Command::InnerSweep(_) => "inner-sweep",
            Command::Baseline(_) => "baseline",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SchemeArgs {
    /// gauss, radauIIA, lobattoIIIC, sdirk2l, sdirk3l or backward-euler.
    #[arg(long, value_parser = parse_family)]
    pub family: Family,

    /// Stage count; may be omitted for families with a single size.
    #[arg(long)]
    pub stages: Option<usize>,
}

impl SchemeArgs {
    pub fn resolve(&self) -> Result<(Family, usize), Failure> {
        let (lo, hi) = self.family.stage_range();
        let s = match self.stages {
            Some(s) => s,
            None if lo == hi => lo,
            None => return Err(Failure::Usage(format!("--stages is required for {}", self.family))),
        };
        if !self.family.supports(s) {
            return Err(Failure::Usage(format!("{} supports {lo}..={hi} stages, got {s}", self.family)));
        }
        Ok((self.family, s))
    }
}

#[derive(Args, Debug, Clone)]
pub struct TableauArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,

    /// Emit CSV instead of aligned text.
    #[arg(long)]
    pub csv: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CondMode {
    /// Matrix with eigenvalues {0, ±i sqrt(delta gamma*)}, gamma = gamma*.
    Tight,
    /// Largest value over random matrices with W(L) <= 0.
    Random,
    /// Worst-case matrix over a gamma grid around gamma*.
    Scan,
    /// Worst-case lower bounds over a gamma grid around gamma*.
    Optimality,
}

impl CondMode {
    fn name(self) -> &'static str {
        match self {
            CondMode::Tight => "tight",
            CondMode::Random => "random",
            CondMode::Scan => "scan",
            CondMode::Optimality => "optimality",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct CondArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,

    #[arg(long, value_enum, default_value_t = CondMode::Tight)]
    pub mode: CondMode,

    /// Random matrices per factor (random mode).
    #[arg(long, default_value_t = 20)]
    pub trials: usize,

    /// Size of the random matrices (random mode).
    #[arg(long, default_value_t = 32)]
    pub size: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Shifts in the gamma grid (scan and optimality modes).
    #[arg(long, default_value_t = 21)]
    pub points: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KrylovChoice {
    Auto,
    Cg,
    Gmres,
    Fgmres,
}

impl KrylovChoice {
    fn name(self) -> &'static str {
        match self {
            KrylovChoice::Auto => "auto",
            KrylovChoice::Cg => "cg",
            KrylovChoice::Gmres => "gmres",
            KrylovChoice::Fgmres => "fgmres",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,

    /// advdiff1d, advdiff2d, advect1d-upwind or diffusion1d-fem.
    #[arg(long, value_parser = parse_problem, default_value = "advdiff2d")]
    pub problem: ProblemId,

    /// A single grid size (points per direction).
    #[arg(long, conflicts_with = "grids")]
    pub nx: Option<usize>,

    /// Comma-separated grid sizes, strictly increasing.
    #[arg(long, value_parser = |s: &str| parse_grid_list(s).map(GridList))]
    pub grids: Option<GridList>,

    /// Order of the central differences, 2 or 4.
    #[arg(long, default_value_t = 4, value_parser = parse_fd_order)]
    pub order_space: usize,

    /// Advection speed of advect1d-upwind.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,

    /// Diffusion coefficient of diffusion1d-fem.
    #[arg(long, default_value_t = 0.1, value_parser = parse_nonnegative)]
    pub diffusion: f64,

    /// Final time.
    #[arg(long, default_value_t = 2.0, value_parser = parse_positive)]
    pub tf: f64,

    /// Target dt / h.
    #[arg(long, default_value_t = 2.0, value_parser = parse_positive)]
    pub dt_ratio: f64,

    /// gamma_star or eta.
    #[arg(long, value_parser = parse_gamma_mode, default_value = "gamma_star")]
    pub gamma_mode: GammaMode,

    /// Relative tolerance of the outer Krylov solves.
    #[arg(long, default_value_t = 1e-12, value_parser = parse_positive)]
    pub tol: f64,

    #[arg(long, default_value_t = 30)]
    pub restart: usize,

    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,

    #[arg(long, value_enum, default_value_t = KrylovChoice::Auto)]
    pub krylov: KrylovChoice,

    /// exact, banded, sparse-lu, jacobi:k, gs:k or krylov:tol:maxit[:base].
    #[arg(long, value_parser = parse_inner_spec, default_value = "exact")]
    pub inner: InnerKind,
}

/// Value of `--grids`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridList(pub Vec<usize>);

/// Value of `--counts`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountList(pub Vec<usize>);

pub const DEFAULT_GRIDS: [usize; 3] = [16, 32, 64];

impl RunArgs {
    pub fn grids(&self) -> Vec<usize> {
        match (&self.grids, self.nx) {
            (Some(g), _) => g.0.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => DEFAULT_GRIDS.to_vec(),
        }
    }

    pub fn spec(&self) -> Result<ExperimentSpec, Failure> {
        let (family, stages) = self.scheme.resolve()?;
        if self.restart == 0 || self.max_iters == 0 {
            return Err(Failure::Usage("--restart and --max-iters must be positive".into()));
        }
        let method = match self.krylov {
            KrylovChoice::Auto => None,
            KrylovChoice::Cg => Some(KrylovMethod::Cg),
            KrylovChoice::Gmres => Some(KrylovMethod::Gmres { restart: self.restart }),
            KrylovChoice::Fgmres => Some(KrylovMethod::Fgmres { restart: self.restart }),
        };
        Ok(ExperimentSpec {
            problem: ProblemConfig {
                id: self.problem,
                fd_order: self.order_space,
                speed: self.speed,
                diffusion: self.diffusion,
            },
            family,
            stages,
            dt_ratio: self.dt_ratio,
            grids: self.grids(),
            t_final: self.tf,
            solver: SolverOptions {
                inner: self.inner.clone(),
                method,
                rel_tol: self.tol,
                abs_tol: 0.0,
                max_iters: self.max_iters,
                restart: self.restart,
            },
            gamma_mode: self.gamma_mode,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,

    /// Iteration counts substituted into --inner (which must be jacobi, gs or krylov).
    #[arg(long, value_parser = |s: &str| parse_count_list(s).map(CountList), default_value = "1,2,3,5")]
    pub counts: CountList,
}

/// Why a command did not succeed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or values: exit 2.
    Usage(String),
    /// A solve hit its iteration limit: exit 1.
    NotConverged(String),
    /// Any other runtime failure: exit 1.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::NotConverged(_) | Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "invalid arguments: {m}"),
            Failure::NotConverged(m) => write!(f, "not converged: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::UnsupportedScheme(_)
            | Error::UnsupportedOrder(_)
            | Error::DimensionMismatch { .. }
            | Error::StabilityViolation(_) => Failure::Usage(e.to_string()),
            Error::FactorSolveFailure { .. } => Failure::NotConverged(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Output of a command, written even when the command reports a failure.
pub struct Outcome {
    pub text: String,
    pub failure: Option<Failure>,
}

/// The resolved configuration as `(key, value)` pairs, `command` first.
pub fn config_pairs(cmd: &Command) -> Result<Vec<(String, String)>, Failure> {
    let mut out = vec![("command".to_string(), cmd.name().to_string())];
    let mut push = |k: &str, v: String| out.push((k.to_string(), v));
    match cmd {
        Command::Tableau(a) | Command::Spectrum(a) => {
            let (f, s) = a.scheme.resolve()?;
            push("family", f.to_string());
            push("stages", s.to_string());
            push("csv", a.csv.to_string());
        }
        Command::Cond(a) => {
            let (f, s) = a.scheme.resolve()?;
            push("family", f.to_string());
            push("stages", s.to_string());
            push("mode", a.mode.name().to_string());
            push("trials", a.trials.to_string());
            push("size", a.size.to_string());
            push("seed", a.seed.to_string());
            push("points", a.points.to_string());
        }
        Command::Run(a) | Command::CompareGamma(a) | Command::Baseline(a) => run_pairs(a, &mut push)?,
        Command::InnerSweep(a) => {
            run_pairs(&a.run, &mut push)?;
            let counts: Vec<String> = a.counts.0.iter().map(|c| c.to_string()).collect();
            push("counts", counts.join(","));
        }
    }
    Ok(out)
}

fn run_pairs(a: &RunArgs, push: &mut impl FnMut(&str, String)) -> Result<(), Failure> {
    let (f, s) = a.scheme.resolve()?;
    let grids: Vec<String> = a.grids().iter().map(|g| g.to_string()).collect();
    push("family", f.to_string());
    push("stages", s.to_string());
    push("problem", a.problem.to_string());
    push("grids", grids.join(","));
    push("order-space", a.order_space.to_string());
    push("speed", a.speed.to_string());
    push("diffusion", a.diffusion.to_string());
    push("tf", a.tf.to_string());
    push("dt-ratio", a.dt_ratio.to_string());
    push("gamma-mode", a.gamma_mode.to_string());
    push("tol", a.tol.to_string());
    push("restart", a.restart.to_string());
    push("max-iters", a.max_iters.to_string());
    push("krylov", a.krylov.name().to_string());
    push("inner", a.inner.to_string());
    Ok(())
}

/// Runs one parsed command and returns its full output.
pub fn execute(cmd: &Command) -> Result<Outcome, Failure> {
    let mut text = String::new();
    for (k, v) in config_pairs(cmd)? {
        text.push_str(&format!("# {k}={v}\n"));
    }
    log::info!("running {}", cmd.name());
    let failure = match cmd {
        Command::Tableau(a) => commands::tableau(a, &mut text)?,
        Command::Spectrum(a) => commands::spectrum(a, &mut text)?,
        Command::Cond(a) => commands::cond(a, &mut text)?,
        Command::Run(a) => commands::run(a, &mut text)?,
        Command::CompareGamma(a) => commands::compare_gamma(a, &mut text)?,
        Command::InnerSweep(a) => commands::inner_sweep(a, &mut text)?,
        Command::Baseline(a) => commands::baseline(a, &mut text)?,
    };
    Ok(Outcome { text, failure })
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Output goes to `--output` or `stdout`, diagnostics to `stderr`.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(stderr, "irk {}: {f}", cli.command.name());
            return f.exit_code();
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &outcome.text),
        None => stdout.write_all(outcome.text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "irk {}: cannot write output: {e}", cli.command.name());
        return 1;
    }
    match outcome.failure {
        Some(f) => {
            let _ = writeln!(stderr, "irk {}: {f}", cli.command.name());
            f.exit_code()
        }
        None => 0,
    }
}
