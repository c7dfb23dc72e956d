//! Time stepping for `M u' = L u + f(t)`.
//!
//! [`IrkStepper`] is the preconditioned fully implicit method.
//! [`advance_oracle`] solves the stage system densely and is the reference
//! for everything else; [`SdirkStepper`] and [`BlockStepper`] are the
//! comparison baselines.

mod block;
mod oracle;
mod problem;
mod sdirk;
mod stepper;

pub use block::{BlockStepper, BlockVariant};
pub use oracle::{advance_oracle, ORACLE_MAX_DIM};
pub use problem::{LinearProblem, TimeFunction, FOV_GATE_TOL};
pub use sdirk::SdirkStepper;
pub use stepper::{FactorReport, GammaMode, IrkStepper, SolverOptions, RHS_WORK_VECTORS};
