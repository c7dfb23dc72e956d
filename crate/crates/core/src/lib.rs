//! Preconditioned fully implicit Runge-Kutta integration of linear
//! method-of-lines systems `M u' = L u + f(t)`.
//!
//! The stage system of an `s`-stage scheme is never formed. Each step
//! assembles one right-hand side from the stage polynomials and then inverts
//! the characteristic polynomial of `A0^-1` evaluated at `dt M^-1 L`, one real
//! quadratic factor per conjugate eigenvalue pair and one linear factor per
//! real eigenvalue.

pub mod error;
pub mod experiments;
pub mod irk;
pub mod krylov;
pub mod linop;
pub mod poly;
pub mod spatial;
pub mod spectral;
pub mod tableaux;
pub mod verify;

pub use error::{Error, Result};
