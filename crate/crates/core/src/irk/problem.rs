use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::linop::{fov_upper_bound, IdentityMass, LinearOperator, MassOperator};

/// `f(t)` written into the output slice.
pub type TimeFunction = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Slack allowed in the field-of-values gate, relative to `max(1, ||L||_inf)`.
pub const FOV_GATE_TOL: f64 = 1e-12;

/// `M u' = L u + f(t)`.
#[derive(Clone)]
pub struct LinearProblem {
    mass: Arc<dyn MassOperator>,
    op: Arc<dyn LinearOperator>,
    forcing: Option<TimeFunction>,
    exact: Option<TimeFunction>,
    fov_bound: f64,
}

impl fmt::Debug for LinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearProblem")
            .field("dim", &self.dim())
            .field("identity_mass", &self.mass.is_identity())
            .field("forced", &self.forcing.is_some())
            .field("fov_bound", &self.fov_bound)
            .finish()
    }
}

fn operator_scale(op: &dyn LinearOperator) -> f64 {
    op.to_csr().map_or(1.0, |c| c.norm_inf()).max(1.0)
}

impl LinearProblem {
    /// Checks that `W(L)` lies in the closed left half plane.
    pub fn new(
        mass: Arc<dyn MassOperator>,
        op: Arc<dyn LinearOperator>,
        forcing: Option<TimeFunction>,
    ) -> Result<Self> {
        let bound = fov_upper_bound(op.as_ref())?;
        Self::with_fov_bound(mass, op, forcing, bound)
    }

    /// Like `new`, with an externally certified upper bound on `max Re W(L)`
    /// (for instance a Kronecker-sum bound for 2D operators).
    pub fn with_fov_bound(
        mass: Arc<dyn MassOperator>,
        op: Arc<dyn LinearOperator>,
        forcing: Option<TimeFunction>,
        fov_bound: f64,
    ) -> Result<Self> {
        check_dim(mass.dim(), op.dim())?;
        let tol = FOV_GATE_TOL * operator_scale(op.as_ref());
        if fov_bound > tol {
            return Err(Error::StabilityViolation(format!(
                "field of values reaches Re = {fov_bound:e} > {tol:e}"
            )));
        }
        Ok(LinearProblem {
            mass,
            op,
            forcing,
            exact: None,
            fov_bound,
        })
    }

    /// `u' = L u + f(t)` with `M = I`.
    pub fn identity_mass(op: Arc<dyn LinearOperator>, forcing: Option<TimeFunction>) -> Result<Self> {
        let n = op.dim();
        Self::new(Arc::new(IdentityMass::new(n)), op, forcing)
    }

    pub fn with_exact(mut self, exact: TimeFunction) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn mass(&self) -> &Arc<dyn MassOperator> {
        &self.mass
    }

    pub fn op(&self) -> &Arc<dyn LinearOperator> {
        &self.op
    }

    pub fn fov_bound(&self) -> f64 {
        self.fov_bound
    }

    pub fn is_symmetric(&self) -> bool {
        self.mass.is_symmetric() && self.op.is_symmetric()
    }

    pub fn has_forcing(&self) -> bool {
        self.forcing.is_some()
    }

    pub fn forcing(&self, t: f64, out: &mut [f64]) {
        match &self.forcing {
            Some(f) => f(t, out),
            None => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    /// `f(t) + L u_n`, given `L u_n` precomputed.
    pub fn stage_rhs(&self, t: f64, l_un: &[f64], out: &mut [f64]) {
        self.forcing(t, out);
        for (o, l) in out.iter_mut().zip(l_un) {
            *o += l;
        }
    }

    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| {
            let mut u = vec![0.0; self.dim()];
            e(t, &mut u);
            u
        })
    }
}
