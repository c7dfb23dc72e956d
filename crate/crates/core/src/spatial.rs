//! Periodic finite-difference operators on `[-1, 1]^d` and the
//! manufactured-solution problems built on them.
//!
//! Grid points are `x_i = -1 + i h` with `h = 2 / n`. In 2D the unknown at
//! `(x_i, y_j)` has index `j n + i`, and operators are Kronecker sums of the
//! 1D ones.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::irk::{LinearProblem, TimeFunction};
use crate::linop::{fov_upper_bound, CsrMatrix, IdentityMass, MassOperator, SparseMass};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidArgument(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if n < 4 {
            return Err(Error::InvalidArgument(format!("need at least 4 points per direction, got {n}")));
        }
        Ok(GridSpec { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 / self.n as f64
    }

    /// Total number of unknowns.
    pub fn size(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -1.0 + i as f64 * self.h()
    }

    /// Coordinates of unknown `idx`; the second entry is 0 in 1D.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        match self.dim {
            1 => (self.coordinate(idx), 0.0),
            _ => (self.coordinate(idx % self.n), self.coordinate(idx / self.n)),
        }
    }

    /// Grid-weighted discrete L2 norm, `sqrt(h^d sum v_i^2)`.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        (self.h().powi(self.dim as i32) * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }
}

/// Central first-derivative stencil times `h`, as `(offset, weight)` pairs.
pub fn d1_stencil(order: usize) -> Result<Vec<(i64, f64)>> {
    match order {
        2 => Ok(vec![(-1, -0.5), (1, 0.5)]),
        4 => Ok(vec![(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)]),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Central second-derivative stencil times `h^2`.
pub fn d2_stencil(order: usize) -> Result<Vec<(i64, f64)>> {
    match order {
        2 => Ok(vec![(-1, 1.0), (0, -2.0), (1, 1.0)]),
        4 => Ok(vec![
            (-2, -1.0 / 12.0),
            (-1, 4.0 / 3.0),
            (0, -2.5),
            (1, 4.0 / 3.0),
            (2, -1.0 / 12.0),
        ]),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

/// Circulant matrix of a stencil.
pub fn periodic_stencil(n: usize, stencil: &[(i64, f64)]) -> CsrMatrix {
    let mut t = Vec::with_capacity(n * stencil.len());
    for i in 0..n {
        for &(o, w) in stencil {
            t.push((i, (i as i64 + o).rem_euclid(n as i64) as usize, w));
        }
    }
    CsrMatrix::from_triplets(n, &t)
}

/// Combined 1D stencil of `-a D1 + d D2`.
fn advdiff_stencil(h: f64, a: f64, d: f64, order: usize) -> Result<Vec<(i64, f64)>> {
    let mut s: Vec<(i64, f64)> = d1_stencil(order)?
        .into_iter()
        .map(|(o, w)| (o, -a * w / h))
        .collect();
    s.extend(d2_stencil(order)?.into_iter().map(|(o, w)| (o, d * w / (h * h))));
    Ok(s)
}

fn upwind_stencil(h: f64, a: f64) -> Vec<(i64, f64)> {
    if a >= 0.0 {
        vec![(-1, a / h), (0, -a / h)]
    } else {
        vec![(0, a / h), (1, -a / h)]
    }
}

/// `I ⊗ Lx + Ly ⊗ I`
fn kronecker_sum(lx: &CsrMatrix, ly: &CsrMatrix) -> CsrMatrix {
    let ix = CsrMatrix::identity(lx.n());
    let iy = CsrMatrix::identity(ly.n());
    iy.kron(lx).linear_combination(1.0, &ly.kron(&ix), 1.0)
}

fn check_coefficients(grid: &GridSpec, adv: &[f64], diff: &[f64]) -> Result<()> {
    check_dim(grid.dim(), adv.len())?;
    check_dim(grid.dim(), diff.len())?;
    if diff.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidArgument("diffusion coefficients must be nonnegative".into()));
    }
    Ok(())
}

fn per_direction(
    grid: &GridSpec,
    stencils: impl Fn(usize) -> Result<Vec<(i64, f64)>>,
) -> Result<Vec<CsrMatrix>> {
    (0..grid.dim())
        .map(|k| Ok(periodic_stencil(grid.n(), &stencils(k)?)))
        .collect()
}

fn combine(parts: Vec<CsrMatrix>) -> CsrMatrix {
    match parts.len() {
        1 => parts.into_iter().next().unwrap(),
        _ => kronecker_sum(&parts[0], &parts[1]),
    }
}

/// `L = -a . grad + d . laplacian` with central differences of order 2 or 4.
pub fn build_advdiff(grid: &GridSpec, adv: &[f64], diff: &[f64], fd_order: usize) -> Result<CsrMatrix> {
    check_coefficients(grid, adv, diff)?;
    let h = grid.h();
    Ok(combine(per_direction(grid, |k| advdiff_stencil(h, adv[k], diff[k], fd_order))?))
}

/// First-order upwind discretization of `-a . grad`.
pub fn build_upwind_advection(grid: &GridSpec, adv: &[f64]) -> Result<CsrMatrix> {
    check_dim(grid.dim(), adv.len())?;
    if adv.iter().all(|&a| a == 0.0) {
        return Err(Error::InvalidArgument("advection velocity must be nonzero".into()));
    }
    let h = grid.h();
    Ok(combine(per_direction(grid, |k| Ok(upwind_stencil(h, adv[k])))?))
}

/// Upper bound on `max Re W(L)` for a Kronecker-sum operator, summing the
/// exact 1D values (the symmetric part of a Kronecker sum is the Kronecker
/// sum of the symmetric parts).
pub fn kronecker_fov_bound(grid: &GridSpec, parts: &[CsrMatrix]) -> Result<f64> {
    check_dim(grid.dim(), parts.len())?;
    parts.iter().map(|p| fov_upper_bound(p)).sum()
}

/// Periodic linear finite-element mass matrix, rows `(h / 6) [1, 4, 1]`.
pub fn build_fem_mass_1d(grid: &GridSpec) -> Result<SparseMass> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("the FEM mass matrix is 1D only".into()));
    }
    let h = grid.h();
    SparseMass::new(periodic_stencil(
        grid.n(),
        &[(-1, h / 6.0), (0, 4.0 * h / 6.0), (1, h / 6.0)],
    ))
}

/// Periodic linear finite-element diffusion `d (1 / h) [1, -2, 1]`.
pub fn build_fem_diffusion_1d(grid: &GridSpec, d: f64) -> Result<CsrMatrix> {
    if grid.dim() != 1 || !(d >= 0.0) {
        return Err(Error::InvalidArgument("FEM diffusion needs a 1D grid and d >= 0".into()));
    }
    let h = grid.h();
    Ok(periodic_stencil(grid.n(), &[(-1, d / h), (0, -2.0 * d / h), (1, d / h)]))
}

/// Coefficients of the manufactured 2D problem.
pub const FD_EX_ADV: [f64; 2] = [0.85, 1.0];
pub const FD_EX_DIFF: [f64; 2] = [0.3, 0.25];

fn sin4(theta: f64) -> f64 {
    theta.sin().powi(4)
}

/// Second derivative of `sin^4`.
fn sin4_dd(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    12.0 * s * s * c * c - 4.0 * s.powi(4)
}

/// `sin^4(pi/2 (x - 1 - 0.85 t)) sin^4(pi/2 (y - 1 - t)) exp(-0.55 t)`
pub fn fd_ex_exact_2d(x: f64, y: f64, t: f64) -> f64 {
    let tx = 0.5 * PI * (x - 1.0 - FD_EX_ADV[0] * t);
    let ty = 0.5 * PI * (y - 1.0 - FD_EX_ADV[1] * t);
    sin4(tx) * sin4(ty) * (-(FD_EX_DIFF[0] + FD_EX_DIFF[1]) * t).exp()
}

/// `u_t + a . grad u - d . laplacian u` for [`fd_ex_exact_2d`].
pub fn fd_ex_source_2d(x: f64, y: f64, t: f64) -> f64 {
    let tx = 0.5 * PI * (x - 1.0 - FD_EX_ADV[0] * t);
    let ty = 0.5 * PI * (y - 1.0 - FD_EX_ADV[1] * t);
    let decay = FD_EX_DIFF[0] + FD_EX_DIFF[1];
    let e = (-decay * t).exp();
    let k2 = 0.25 * PI * PI;
    let (gx, gy) = (sin4(tx), sin4(ty));
    -decay * gx * gy * e - FD_EX_DIFF[0] * k2 * sin4_dd(tx) * gy * e - FD_EX_DIFF[1] * k2 * gx * sin4_dd(ty) * e
}

/// 1D analogue: `sin^4(pi/2 (x - 1 - 0.85 t)) exp(-0.3 t)` with `a = 0.85`,
/// `d = 0.3`.
pub fn fd_ex_exact_1d(x: f64, t: f64) -> f64 {
    sin4(0.5 * PI * (x - 1.0 - FD_EX_ADV[0] * t)) * (-FD_EX_DIFF[0] * t).exp()
}

pub fn fd_ex_source_1d(x: f64, t: f64) -> f64 {
    let tx = 0.5 * PI * (x - 1.0 - FD_EX_ADV[0] * t);
    let e = (-FD_EX_DIFF[0] * t).exp();
    -FD_EX_DIFF[0] * sin4(tx) * e - FD_EX_DIFF[0] * 0.25 * PI * PI * sin4_dd(tx) * e
}

/// A linear problem together with its grid and exact solution.
#[derive(Clone, Debug)]
pub struct MmsProblem {
    pub grid: GridSpec,
    pub adv: Vec<f64>,
    pub diff: Vec<f64>,
    pub problem: Arc<LinearProblem>,
}

impl MmsProblem {
    pub fn exact(&self, t: f64) -> Vec<f64> {
        self.problem.exact(t).expect("manufactured problems carry an exact solution")
    }
}

fn grid_function(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> TimeFunction {
    Arc::new(move |t, out: &mut [f64]| {
        for (idx, o) in out.iter_mut().enumerate() {
            let (x, y) = grid.point(idx);
            *o = f(x, y, t);
        }
    })
}

/// The manufactured advection-diffusion problem (1D or 2D) with `M = I`.
pub fn build_fd_mms(grid: &GridSpec, fd_order: usize) -> Result<MmsProblem> {
    let g = *grid;
    let adv = FD_EX_ADV[..g.dim()].to_vec();
    let diff = FD_EX_DIFF[..g.dim()].to_vec();
    let h = g.h();
    let parts = per_direction(&g, |k| advdiff_stencil(h, adv[k], diff[k], fd_order))?;
    let fov = kronecker_fov_bound(&g, &parts)?;
    let l = Arc::new(combine(parts));
    let (forcing, exact) = match g.dim() {
        1 => (
            grid_function(g, |x, _, t| fd_ex_source_1d(x, t)),
            grid_function(g, |x, _, t| fd_ex_exact_1d(x, t)),
        ),
        _ => (grid_function(g, fd_ex_source_2d), grid_function(g, fd_ex_exact_2d)),
    };
    let mass: Arc<dyn MassOperator> = Arc::new(IdentityMass::new(g.size()));
    let problem = LinearProblem::with_fov_bound(mass, l, Some(forcing), fov)?.with_exact(exact);
    Ok(MmsProblem {
        grid: g,
        adv,
        diff,
        problem: Arc::new(problem),
    })
}

/// Smooth periodic bump used as initial data for pure advection.
pub fn advection_initial(x: f64) -> f64 {
    sin4(0.5 * PI * (x - 1.0))
}

/// Unforced 1D upwind advection, exact solution unavailable (numerical
/// dissipation), initial data [`advection_initial`].
pub fn build_upwind_problem(grid: &GridSpec, a: f64) -> Result<MmsProblem> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("upwind problem is 1D".into()));
    }
    let l = build_upwind_advection(grid, &[a])?;
    let fov = fov_upper_bound(&l)?;
    let mass: Arc<dyn MassOperator> = Arc::new(IdentityMass::new(grid.size()));
    let g = *grid;
    // the exact transport solution, for reference only
    let exact = grid_function(g, move |x, _, t| advection_initial(x - a * t));
    let problem = LinearProblem::with_fov_bound(mass, Arc::new(l), None, fov)?.with_exact(exact);
    Ok(MmsProblem {
        grid: g,
        adv: vec![a],
        diff: vec![0.0],
        problem: Arc::new(problem),
    })
}

/// `M u' = L u` with the periodic FEM mass and diffusion matrices; exact
/// solution `sin(pi x) exp(-d pi^2 t)` of the continuous problem.
pub fn build_fem_diffusion_problem(grid: &GridSpec, d: f64) -> Result<MmsProblem> {
    let mass: Arc<dyn MassOperator> = Arc::new(build_fem_mass_1d(grid)?);
    let l = build_fem_diffusion_1d(grid, d)?;
    let fov = fov_upper_bound(&l)?;
    let exact = grid_function(*grid, move |x, _, t| (PI * x).sin() * (-d * PI * PI * t).exp());
    let problem = LinearProblem::with_fov_bound(mass, Arc::new(l), None, fov)?.with_exact(exact);
    Ok(MmsProblem {
        grid: *grid,
        adv: vec![0.0],
        diff: vec![d],
        problem: Arc::new(problem),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::LinearOperator;

    #[test]
    fn second_order_stencils() {
        assert_eq!(d2_stencil(2).unwrap(), vec![(-1, 1.0), (0, -2.0), (1, 1.0)]);
        assert!(matches!(d1_stencil(8), Err(Error::UnsupportedOrder(8))));
    }

    #[test]
    fn fem_mass_row_sums_are_h() {
        let g = GridSpec::new(1, 16).unwrap();
        let m = build_fem_mass_1d(&g).unwrap();
        let ones = vec![1.0; 16];
        for v in m.apply_vec(&ones) {
            assert!((v - g.h()).abs() < 1e-15);
        }
    }

    #[test]
    fn initial_value_and_decay() {
        let x: f64 = 0.3;
        let y: f64 = -0.4;
        let expect = (0.5 * PI * (x - 1.0)).sin().powi(4) * (0.5 * PI * (y - 1.0)).sin().powi(4);
        assert!((fd_ex_exact_2d(x, y, 0.0) - expect).abs() < 1e-15);
        // shifting along the characteristic isolates the decay factor
        let ratio = fd_ex_exact_2d(x + 0.85 * 2.0, y + 2.0, 2.0) / fd_ex_exact_2d(x, y, 0.0);
        assert!((ratio - (-1.1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_index_layout() {
        let g = GridSpec::new(2, 4).unwrap();
        assert_eq!(g.point(6), (g.coordinate(2), g.coordinate(1)));
        assert_eq!(g.size(), 16);
    }
}
