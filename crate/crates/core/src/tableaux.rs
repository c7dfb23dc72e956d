//! Butcher tableaux for the fully implicit collocation families and the
//! diagonally implicit baselines.
//!
//! Gauss and Radau IIA tableaux are built by collocation: the nodes are the
//! roots of the family's defining polynomial on `[0, 1]` and
//! `a_ij = \int_0^{c_i} l_j`, `b_j = \int_0^1 l_j` for the Lagrange basis `l_j`.
//! Lobatto IIIC uses the Lobatto nodes and weights with `a_i1 = b_1` plus the
//! simplifying conditions `C(s-1)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Gauss,
    RadauIIA,
    LobattoIIIC,
    Sdirk2L,
    Sdirk3L,
    BackwardEuler,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Gauss,
        Family::RadauIIA,
        Family::LobattoIIIC,
        Family::Sdirk2L,
        Family::Sdirk3L,
        Family::BackwardEuler,
    ];

    /// Inclusive range of supported stage counts.
    pub fn stage_range(self) -> (usize, usize) {
        match self {
            Family::Gauss | Family::RadauIIA => (1, 5),
            Family::LobattoIIIC => (2, 5),
            Family::Sdirk2L => (2, 2),
            Family::Sdirk3L => (3, 3),
            Family::BackwardEuler => (1, 1),
        }
    }

    pub fn supports(self, stages: usize) -> bool {
        let (lo, hi) = self.stage_range();
        (lo..=hi).contains(&stages)
    }

    /// Diagonally implicit families (lower-triangular `A0`).
    pub fn is_diagonally_implicit(self) -> bool {
        matches!(
            self,
            Family::Sdirk2L | Family::Sdirk3L | Family::BackwardEuler
        )
    }

    pub fn formal_order(self, stages: usize) -> usize {
        match self {
            Family::Gauss => 2 * stages,
            Family::RadauIIA => 2 * stages - 1,
            Family::LobattoIIIC => 2 * stages - 2,
            Family::Sdirk2L => 2,
            Family::Sdirk3L => 3,
            Family::BackwardEuler => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gauss => "gauss",
            Family::RadauIIA => "radauIIA",
            Family::LobattoIIIC => "lobattoIIIC",
            Family::Sdirk2L => "sdirk2l",
            Family::Sdirk3L => "sdirk3l",
            Family::BackwardEuler => "backward-euler",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gauss" | "gauss-legendre" => Ok(Family::Gauss),
            "radauiia" | "radau" | "radau-iia" | "radau2a" => Ok(Family::RadauIIA),
            "lobattoiiic" | "lobatto" | "lobatto-iiic" | "lobatto3c" => Ok(Family::LobattoIIIC),
            "sdirk2l" | "sdirk2" | "l-sdirk2" => Ok(Family::Sdirk2L),
            "sdirk3l" | "sdirk3" | "l-sdirk3" => Ok(Family::Sdirk3L),
            "backward-euler" | "backwardeuler" | "be" | "euler" => Ok(Family::BackwardEuler),
            other => Err(Error::UnsupportedScheme(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ButcherTableau {
    family: Family,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    order: usize,
}

impl ButcherTableau {
    /// Wraps raw coefficients without validation. Use [`validate_tableau`] to
    /// check them.
    pub fn from_parts(
        family: Family,
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        order: usize,
    ) -> Result<Self> {
        let s = a.nrows();
        if a.ncols() != s || b.len() != s || c.len() != s || s == 0 {
            return Err(Error::ConstructionFailure(format!(
                "inconsistent tableau shapes: A {}x{}, b {}, c {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(ButcherTableau {
            family,
            a,
            b,
            c,
            order,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn stages(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_lower_triangular(&self) -> bool {
        let s = self.stages();
        (0..s).all(|i| (i + 1..s).all(|j| self.a[(i, j)] == 0.0))
    }

    pub fn a_inverse(&self) -> Result<DMatrix<f64>> {
        self.a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem("A0 is not invertible".into()))
    }

    /// Returns a copy with `b` replaced, used to build deliberately broken
    /// tableaux in tests and diagnostics.
    pub fn with_weights(&self, b: DVector<f64>) -> Result<Self> {
        Self::from_parts(self.family, self.a.clone(), b, self.c.clone(), self.order)
    }
}

pub fn build_tableau(family: Family, stages: usize) -> Result<ButcherTableau> {
    if !family.supports(stages) {
        let (lo, hi) = family.stage_range();
        return Err(Error::UnsupportedScheme(format!(
            "{family} with {stages} stages (supported: {lo}..={hi})"
        )));
    }
    let order = family.formal_order(stages);
    let tableau = match family {
        Family::Gauss => {
            let nodes = poly::real_roots(&poly::shifted_legendre(stages))?;
            collocation(family, &nodes, order)?
        }
        Family::RadauIIA => {
            let p = poly::add_scaled(
                &poly::shifted_legendre(stages),
                &poly::shifted_legendre(stages - 1),
                -1.0,
            );
            let mut nodes = poly::real_roots(&p)?;
            // the right endpoint is exact by construction
            *nodes.last_mut().unwrap() = 1.0;
            collocation(family, &nodes, order)?
        }
        Family::LobattoIIIC => lobatto_iiic(stages, order)?,
        Family::Sdirk2L => {
            let g = (2.0 - 2f64.sqrt()) / 2.0;
            ButcherTableau::from_parts(
                family,
                DMatrix::from_row_slice(2, 2, &[g, 0.0, 1.0 - g, g]),
                DVector::from_vec(vec![1.0 - g, g]),
                DVector::from_vec(vec![g, 1.0]),
                order,
            )?
        }
        Family::Sdirk3L => sdirk3l(order)?,
        Family::BackwardEuler => ButcherTableau::from_parts(
            family,
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 1.0),
            order,
        )?,
    };

    let report = validate_tableau(&tableau);
    if !report.all_passed() {
        let failed: Vec<_> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (residual {:e})", c.name, c.residual))
            .collect();
        return Err(Error::ConstructionFailure(format!(
            "{family}-{stages}: {}",
            failed.join(", ")
        )));
    }
    Ok(tableau)
}

fn lagrange_basis(nodes: &[f64], j: usize) -> Vec<f64> {
    let mut l = vec![1.0];
    for (m, &cm) in nodes.iter().enumerate() {
        if m != j {
            let denom = nodes[j] - cm;
            l = poly::mul(&l, &[-cm / denom, 1.0 / denom]);
        }
    }
    l
}

fn collocation(family: Family, nodes: &[f64], order: usize) -> Result<ButcherTableau> {
    let s = nodes.len();
    let mut a = DMatrix::zeros(s, s);
    let mut b = DVector::zeros(s);
    for j in 0..s {
        let antideriv = poly::integrate(&lagrange_basis(nodes, j));
        b[j] = poly::eval(&antideriv, 1.0);
        for (i, &ci) in nodes.iter().enumerate() {
            a[(i, j)] = poly::eval(&antideriv, ci);
        }
    }
    ButcherTableau::from_parts(family, a, b, DVector::from_column_slice(nodes), order)
}

fn lobatto_iiic(stages: usize, order: usize) -> Result<ButcherTableau> {
    let s = stages;
    let p = poly::add_scaled(
        &poly::shifted_legendre(s),
        &poly::shifted_legendre(s - 2),
        -1.0,
    );
    let mut nodes = poly::real_roots(&p)?;
    nodes[0] = 0.0;
    nodes[s - 1] = 1.0;

    let mut b = DVector::zeros(s);
    for j in 0..s {
        b[j] = poly::eval(&poly::integrate(&lagrange_basis(&nodes, j)), 1.0);
    }

    // Row i of A solves: a_i1 = b_1 and sum_j a_ij c_j^{k-1} = c_i^k / k for k < s.
    let mut system = DMatrix::zeros(s, s);
    system[(0, 0)] = 1.0;
    for k in 1..s {
        for j in 0..s {
            system[(k, j)] = nodes[j].powi(k as i32 - 1);
        }
    }
    let lu = system.lu();
    let mut a = DMatrix::zeros(s, s);
    for i in 0..s {
        let mut rhs = DVector::zeros(s);
        rhs[0] = b[0];
        for k in 1..s {
            rhs[k] = nodes[i].powi(k as i32) / k as f64;
        }
        let row = lu.solve(&rhs).ok_or_else(|| {
            Error::ConstructionFailure("singular Lobatto IIIC condition system".into())
        })?;
        a.set_row(i, &row.transpose());
    }
    ButcherTableau::from_parts(
        Family::LobattoIIIC,
        a,
        b,
        DVector::from_vec(nodes),
        order,
    )
}

/// Three-stage, third-order, stiffly accurate L-stable SDIRK. The diagonal
/// `g` is the root of `x^3 - 3x^2 + 3x/2 - 1/6` in `(1/3, 1/2)`.
fn sdirk3l(order: usize) -> Result<ButcherTableau> {
    let p = [-1.0 / 6.0, 1.5, -3.0, 1.0];
    let mut g: f64 = 0.4358665215;
    for _ in 0..20 {
        let (v, d) = poly::eval_with_derivative(&p, g);
        g -= v / d;
    }
    let c2 = (1.0 + g) / 2.0;
    let b1 = -(6.0 * g * g - 16.0 * g + 1.0) / 4.0;
    let b2 = (6.0 * g * g - 20.0 * g + 5.0) / 4.0;
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(3, 3, &[
        g, 0.0, 0.0,
        c2 - g, g, 0.0,
        b1, b2, g,
    ]);
    ButcherTableau::from_parts(
        Family::Sdirk3L,
        a,
        DVector::from_vec(vec![b1, b2, g]),
        DVector::from_vec(vec![g, c2, 1.0]),
        order,
    )
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.name != "min Re eig(A0^-1)" && c.name != "min singular value")
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push_residual(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        });
    }
}

pub const ROW_SUM_TOL: f64 = 1e-13;
pub const ORDER_TOL: f64 = 1e-12;
pub const MIN_SINGULAR_VALUE: f64 = 1e-10;

/// Checks every tableau invariant and reports the measured residuals.
pub fn validate_tableau(t: &ButcherTableau) -> ValidationReport {
    let mut report = ValidationReport::default();
    let s = t.stages();

    let row_sum = (0..s)
        .map(|i| (t.a.row(i).sum() - t.c[i]).abs())
        .fold(0.0, f64::max);
    report.push_residual("row sums = c", row_sum, ROW_SUM_TOL);

    report.push_residual("sum b = 1", (t.b.sum() - 1.0).abs(), ROW_SUM_TOL);

    for k in 1..=t.order.max(1) {
        let lhs: f64 = (0..s).map(|j| t.b[j] * t.c[j].powi(k as i32 - 1)).sum();
        report.push_residual(
            format!("B({k}): b.c^{} = 1/{k}", k - 1),
            (lhs - 1.0 / k as f64).abs(),
            ORDER_TOL,
        );
    }

    let sigma_min = t
        .a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    report.checks.push(Check {
        name: "min singular value".into(),
        residual: sigma_min,
        tolerance: MIN_SINGULAR_VALUE,
        passed: sigma_min > MIN_SINGULAR_VALUE,
    });

    let min_re = if sigma_min > MIN_SINGULAR_VALUE {
        // eig(A0^-1) = 1 / eig(A0); Re(1/z) has the sign of Re(z)
        t.a.complex_eigenvalues()
            .iter()
            .map(|z| (z.inv()).re)
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    report.checks.push(Check {
        name: "min Re eig(A0^-1)".into(),
        residual: min_re,
        tolerance: 0.0,
        passed: min_re > 0.0,
    });
    report
}
