use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{CsrMatrix, CyclicBandedLu, LinearOperator, SparseLu};
use crate::error::{check_dim, Error, Result};
use crate::krylov::{self, KrylovConfig, KrylovMethod};

/// Approximate inverse of an operator.
pub trait Preconditioner: Send + Sync {
    fn dim(&self) -> usize;

    /// `z ~ A^-1 r`. Returns the number of base applications performed
    /// (relaxation sweeps count individually, inner Krylov loops sum theirs).
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<usize>;

    /// True when the map `r -> z` changes between calls (inner Krylov).
    fn is_variable(&self) -> bool {
        false
    }

    fn is_symmetric(&self) -> bool {
        false
    }
}

impl<T: Preconditioner + ?Sized> Preconditioner for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<usize> {
        (**self).apply(r, z)
    }
    fn is_variable(&self) -> bool {
        (**self).is_variable()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

pub struct IdentityPreconditioner {
    n: usize,
}

impl IdentityPreconditioner {
    pub fn new(n: usize) -> Self {
        IdentityPreconditioner { n }
    }
}

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<usize> {
        z.copy_from_slice(r);
        Ok(0)
    }
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Which approximation of `(gamma M - dt L)^-1` to use.
#[derive(Clone, Debug, PartialEq)]
pub enum InnerKind {
    /// Banded LU when the cyclic bandwidth is small, sparse LU otherwise.
    Exact,
    ExactBanded,
    ExactSparseLu,
    Jacobi(usize),
    GaussSeidel(usize),
    InnerKrylov {
        tol: f64,
        max_iters: usize,
        base: Box<InnerKind>,
    },
}

impl InnerKind {
    pub fn is_exact(&self) -> bool {
        matches!(self, InnerKind::Exact | InnerKind::ExactBanded | InnerKind::ExactSparseLu)
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, InnerKind::InnerKrylov { .. })
    }

    /// Exact solves and Jacobi sweeps give symmetric maps for symmetric input.
    pub fn preserves_symmetry(&self) -> bool {
        self.is_exact() || matches!(self, InnerKind::Jacobi(_))
    }
}

impl fmt::Display for InnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerKind::Exact => write!(f, "exact"),
            InnerKind::ExactBanded => write!(f, "banded"),
            InnerKind::ExactSparseLu => write!(f, "sparse-lu"),
            InnerKind::Jacobi(k) => write!(f, "jacobi:{k}"),
            InnerKind::GaussSeidel(k) => write!(f, "gs:{k}"),
            InnerKind::InnerKrylov {
                tol,
                max_iters,
                base,
            } => write!(f, "krylov:{tol:e}:{max_iters}:{base}"),
        }
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(Error::InvalidArgument(format!(
            "{what} needs a positive sweep count, got {s:?}"
        ))),
    }
}

impl FromStr for InnerKind {
    type Err = Error;

    /// `exact`, `banded`, `sparse-lu`, `jacobi:k`, `gs:k`,
    /// `krylov:tol:maxit[:base]` (base defaults to `gs:1`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), rest) {
            ("exact", None) => Ok(InnerKind::Exact),
            ("banded", None) => Ok(InnerKind::ExactBanded),
            ("sparse-lu" | "sparselu" | "lu", None) => Ok(InnerKind::ExactSparseLu),
            ("jacobi", Some(k)) => Ok(InnerKind::Jacobi(parse_count(k, "jacobi")?)),
            ("gs" | "gauss-seidel", Some(k)) => {
                Ok(InnerKind::GaussSeidel(parse_count(k, "gauss-seidel")?))
            }
            ("krylov", Some(r)) => {
                let mut parts = r.splitn(3, ':');
                let tol_s = parts.next().unwrap_or("");
                let tol: f64 = tol_s.parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad inner krylov tolerance {tol_s:?}"))
                })?;
                if !(tol > 0.0 && tol < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "inner krylov tolerance must lie in (0, 1), got {tol}"
                    )));
                }
                let max_iters = parse_count(parts.next().unwrap_or(""), "krylov")?;
                let base = match parts.next() {
                    Some(b) => b.parse::<InnerKind>()?,
                    None => InnerKind::GaussSeidel(1),
                };
                if base.is_variable() {
                    return Err(Error::InvalidArgument(
                        "nested inner krylov is not supported".into(),
                    ));
                }
                Ok(InnerKind::InnerKrylov {
                    tol,
                    max_iters,
                    base: Box::new(base),
                })
            }
            _ => Err(Error::InvalidArgument(format!("unknown inner preconditioner {s:?}"))),
        }
    }
}

enum Inner {
    Banded(CyclicBandedLu),
    Sparse(SparseLu),
    Jacobi {
        a: CsrMatrix,
        inv_diag: Vec<f64>,
        sweeps: usize,
    },
    GaussSeidel {
        a: CsrMatrix,
        inv_diag: Vec<f64>,
        sweeps: usize,
    },
    Krylov {
        a: Arc<CsrMatrix>,
        base: Box<InnerPreconditioner>,
        cfg: KrylovConfig,
    },
}

/// A built inner preconditioner for one shifted operator.
pub struct InnerPreconditioner {
    kind: InnerKind,
    n: usize,
    symmetric_op: bool,
    inner: Inner,
}

impl InnerPreconditioner {
    pub fn kind(&self) -> &InnerKind {
        &self.kind
    }
}

/// Exact kinds pick banded LU up to this cyclic bandwidth.
pub const AUTO_BANDED_LIMIT: usize = 8;

fn inverse_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    let mut weak = 0usize;
    let inv = (0..a.n())
        .map(|i| {
            let d = a.get(i, i);
            let off: f64 = a.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum();
            if off > d.abs() {
                weak += 1;
            }
            if d == 0.0 {
                Err(Error::FactorizationFailure(format!("zero diagonal at row {i}")))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if weak > 0 {
        log::warn!("relaxation on a matrix that is not diagonally dominant in {weak} rows");
    }
    Ok(inv)
}

pub fn build_inner_preconditioner(
    kind: &InnerKind,
    op: &dyn LinearOperator,
) -> Result<InnerPreconditioner> {
    let a = op.to_csr().ok_or_else(|| {
        Error::InvalidArgument("inner preconditioners need an assembled operator".into())
    })?;
    check_dim(op.dim(), a.n())?;
    let n = a.n();
    let symmetric_op = op.is_symmetric();
    let inner = match kind {
        InnerKind::Exact => {
            if a.cyclic_bandwidth() <= AUTO_BANDED_LIMIT {
                Inner::Banded(CyclicBandedLu::factor(&a)?)
            } else {
                Inner::Sparse(SparseLu::factor(&a)?)
            }
        }
        InnerKind::ExactBanded => Inner::Banded(CyclicBandedLu::factor(&a)?),
        InnerKind::ExactSparseLu => Inner::Sparse(SparseLu::factor(&a)?),
        InnerKind::Jacobi(k) => Inner::Jacobi {
            inv_diag: inverse_diagonal(&a)?,
            a,
            sweeps: *k,
        },
        InnerKind::GaussSeidel(k) => Inner::GaussSeidel {
            inv_diag: inverse_diagonal(&a)?,
            a,
            sweeps: *k,
        },
        InnerKind::InnerKrylov {
            tol,
            max_iters,
            base,
        } => {
            let base = Box::new(build_inner_preconditioner(base, &a)?);
            let restart = (*max_iters).clamp(1, 30);
            Inner::Krylov {
                a: Arc::new(a),
                base,
                cfg: KrylovConfig {
                    method: KrylovMethod::Gmres { restart },
                    rel_tol: *tol,
                    abs_tol: 0.0,
                    max_iters: *max_iters,
                },
            }
        }
    };
    Ok(InnerPreconditioner {
        kind: kind.clone(),
        n,
        symmetric_op,
        inner,
    })
}

impl Preconditioner for InnerPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<usize> {
        match &self.inner {
            Inner::Banded(lu) => {
                lu.solve(r, z);
                Ok(1)
            }
            Inner::Sparse(lu) => {
                lu.solve(r, z);
                Ok(1)
            }
            Inner::Jacobi { a, inv_diag, sweeps } => {
                // first sweep from a zero guess
                for i in 0..self.n {
                    z[i] = r[i] * inv_diag[i];
                }
                let mut az = vec![0.0; self.n];
                for _ in 1..*sweeps {
                    a.apply(z, &mut az);
                    for i in 0..self.n {
                        z[i] += inv_diag[i] * (r[i] - az[i]);
                    }
                }
                Ok(*sweeps)
            }
            Inner::GaussSeidel { a, inv_diag, sweeps } => {
                z.iter_mut().for_each(|v| *v = 0.0);
                for _ in 0..*sweeps {
                    for i in 0..self.n {
                        let mut acc = r[i];
                        for (j, v) in a.row(i) {
                            if j != i {
                                acc -= v * z[j];
                            }
                        }
                        z[i] = acc * inv_diag[i];
                    }
                }
                Ok(*sweeps)
            }
            Inner::Krylov { a, base, cfg } => {
                z.iter_mut().for_each(|v| *v = 0.0);
                let report = krylov::solve(a.as_ref(), r, base.as_ref(), cfg, z)?;
                Ok(report.preconditioner_applications)
            }
        }
    }

    fn is_variable(&self) -> bool {
        self.kind.is_variable()
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric_op && self.kind.preserves_symmetry()
    }
}
