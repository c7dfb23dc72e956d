//! Spectral data of `A0^-1`: the eigenvalue factorization of its
//! characteristic polynomial and the stage polynomials used to assemble the
//! right-hand side of the update.
//!
//! With `B = A0^-1` the update needs `det(B - xI) = prod_i (lambda_i - x)`
//! factored into real quadratics `(eta - x)^2 + beta^2` (one per conjugate pair)
//! and linear terms `eta - x` (one per real eigenvalue), together with the
//! polynomials `R_i(x) = sum_j w_j adj(B - xI)_{ji}` where `w = b0^T B`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tableaux::ButcherTableau;

/// Eigenvalues with `|Im| < PAIR_TOL * |lambda|` are treated as real.
pub const PAIR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair {
    pub eta: f64,
    pub beta: f64,
    pub gamma_star: f64,
    pub kappa_bound: f64,
}

impl EigenPair {
    pub fn new(eta: f64, beta: f64) -> Self {
        let gamma_star = eta.hypot(beta);
        let kappa_bound = if beta == 0.0 { 1.0 } else { gamma_star / eta };
        EigenPair {
            eta,
            beta,
            gamma_star,
            kappa_bound,
        }
    }

    pub fn is_real(&self) -> bool {
        self.beta == 0.0
    }

    /// `beta / eta`; the factors with `beta > eta` are the hard ones.
    pub fn skewness(&self) -> f64 {
        self.beta / self.eta
    }
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub pairs: Vec<EigenPair>,
    pub reals: Vec<EigenPair>,
    /// Monic `det(xI - A0^-1)`, ascending powers.
    pub char_poly: Vec<f64>,
}

impl SpectralData {
    pub fn stages(&self) -> usize {
        self.char_poly.len() - 1
    }

    /// `det(A0^-1 - xI)` evaluated at zero, i.e. the product of eigenvalues.
    pub fn determinant(&self) -> f64 {
        let s = self.stages();
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        sign * self.char_poly[0]
    }
}

/// Output of the Faddeev-LeVerrier recursion on an `s x s` matrix `B`.
#[derive(Clone, Debug)]
pub struct FaddeevLeverrier {
    /// Monic `det(xI - B)`, ascending powers.
    pub char_poly: Vec<f64>,
    /// `adj(xI - B) = sum_k x^k adj_coeffs[k]` for `k = 0..s`.
    pub adj_coeffs: Vec<DMatrix<f64>>,
}

pub fn faddeev_leverrier(b: &DMatrix<f64>) -> FaddeevLeverrier {
    let s = b.nrows();
    let mut char_poly = vec![0.0; s + 1];
    char_poly[s] = 1.0;
    // m_k multiplies x^{s-k}
    let mut m = DMatrix::<f64>::identity(s, s);
    let mut by_power = vec![DMatrix::zeros(s, s); s];
    for k in 1..=s {
        if k > 1 {
            m = b * &m + DMatrix::identity(s, s) * char_poly[s - k + 1];
        }
        let bm = b * &m;
        char_poly[s - k] = -bm.trace() / k as f64;
        by_power[s - k] = m.clone();
    }
    FaddeevLeverrier {
        char_poly,
        adj_coeffs: by_power,
    }
}

fn eigenvalues_of_inverse(t: &ButcherTableau) -> Result<Vec<nalgebra::Complex<f64>>> {
    let s = t.stages();
    if t.is_lower_triangular() {
        // Triangular A0 can be defective (repeated SDIRK diagonal); read the
        // spectrum off the diagonal instead of perturbing it through QR.
        return (0..s)
            .map(|i| {
                let d = t.a()[(i, i)];
                if d == 0.0 {
                    Err(Error::SingularSystem("zero diagonal in triangular A0".into()))
                } else {
                    Ok(nalgebra::Complex::new(1.0 / d, 0.0))
                }
            })
            .collect();
    }
    let inv = t.a_inverse()?;
    let eig = inv
        .clone()
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?
        .complex_eigenvalues();
    Ok(eig.iter().copied().collect())
}

/// Eigenvalues of `A0^-1` grouped into conjugate pairs and reals.
///
/// Pairs are sorted by ascending `beta / eta`, reals by ascending `eta`.
pub fn spectral_decompose(t: &ButcherTableau) -> Result<SpectralData> {
    let s = t.stages();
    let eig = eigenvalues_of_inverse(t)?;
    let mut pairs = Vec::new();
    let mut reals = Vec::new();
    let mut negative_im = 0usize;
    for z in eig {
        if z.re <= 0.0 {
            return Err(Error::StabilityViolation(format!(
                "eigenvalue {} + {}i of A0^-1 has nonpositive real part",
                z.re, z.im
            )));
        }
        if z.im.abs() < PAIR_TOL * z.norm() {
            reals.push(EigenPair::new(z.re, 0.0));
        } else if z.im > 0.0 {
            pairs.push(EigenPair::new(z.re, z.im));
        } else {
            negative_im += 1;
        }
    }
    if negative_im != pairs.len() || 2 * pairs.len() + reals.len() != s {
        return Err(Error::EigenFailure(format!(
            "could not pair eigenvalues: {} pairs, {} conjugates, {} reals for s = {s}",
            pairs.len(),
            negative_im,
            reals.len()
        )));
    }
    pairs.sort_by(|a, b| a.skewness().total_cmp(&b.skewness()));
    reals.sort_by(|a, b| a.eta.total_cmp(&b.eta));

    let fl = faddeev_leverrier(&t.a_inverse()?);
    Ok(SpectralData {
        pairs,
        reals,
        char_poly: fl.char_poly,
    })
}

/// The polynomials `R_i` (ascending coefficients, degree at most `s - 1`).
#[derive(Clone, Debug)]
pub struct StagePolynomials {
    pub r: Vec<Vec<f64>>,
}

impl StagePolynomials {
    pub fn stages(&self) -> usize {
        self.r.len()
    }

    pub fn degree(&self) -> usize {
        self.r.iter().map(|p| p.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Evaluates every `R_i` at a scalar.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        self.r.iter().map(|p| crate::poly::eval(p, x)).collect()
    }
}

pub fn adjugate_row_polynomials(t: &ButcherTableau) -> Result<StagePolynomials> {
    let s = t.stages();
    let b_inv = t.a_inverse()?;
    // the eigen checks (positivity, pairing) apply here too
    spectral_decompose(t)?;
    let fl = faddeev_leverrier(&b_inv);
    let w = t.b().transpose() * &b_inv;
    // adj(B - xI) = (-1)^{s-1} adj(xI - B)
    let sign = if (s - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let mut r = vec![vec![0.0; s]; s];
    for (k, coeff) in fl.adj_coeffs.iter().enumerate() {
        let row = &w * coeff;
        for i in 0..s {
            r[i][k] = sign * row[i];
        }
    }
    Ok(StagePolynomials { r })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    /// `(eta - x)^2 + beta^2` for a conjugate pair.
    Quadratic(EigenPair),
    /// `eta - x` for a real eigenvalue.
    Linear(EigenPair),
}

impl Factor {
    pub fn pair(&self) -> &EigenPair {
        match self {
            Factor::Quadratic(p) | Factor::Linear(p) => p,
        }
    }

    /// Coefficients of the factor in `x`, ascending.
    pub fn polynomial(&self) -> Vec<f64> {
        match *self {
            Factor::Quadratic(p) => vec![p.eta * p.eta + p.beta * p.beta, -2.0 * p.eta, 1.0],
            Factor::Linear(p) => vec![p.eta, -1.0],
        }
    }
}

/// Solve order: conjugate pairs first, then reals.
pub fn factor_list(sd: &SpectralData) -> Vec<Factor> {
    sd.pairs
        .iter()
        .copied()
        .map(Factor::Quadratic)
        .chain(sd.reals.iter().copied().map(Factor::Linear))
        .collect()
}
