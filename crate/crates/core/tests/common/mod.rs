#![allow(dead_code)]

use std::sync::Arc;

use irk_core::irk::{LinearProblem, TimeFunction};
use irk_core::linop::{DenseOperator, IdentityMass, MassOperator};
use irk_core::spatial::{build_fem_mass_1d, GridSpec};
use irk_core::tableaux::Family;
use irk_core::verify::random_stable_matrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every supported (family, stages) pair.
pub fn all_schemes() -> Vec<(Family, usize)> {
    Family::ALL
        .iter()
        .flat_map(|&f| {
            let (lo, hi) = f.stage_range();
            (lo..=hi).map(move |s| (f, s))
        })
        .collect()
}

/// Gauss, Radau IIA and Lobatto IIIC with `s` in `2..=5`.
pub fn table_schemes() -> Vec<(Family, usize)> {
    [Family::Gauss, Family::RadauIIA, Family::LobattoIIIC]
        .iter()
        .flat_map(|&f| (2..=5).map(move |s| (f, s)))
        .collect()
}

/// `f(t) = a + b t + c sin(3 t)` with random coefficient vectors.
pub fn random_forcing(n: usize, rng: &mut ChaCha8Rng) -> TimeFunction {
    let mut coeff = || (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
    let (a, b, c) = (coeff(), coeff(), coeff());
    Arc::new(move |t, out: &mut [f64]| {
        for i in 0..out.len() {
            out[i] = a[i] + b[i] * t + c[i] * (3.0 * t).sin();
        }
    })
}

/// Random stable `L`, optional FEM mass matrix and random forcing.
pub fn random_problem(n: usize, seed: u64, fem: bool) -> (Arc<LinearProblem>, DMatrix<f64>) {
    let mut r = rng(seed);
    let scale = 10f64.powf(r.random_range(-0.5..1.0));
    let skew = r.random_range(0.0..1.0);
    let l = random_stable_matrix(n, scale, skew, &mut r);
    let mass: Arc<dyn MassOperator> = if fem {
        Arc::new(build_fem_mass_1d(&GridSpec::new(1, n).unwrap()).unwrap())
    } else {
        Arc::new(IdentityMass::new(n))
    };
    let forcing = random_forcing(n, &mut r);
    let op = Arc::new(DenseOperator::new(l.clone()).unwrap());
    let p = LinearProblem::new(mass, op, Some(forcing)).unwrap();
    (Arc::new(p), l)
}

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `max |a - b| / max |b|`
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}
