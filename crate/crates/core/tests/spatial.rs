use std::f64::consts::PI;

use irk_core::linop::{fov_upper_bound, LinearOperator};
use irk_core::spatial::{
    build_advdiff, build_fd_mms, build_fem_diffusion_1d, build_fem_diffusion_problem,
    build_fem_mass_1d, build_upwind_advection, build_upwind_problem, d1_stencil, d2_stencil,
    fd_ex_exact_1d, fd_ex_exact_2d, fd_ex_source_1d, fd_ex_source_2d, kronecker_fov_bound,
    periodic_stencil, GridSpec, FD_EX_ADV, FD_EX_DIFF,
};
use nalgebra::Complex;

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `sum_o w o^k / k!` must equal `[k == m]` for `k <= m + order - 1`.
fn taylor_moments_ok(stencil: &[(i64, f64)], derivative: u32, order: u32) {
    for k in 0..=(derivative + order - 1) {
        let moment: f64 = stencil.iter().map(|&(o, w)| w * (o as f64).powi(k as i32)).sum::<f64>() / factorial(k);
        let expect = if k == derivative { 1.0 } else { 0.0 };
        assert!((moment - expect).abs() < 1e-14, "d{derivative} order {order}, moment {k}: {moment}");
    }
}

#[test]
fn stencils_are_consistent_to_their_order() {
    for order in [2, 4] {
        taylor_moments_ok(&d1_stencil(order).unwrap(), 1, order as u32);
        taylor_moments_ok(&d2_stencil(order).unwrap(), 2, order as u32);
    }
    // and not one order more
    let d1 = d1_stencil(4).unwrap();
    let m5: f64 = d1.iter().map(|&(o, w)| w * (o as f64).powi(5)).sum();
    assert!(m5.abs() > 1e-3);
}

#[test]
fn circulant_eigenvalues_match_the_symbol() {
    let n = 32;
    let g = GridSpec::new(1, n).unwrap();
    let (a, d) = (0.85, 0.3);
    let l = build_advdiff(&g, &[a], &[d], 4).unwrap();
    let h = g.h();
    let mut stencil: Vec<(i64, f64)> = d1_stencil(4).unwrap().into_iter().map(|(o, w)| (o, -a * w / h)).collect();
    stencil.extend(d2_stencil(4).unwrap().into_iter().map(|(o, w)| (o, d * w / (h * h))));
    let eig = l.to_dense().complex_eigenvalues();
    let scale = l.norm_inf();
    for j in 0..n {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let sym: Complex<f64> = stencil.iter().map(|&(o, w)| Complex::from_polar(w, o as f64 * theta)).sum();
        let nearest = eig.iter().map(|e| (e - sym).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-10 * scale, "mode {j}: {sym}");
        assert!(sym.re <= 1e-12 * scale);
    }
}

#[test]
fn upwind_is_dissipative_and_far_from_the_real_axis() {
    for a in [1.0, -0.6] {
        let g = GridSpec::new(1, 64).unwrap();
        let l = build_upwind_advection(&g, &[a]).unwrap();
        assert!(fov_upper_bound(&l).unwrap() <= 1e-12);
        let eig = l.to_dense().complex_eigenvalues();
        let worst = eig
            .iter()
            .filter(|e| e.re.abs() > 1e-12)
            .map(|e| e.im.abs() / e.re.abs())
            .fold(0.0, f64::max);
        assert!(worst > 1.0, "{worst}");
        // conservation: columns sum to zero
        let ones = vec![1.0; 64];
        assert!(l.transpose().apply_vec(&ones).iter().all(|v| v.abs() < 1e-12));
    }
    let g = GridSpec::new(1, 64).unwrap();
    assert!(build_upwind_advection(&g, &[0.0]).is_err());
    assert!(build_upwind_problem(&GridSpec::new(2, 8).unwrap(), 1.0).is_err());
}

#[test]
fn manufactured_sources_satisfy_the_pde() {
    let e = 1e-4;
    let samples: Vec<(f64, f64, f64)> = (0..20)
        .map(|k| {
            let k = k as f64;
            ((0.37 * k).sin(), (0.91 * k + 0.2).cos(), 0.05 * k)
        })
        .collect();
    for &(x, y, t) in &samples {
        let u = |x: f64, y: f64, t: f64| fd_ex_exact_2d(x, y, t);
        let ut = (u(x, y, t + e) - u(x, y, t - e)) / (2.0 * e);
        let ux = (u(x + e, y, t) - u(x - e, y, t)) / (2.0 * e);
        let uy = (u(x, y + e, t) - u(x, y - e, t)) / (2.0 * e);
        let uxx = (u(x + e, y, t) - 2.0 * u(x, y, t) + u(x - e, y, t)) / (e * e);
        let uyy = (u(x, y + e, t) - 2.0 * u(x, y, t) + u(x, y - e, t)) / (e * e);
        let lhs = ut + FD_EX_ADV[0] * ux + FD_EX_ADV[1] * uy - FD_EX_DIFF[0] * uxx - FD_EX_DIFF[1] * uyy;
        assert!((lhs - fd_ex_source_2d(x, y, t)).abs() < 1e-6, "2D at ({x}, {y}, {t})");

        let v = |x: f64, t: f64| fd_ex_exact_1d(x, t);
        let vt = (v(x, t + e) - v(x, t - e)) / (2.0 * e);
        let vx = (v(x + e, t) - v(x - e, t)) / (2.0 * e);
        let vxx = (v(x + e, t) - 2.0 * v(x, t) + v(x - e, t)) / (e * e);
        let lhs = vt + FD_EX_ADV[0] * vx - FD_EX_DIFF[0] * vxx;
        assert!((lhs - fd_ex_source_1d(x, t)).abs() < 1e-6, "1D at ({x}, {t})");
    }
}

#[test]
fn exact_solution_is_periodic() {
    for k in 0..10 {
        let (x, y, t) = (-1.0 + 0.2 * k as f64, 0.1 * k as f64 - 0.5, 0.07 * k as f64);
        assert!((fd_ex_exact_2d(x, y, t) - fd_ex_exact_2d(x + 2.0, y - 2.0, t)).abs() < 1e-14);
        assert!((fd_ex_exact_1d(x, t) - fd_ex_exact_1d(x + 2.0, t)).abs() < 1e-14);
    }
}

#[test]
fn fem_matrices() {
    let g = GridSpec::new(1, 24).unwrap();
    let m = build_fem_mass_1d(&g).unwrap();
    let k = build_fem_diffusion_1d(&g, 0.4).unwrap();
    let md = m.matrix().to_dense();
    let kd = k.to_dense();
    assert_eq!(md, md.transpose());
    assert_eq!(kd, kd.transpose());
    assert!((md.row(3).sum() - g.h()).abs() < 1e-15);
    assert!(kd.row(5).sum().abs() < 1e-14);
    assert!((kd[(0, 0)] + 2.0 * 0.4 / g.h()).abs() < 1e-13);
    assert!(fov_upper_bound(&k).unwrap() <= 1e-12);
    assert!(build_fem_diffusion_1d(&g, -1.0).is_err());
    assert!(build_fem_mass_1d(&GridSpec::new(2, 8).unwrap()).is_err());
}

#[test]
fn fem_diffusion_problem_matches_continuous_mode_in_space() {
    // M^-1 K sin(pi x) -> -d pi^2 sin(pi x) at second order
    let d = 0.5;
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let g = GridSpec::new(1, n).unwrap();
        let mp = build_fem_diffusion_problem(&g, d).unwrap();
        let u = mp.exact(0.0);
        let ku = mp.problem.op().apply_vec(&u);
        let mut w = vec![0.0; n];
        mp.problem.mass().solve(&ku, &mut w).unwrap();
        let err = w.iter().zip(&u).map(|(a, b)| (a + d * PI * PI * b).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() > 1.9, "{errs:?}");
    }
}

fn fd_truncation_error(dim: usize, n: usize, order: usize) -> f64 {
    let g = GridSpec::new(dim, n).unwrap();
    let mp = build_fd_mms(&g, order).unwrap();
    let t = 0.2;
    let u = mp.exact(t);
    let lu = mp.problem.op().apply_vec(&u);
    let mut f = vec![0.0; g.size()];
    mp.problem.forcing(t, &mut f);
    // u_t = L u + f holds for the continuous operator; compare with a
    // centered time difference of the exact solution
    let e = 1e-5;
    let (up, um) = (mp.exact(t + e), mp.exact(t - e));
    (0..g.size())
        .map(|i| ((up[i] - um[i]) / (2.0 * e) - lu[i] - f[i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn finite_differences_reach_their_nominal_order() {
    for (dim, order, grids) in [(1, 2, vec![16, 32, 64, 128]), (1, 4, vec![16, 32, 64]), (2, 2, vec![16, 32, 64]), (2, 4, vec![16, 32, 64])] {
        let errs: Vec<f64> = grids.iter().map(|&n| fd_truncation_error(dim, n, order)).collect();
        let last = errs.len() - 1;
        let rate = (errs[last - 1] / errs[last]).log2();
        assert!(rate > order as f64 - 0.3, "{dim}D order {order}: {errs:?}");
    }
}

#[test]
fn kronecker_bound_matches_dense_field_of_values() {
    let g = GridSpec::new(2, 12).unwrap();
    let g1 = GridSpec::new(1, 12).unwrap();
    let parts = vec![
        build_advdiff(&g1, &[0.85], &[0.3], 4).unwrap(),
        build_advdiff(&g1, &[1.0], &[0.25], 4).unwrap(),
    ];
    let bound = kronecker_fov_bound(&g, &parts).unwrap();
    let full = build_advdiff(&g, &[0.85, 1.0], &[0.3, 0.25], 4).unwrap();
    let dense = fov_upper_bound(&full).unwrap();
    assert!((bound - dense).abs() < 1e-12 * full.norm_inf());
    // periodic index layout: x fastest
    let p = periodic_stencil(4, &[(1, 1.0)]);
    assert_eq!(p.get(3, 0), 1.0);
}

#[test]
fn grid_validation() {
    assert!(GridSpec::new(3, 16).is_err());
    assert!(GridSpec::new(1, 3).is_err());
    let g = GridSpec::new(1, 10).unwrap();
    assert_eq!(g.coordinate(0), -1.0);
    assert!((g.h() - 0.2).abs() < 1e-15);
    assert!((g.l2_norm(&[1.0; 10]) - 2f64.sqrt()).abs() < 1e-14);
    assert!(build_advdiff(&g, &[1.0], &[0.1], 6).is_err());
    assert!(build_advdiff(&g, &[1.0, 1.0], &[0.1], 2).is_err());
}
