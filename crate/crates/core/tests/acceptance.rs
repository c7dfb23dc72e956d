//! The ten acceptance criteria. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use irk_core::experiments::{
    observed_orders, run_convergence, run_gamma_comparison, run_inner_sweep, ExperimentSpec,
    ProblemConfig, ProblemId,
};
use irk_core::irk::{advance_oracle, GammaMode, IrkStepper, LinearProblem, SolverOptions, TimeFunction};
use irk_core::linop::{DenseOperator, InnerKind};
use irk_core::spectral::{factor_list, spectral_decompose};
use irk_core::tableaux::{build_tableau, Family};
use irk_core::verify::{
    compute_kappa, gamma_grid, optimality_probe, random_stable_matrix, tight_matrix, worst_case_matrix,
};
use nalgebra::DMatrix;
use rand::Rng;

use common::{all_schemes, rel_diff, table_schemes};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Bounds on kappa per scheme, two decimals, as tabulated for s = 2..5.
fn reference_bounds(family: Family, s: usize) -> &'static [f64] {
    match (family, s) {
        (Family::Gauss, 2) => &[1.15],
        (Family::Gauss, 3) => &[1.00, 1.38],
        (Family::Gauss, 4) => &[1.61, 1.04],
        (Family::Gauss, 5) => &[1.00, 1.83, 1.13],
        (Family::RadauIIA, 2) => &[1.22],
        (Family::RadauIIA, 3) => &[1.00, 1.51],
        (Family::RadauIIA, 4) => &[1.79, 1.05],
        (Family::RadauIIA, 5) => &[1.00, 2.05, 1.15],
        (Family::LobattoIIIC, 2) => &[1.41],
        (Family::LobattoIIIC, 3) => &[1.00, 1.79],
        (Family::LobattoIIIC, 4) => &[2.12, 1.06],
        (Family::LobattoIIIC, 5) => &[1.00, 2.42, 1.17],
        _ => &[],
    }
}

/// The table mixes rounding and truncation, so an entry matches when it
/// equals either two-decimal form of the computed value. Returns
/// `(matches, matches_rounded)`.
fn matches_two_decimals(computed: f64, entry: f64) -> (bool, bool) {
    let rounded = (computed * 100.0).round() / 100.0;
    let truncated = (computed * 100.0).floor() / 100.0;
    let eq = |a: f64| (a - entry).abs() < 1e-9;
    (eq(rounded) || eq(truncated), eq(rounded))
}

fn criterion_1() -> Outcome {
    let mut mismatches = Vec::new();
    let mut truncated = Vec::new();
    let mut count = 0;
    for (family, s) in table_schemes() {
        let sd = spectral_decompose(&build_tableau(family, s).unwrap()).unwrap();
        let mut got: Vec<f64> = factor_list(&sd).iter().map(|f| f.pair().kappa_bound).collect();
        let mut want = reference_bounds(family, s).to_vec();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        count += want.len();
        if got.len() != want.len() {
            mismatches.push(format!("{family}-{s}: {} factors vs {} entries", got.len(), want.len()));
            continue;
        }
        for (&g, &w) in got.iter().zip(&want) {
            match matches_two_decimals(g, w) {
                (false, _) => mismatches.push(format!("{family}-{s}: {g:.4} vs {w:.2}")),
                (true, false) => truncated.push(format!("{family}-{s} {g:.4} listed as {w:.2}")),
                _ => {}
            }
        }
    }
    let detail = if mismatches.is_empty() {
        let mut d = format!("{count} entries match");
        if !truncated.is_empty() {
            d.push_str(&format!(" (truncated: {})", truncated.join(", ")));
        }
        d
    } else {
        mismatches.join("; ")
    };
    outcome(mismatches.is_empty(), detail)
}

fn criterion_2() -> Outcome {
    let factors: Vec<(f64, f64)> = all_schemes()
        .into_iter()
        .flat_map(|(f, s)| {
            let sd = spectral_decompose(&build_tableau(f, s).unwrap()).unwrap();
            factor_list(&sd)
                .into_iter()
                .map(|fac| (fac.pair().eta, fac.pair().beta))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut rng = common::rng(2);
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=64);
        let scale = 10f64.powf(rng.random_range(-1.0..2.0));
        let skew = rng.random_range(0.0..1.0);
        let l = random_stable_matrix(n, scale, skew, &mut rng);
        for &(eta, beta) in &factors {
            let gs = eta.hypot(beta);
            let r = compute_kappa(&l, eta, beta, gs, gs).unwrap();
            worst = worst.max(r.kappa_measured - r.kappa_bound);
            checks += 1;
        }
    }
    outcome(
        worst <= 1e-8,
        format!("{checks} checks over {} factors, max(kappa - bound) = {worst:.3e}", factors.len()),
    )
}

fn criterion_3() -> Outcome {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (f, s) in table_schemes() {
        let sd = spectral_decompose(&build_tableau(f, s).unwrap()).unwrap();
        for p in &sd.pairs {
            if pairs.len() < 10 {
                pairs.push((p.eta, p.beta));
            }
        }
    }
    let mut worst = 0.0f64;
    for &(eta, beta) in &pairs {
        let gs = eta.hypot(beta);
        let r = compute_kappa(&tight_matrix(gs, eta, beta), eta, beta, gs, gs).unwrap();
        worst = worst.max((r.kappa_measured / r.kappa_bound - 1.0).abs());
    }
    outcome(
        pairs.len() == 10 && worst <= 1e-8,
        format!("{} pairs, max relative gap {worst:.3e}", pairs.len()),
    )
}

fn criterion_4() -> Outcome {
    let (eta, beta): (f64, f64) = (3.0, 3f64.sqrt());
    let gs = eta.hypot(beta);
    let grid = gamma_grid(gs, 20);
    let rows = optimality_probe(eta, beta, &grid).unwrap();
    let reference = 1.0 + (beta / eta).powi(2);
    let ratio_ok = rows.iter().all(|r| r.ratio > reference);
    // the same worst-case matrix at gamma* meets the bound
    let at_star = compute_kappa(&worst_case_matrix(gs, eta, beta), eta, beta, gs, gs)
        .unwrap()
        .kappa_measured;
    let kappa_ok = rows.iter().all(|r| r.kappa_measured > at_star);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    outcome(
        ratio_ok && kappa_ok && rows.len() == 20,
        format!(
            "min lower-bound ratio {min_ratio:.6} > {reference:.6}; kappa(gamma*) = {at_star:.6}, all grid kappas larger: {kappa_ok}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let mut runs = 0;
    for (k, (family, s)) in all_schemes().into_iter().enumerate() {
        for fem in [false, true] {
            let n = 16 + (5 * k) % 17;
            let (problem, _) = common::random_problem(n, 500 + k as u64 + if fem { 100 } else { 0 }, fem);
            let t = build_tableau(family, s).unwrap();
            let dt = 0.1;
            let mut rng = common::rng(900 + k as u64);
            let mut u = common::random_vector(n, &mut rng);
            let mut v = u.clone();
            let st = IrkStepper::new(t.clone(), problem.clone(), dt, GammaMode::GammaStar, SolverOptions::default())
                .unwrap();
            for step in 0..5 {
                let tn = step as f64 * dt;
                u = st.advance(&u, tn).unwrap().0;
                v = advance_oracle(&t, &problem, &v, tn, dt).unwrap();
                worst = worst.max(rel_diff(&u, &v));
            }
            runs += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{runs} runs x 5 steps, max relative difference {worst:.3e}"))
}

fn base_spec(problem: ProblemId, family: Family, stages: usize) -> ExperimentSpec {
    ExperimentSpec {
        problem: ProblemConfig {
            id: problem,
            ..ProblemConfig::default()
        },
        family,
        stages,
        dt_ratio: 2.0,
        grids: vec![16, 32, 64, 128],
        t_final: 2.0,
        solver: SolverOptions::default(),
        gamma_mode: GammaMode::GammaStar,
    }
}

fn criterion_6() -> Outcome {
    let cases = [
        (Family::Gauss, 2, 4.0),
        (Family::RadauIIA, 2, 3.0),
        (Family::LobattoIIIC, 2, 2.0),
        (Family::Sdirk2L, 2, 2.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (family, s, expect) in cases {
        let mut spec = base_spec(ProblemId::AdvDiff2d, family, s);
        spec.solver.rel_tol = 1e-10;
        let recs = run_convergence(&spec).unwrap();
        let orders = observed_orders(&recs);
        let finest = orders.last().filter(|o| o.fine == 128).map(|o| o.linf);
        let ok = finest.is_some_and(|p| (p - expect).abs() <= 0.35);
        pass &= ok;
        parts.push(format!("{family}-{s} {:.3} (want {expect})", finest.unwrap_or(f64::NAN)));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_7() -> Outcome {
    let mut spec = base_spec(ProblemId::AdvDiff1d, Family::Gauss, 2);
    spec.grids = vec![32, 64, 128, 256];
    let recs = run_convergence(&spec).unwrap();
    let all_converged = recs.len() == 4 && recs.iter().all(|r| r.converged);
    let nf = recs[0].factors.len();
    let mut spread = 0.0f64;
    let mut means = Vec::new();
    for k in 0..nf {
        let m: Vec<f64> = recs.iter().map(|r| r.factors[k].mean_outer_iters()).collect();
        let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
        spread = spread.max(hi - lo);
        means.push(m);
    }
    outcome(
        all_converged && spread <= 2.0,
        format!("mean outer iterations per grid {means:?}, spread {spread:.3}"),
    )
}

fn criterion_8() -> Outcome {
    let schemes = [
        (Family::Gauss, 3),
        (Family::Gauss, 4),
        (Family::Gauss, 5),
        (Family::RadauIIA, 3),
        (Family::RadauIIA, 4),
        (Family::RadauIIA, 5),
        (Family::LobattoIIIC, 3),
        (Family::LobattoIIIC, 4),
        (Family::LobattoIIIC, 5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (family, s) in schemes {
        let mut spec = base_spec(ProblemId::Advect1dUpwind, family, s);
        spec.grids = vec![256];
        spec.t_final = 0.5;
        spec.solver.inner = InnerKind::GaussSeidel(1);
        let cmp = run_gamma_comparison(&spec).unwrap();
        let converged = cmp.records.iter().all(|r| r.converged);
        let none_worse = cmp.rows.iter().all(|r| r.iters_gamma_star <= r.iters_eta);
        let hardest = cmp
            .rows
            .iter()
            .max_by(|a, b| (a.beta / a.eta).partial_cmp(&(b.beta / b.eta)).unwrap())
            .unwrap();
        let strict = hardest.iters_gamma_star < hardest.iters_eta;
        pass &= converged && none_worse && strict;
        parts.push(format!("{family}-{s} {:.2}", hardest.speedup));
    }
    outcome(pass, format!("speedup on the hardest factor: {}", parts.join(", ")))
}

fn criterion_9() -> Outcome {
    let mut spec = base_spec(ProblemId::AdvDiff1d, Family::Gauss, 3);
    spec.grids = vec![256];
    spec.t_final = 0.25;
    let kinds: Vec<InnerKind> = [1, 2, 3, 5].iter().map(|&k| InnerKind::GaussSeidel(k)).collect();
    let rows = run_inner_sweep(&spec, &kinds).unwrap();
    let status: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{}={} ({} apps)",
                r.inner,
                if r.record.converged { "converged" } else { "diverged" },
                r.record.total_precond_apps()
            )
        })
        .collect();
    let largest = rows.last().is_some_and(|r| r.record.converged);
    outcome(rows.len() == 4 && largest, status.join(", "))
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    let (t0, dt, u0) = (0.3, 0.7, 1.25);
    for s in 1..=5 {
        let t = build_tableau(Family::Gauss, s).unwrap();
        for k in 0..2 * s {
            let op = Arc::new(DenseOperator::new(DMatrix::zeros(1, 1)).unwrap());
            let forcing: TimeFunction = Arc::new(move |t, out: &mut [f64]| out[0] = t.powi(k as i32));
            let p = Arc::new(LinearProblem::identity_mass(op, Some(forcing)).unwrap());
            let st = IrkStepper::new(t.clone(), p, dt, GammaMode::GammaStar, SolverOptions::default()).unwrap();
            let u = st.advance(&[u0], t0).unwrap().0[0];
            let kp = (k + 1) as i32;
            let exact = u0 + ((t0 + dt).powi(kp) - t0.powi(kp)) / kp as f64;
            worst = worst.max((u - exact).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max error {worst:.3e} over s = 1..5, k <= 2s - 1"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("kappa bounds table", criterion_1, Duration::from_secs(1)),
        ("bound validity", criterion_2, Duration::from_secs(60)),
        ("tightness", criterion_3, Duration::from_secs(1)),
        ("optimality of gamma*", criterion_4, Duration::from_secs(1)),
        ("oracle equivalence", criterion_5, Duration::from_secs(60)),
        ("convergence orders", criterion_6, Duration::from_secs(600)),
        ("h-robustness", criterion_7, Duration::from_secs(300)),
        ("gamma* vs eta", criterion_8, Duration::from_secs(300)),
        ("inner sweep", criterion_9, Duration::from_secs(300)),
        ("quadrature exactness", criterion_10, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} [{:.2?}{}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed,
            if in_time { String::new() } else { format!(" > budget {budget:?}") }
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
