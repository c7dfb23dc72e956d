//! Bodies of the subcommands. Each appends its output to `out` after the
//! configuration header and returns a failure that should set the exit code
//! without suppressing the output.

use std::fmt::Write as _;

use irk_core::experiments::{
    inner_with_count, observed_orders, run_baseline_comparison, run_convergence, run_gamma_comparison,
    run_inner_sweep, write_csv, write_rows, RunRecord, CSV_HEADER,
};
use irk_core::spectral::{factor_list, spectral_decompose, Factor};
use irk_core::tableaux::{build_tableau, validate_tableau};
use irk_core::verify::{
    compute_kappa, gamma_grid, optimality_probe, random_stable_matrix, tight_matrix, worst_case_matrix,
    MAX_DENSE_DIM,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CondArgs, CondMode, Failure, RunArgs, SweepArgs, TableauArgs};

type CmdResult = Result<Option<Failure>, Failure>;

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>, out: &mut String) -> Result<(), Failure> {
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| Failure::Runtime(e.to_string()))?);
    Ok(())
}

fn records_csv(records: &[RunRecord], out: &mut String) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write_csv(&mut buf, records)?;
    out.push_str(&String::from_utf8(buf).map_err(|e| Failure::Runtime(e.to_string()))?);
    Ok(())
}

fn unconverged(records: &[RunRecord]) -> Option<Failure> {
    let bad: Vec<String> = records.iter().filter(|r| !r.converged).map(|r| r.nx.to_string()).collect();
    if bad.is_empty() {
        None
    } else {
        Some(Failure::NotConverged(format!("factor solves failed on grid(s) {}", bad.join(","))))
    }
}

pub fn tableau(args: &TableauArgs, out: &mut String) -> CmdResult {
    let (family, s) = args.scheme.resolve()?;
    let t = build_tableau(family, s)?;
    let report = validate_tableau(&t);
    if args.csv {
        let mut w = csv_writer();
        w.write_record(["kind", "name", "i", "j", "value", "tolerance", "passed"])?;
        for i in 0..s {
            for j in 0..s {
                w.write_record(["a", "a", &i.to_string(), &j.to_string(), &t.a()[(i, j)].to_string(), "", ""])?;
            }
        }
        for i in 0..s {
            w.write_record(["b", "b", &i.to_string(), "", &t.b()[i].to_string(), "", ""])?;
        }
        for i in 0..s {
            w.write_record(["c", "c", &i.to_string(), "", &t.c()[i].to_string(), "", ""])?;
        }
        w.write_record(["order", "order", "", "", &t.order().to_string(), "", ""])?;
        for c in &report.checks {
            w.write_record([
                "check",
                c.name.as_str(),
                "",
                "",
                &c.residual.to_string(),
                &c.tolerance.to_string(),
                &c.passed.to_string(),
            ])?;
        }
        finish(w, out)?;
    } else {
        let _ = writeln!(out, "{} with {s} stages, order {}", family, t.order());
        let _ = writeln!(out, "A =");
        for i in 0..s {
            let row: Vec<String> = (0..s).map(|j| format!("{:>24.16e}", t.a()[(i, j)])).collect();
            let _ = writeln!(out, "  {}", row.join(" "));
        }
        let fmt_vec = |v: &nalgebra::DVector<f64>| v.iter().map(|x| format!("{x:>24.16e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "b =\n  {}", fmt_vec(t.b()));
        let _ = writeln!(out, "c =\n  {}", fmt_vec(t.c()));
        let _ = writeln!(out, "checks:");
        for c in &report.checks {
            let _ = writeln!(
                out,
                "  {:<4} {:<32} {:>12.3e} (tol {:.1e})",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            );
        }
    }
    if report.all_passed() {
        Ok(None)
    } else {
        Ok(Some(Failure::Runtime(format!("{family} with {s} stages failed validation"))))
    }
}

pub fn spectrum(args: &TableauArgs, out: &mut String) -> CmdResult {
    let (family, s) = args.scheme.resolve()?;
    let sd = spectral_decompose(&build_tableau(family, s)?)?;
    let factors = factor_list(&sd);
    if args.csv {
        let mut w = csv_writer();
        w.write_record(["factor", "kind", "eta", "beta", "gamma_star", "kappa_bound"])?;
        for (k, f) in factors.iter().enumerate() {
            let p = f.pair();
            let kind = match f {
                Factor::Quadratic(_) => "quadratic",
                Factor::Linear(_) => "linear",
            };
            w.write_record([
                k.to_string(),
                kind.to_string(),
                p.eta.to_string(),
                p.beta.to_string(),
                p.gamma_star.to_string(),
                p.kappa_bound.to_string(),
            ])?;
        }
        finish(w, out)?;
    } else {
        let _ = writeln!(out, "eigenvalues of A0^-1:");
        for p in &sd.pairs {
            let _ = writeln!(out, "  {:.16e} +/- {:.16e} i", p.eta, p.beta);
        }
        for p in &sd.reals {
            let _ = writeln!(out, "  {:.16e}", p.eta);
        }
        let _ = writeln!(out, "factors (solve order):");
        let _ = writeln!(out, "  {:>3} {:<9} {:>22} {:>22} {:>22} {:>22}", "k", "kind", "eta", "beta", "gamma*", "kappa bound");
        for (k, f) in factors.iter().enumerate() {
            let p = f.pair();
            let kind = if matches!(f, Factor::Quadratic(_)) { "quadratic" } else { "linear" };
            let _ = writeln!(
                out,
                "  {k:>3} {kind:<9} {:>22.15e} {:>22.15e} {:>22.15e} {:>22.15e}",
                p.eta, p.beta, p.gamma_star, p.kappa_bound
            );
        }
    }
    Ok(None)
}

pub fn cond(args: &CondArgs, out: &mut String) -> CmdResult {
    let (family, s) = args.scheme.resolve()?;
    let sd = spectral_decompose(&build_tableau(family, s)?)?;
    match args.mode {
        CondMode::Random if args.trials == 0 || args.size == 0 || args.size > MAX_DENSE_DIM => {
            return Err(Failure::Usage(format!(
                "random mode needs --trials >= 1 and 1 <= --size <= {MAX_DENSE_DIM}"
            )))
        }
        CondMode::Scan | CondMode::Optimality if args.points == 0 => {
            return Err(Failure::Usage("--points must be positive".into()))
        }
        _ => {}
    }
    let mut w = csv_writer();
    w.write_record(["factor", "eta", "beta", "gamma", "kappa_measured", "kappa_bound"])?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for (k, p) in sd.pairs.iter().enumerate() {
        let row = |w: &mut csv::Writer<Vec<u8>>, gamma: f64, measured: f64, bound: f64| {
            w.write_record([
                k.to_string(),
                p.eta.to_string(),
                p.beta.to_string(),
                gamma.to_string(),
                measured.to_string(),
                bound.to_string(),
            ])
        };
        let g = p.gamma_star;
        match args.mode {
            CondMode::Tight => {
                let c = compute_kappa(&tight_matrix(g, p.eta, p.beta), p.eta, p.beta, g, g)?;
                row(&mut w, g, c.kappa_measured, c.kappa_bound)?;
            }
            CondMode::Random => {
                let mut worst = 0.0f64;
                let mut bound = p.kappa_bound;
                for _ in 0..args.trials {
                    let scale = 10f64.powf(rng.random_range(-1.0..2.0));
                    let skew = rng.random_range(0.0..1.0);
                    let l = random_stable_matrix(args.size, scale, skew, &mut rng);
                    let c = compute_kappa(&l, p.eta, p.beta, g, g)?;
                    worst = worst.max(c.kappa_measured);
                    bound = c.kappa_bound;
                }
                row(&mut w, g, worst, bound)?;
            }
            CondMode::Scan => {
                let l = worst_case_matrix(g, p.eta, p.beta);
                for gamma in gamma_grid(g, args.points) {
                    let c = compute_kappa(&l, p.eta, p.beta, g, gamma)?;
                    row(&mut w, gamma, c.kappa_measured, c.kappa_bound)?;
                }
            }
            CondMode::Optimality => {
                for r in optimality_probe(p.eta, p.beta, &gamma_grid(g, args.points))? {
                    row(&mut w, r.gamma, r.kappa_measured, r.reference.sqrt())?;
                }
            }
        }
    }
    finish(w, out)?;
    Ok(None)
}

pub fn run(args: &RunArgs, out: &mut String) -> CmdResult {
    let spec = args.spec()?;
    let records = run_convergence(&spec)?;
    records_csv(&records, out)?;
    for o in observed_orders(&records) {
        let _ = writeln!(out, "# order {}-{} linf={:.4} l2={:.4}", o.coarse, o.fine, o.linf, o.l2);
    }
    Ok(unconverged(&records))
}

pub fn compare_gamma(args: &RunArgs, out: &mut String) -> CmdResult {
    let spec = args.spec()?;
    let cmp = run_gamma_comparison(&spec)?;
    records_csv(&cmp.records, out)?;
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "# speedup nx={} factor={} eta={} beta={} iters_eta={:.3} iters_gamma_star={:.3} speedup={:.4}",
            r.nx, r.factor_index, r.eta, r.beta, r.iters_eta, r.iters_gamma_star, r.speedup
        );
    }
    Ok(unconverged(&cmp.records))
}

pub fn inner_sweep(args: &SweepArgs, out: &mut String) -> CmdResult {
    let spec = args.run.spec()?;
    let kinds = args
        .counts
        .0
        .iter()
        .map(|&k| inner_with_count(&spec.solver.inner, k))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = run_inner_sweep(&spec, &kinds)?;
    let mut w = csv_writer();
    w.write_record(CSV_HEADER)?;
    finish(w, out)?;
    for kind in &kinds {
        let records: Vec<RunRecord> = rows.iter().filter(|r| &r.inner == kind).map(|r| r.record.clone()).collect();
        let _ = writeln!(out, "# inner={kind}");
        let mut w = csv_writer();
        write_rows(&mut w, &records)?;
        finish(w, out)?;
    }
    // small counts are expected to fail; only the largest one must converge
    let last = kinds.last().expect("count list is never empty");
    let tail: Vec<RunRecord> = rows.iter().filter(|r| &r.inner == last).map(|r| r.record.clone()).collect();
    Ok(unconverged(&tail))
}

pub fn baseline(args: &RunArgs, out: &mut String) -> CmdResult {
    let spec = args.spec()?;
    let cmp = run_baseline_comparison(&spec)?;
    records_csv(&cmp.records, out)?;
    for r in &cmp.rows {
        let dev = r.deviation.map(|d| format!("{d:.3e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "# baseline method={} family={} stages={} apps_per_step={:.3} apps_per_step_per_stage={:.3} deviation={dev}",
            r.method.tag(),
            r.family.name(),
            r.stages,
            r.apps_per_step,
            r.apps_per_step_per_stage
        );
    }
    Ok(unconverged(&cmp.records))
}
