//! `bench`: every requested solver on one problem, one table row in the
//! layout `m;n | λ₁;λ₂ | nnz(x);nnz(Bx) | η per solver | time per solver`.

use std::fmt::Write as _;

use fused_kite::io::{ReportDocument, RunRecord};
use fused_kite::{Problem, SolverKind};
use rayon::prelude::*;

use crate::args::BenchArgs;
use crate::{config, emit, load_problem, run_solver, solver_kind, CliError, CliResult, Outcome, THREADS_ENV};

/// Worker count from `FUSED_KITE_THREADS`; solvers run one at a time when unset.
pub(crate) fn thread_cap() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(1),
        Err(e) => Err(CliError::Config(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

pub(crate) fn cmd_bench(args: &BenchArgs) -> CliResult<Outcome> {
    let threads = thread_cap()?;
    let problem = load_problem(&args.data, &args.reg)?;
    let mut kinds: Vec<SolverKind> = Vec::new();
    for k in args.solvers.iter().map(|&s| solver_kind(s)) {
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Config("--solvers is empty".into()));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let runs: Vec<CliResult<RunRecord>> = pool.install(|| {
        kinds
            .par_iter()
            .map(|&k| {
                log::info!("bench: running {k}");
                run_solver(k, &problem, args.tol, args.max_iter, args.time_limit, false).map(|(_, r)| r)
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<CliResult<Vec<_>>>()?;

    print!("{}", render_table(&args.data.data.display().to_string(), &problem, &runs));

    let mut doc = ReportDocument::new("bench", config(args));
    doc.runs = runs;
    if let Some(out) = args.out.as_deref() {
        emit(&doc, Some(out))?;
    }
    // a comparison is informative even when some solver hit its cap
    Ok(Outcome::Done)
}

fn render_table(name: &str, problem: &Problem, runs: &[RunRecord]) -> String {
    let letters = ["a", "b", "c", "d", "e", "f", "g", "h"];
    let pick = runs
        .iter()
        .find(|r| r.report.solver == SolverKind::Ssnal)
        .unwrap_or(&runs[0]);
    let mut s = String::new();
    let legend: Vec<String> = runs
        .iter()
        .zip(letters)
        .map(|(r, l)| format!("\"{l}\" = {}", r.report.solver))
        .collect();
    let _ = writeln!(s, "{}", legend.join(", "));
    let tags = letters[..runs.len()].join("|");
    let (eta_head, time_head) = (format!("eta {tags}"), format!("time {tags}"));
    let _ = writeln!(
        s,
        "{:<20} {:>13} {:>21} {:>15}  {:<w$}  {}",
        "probname",
        "m;n",
        "lambda1;lambda2",
        "nnz(x);nnz(Bx)",
        eta_head,
        time_head,
        w = 10 * runs.len()
    );
    let etas: Vec<String> = runs.iter().map(|r| format!("{:.1e}", r.report.eta)).collect();
    let times: Vec<String> = runs.iter().map(|r| hms(r.report.wall_time_s)).collect();
    let base = std::path::Path::new(name)
        .file_stem()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    let dims = format!("{};{}", problem.m(), problem.n());
    let weights = format!("{:.2e};{:.2e}", problem.lambda1(), problem.lambda2());
    let nnz = format!("{};{}", pick.report.nnz_x, pick.report.nnz_bx);
    let _ = writeln!(
        s,
        "{:<20} {:>13} {:>21} {:>15}  {:<w$}  {}",
        base,
        dims,
        weights,
        nnz,
        etas.join("|"),
        times.join("|"),
        w = 10 * runs.len()
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<7} {:<10} {:>10} {:>16} {:>7} {:>7} {:>9} {:>10}",
        "solver", "status", "eta", "objective", "outer", "ssn", "cg", "time(s)"
    );
    for r in runs {
        let rep = &r.report;
        let _ = writeln!(
            s,
            "{:<7} {:<10} {:>10.3e} {:>16.9e} {:>7} {:>7} {:>9} {:>10.3}",
            rep.solver.name(),
            status_name(rep),
            rep.eta,
            rep.primal_obj,
            rep.outer_iters,
            rep.ssn_iters,
            rep.cg_iters,
            rep.wall_time_s
        );
    }
    s
}

fn status_name(rep: &fused_kite::SolveReport) -> String {
    serde_json::to_value(rep.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// `h:mm:ss` above a minute, `s.ss` below.
fn hms(secs: f64) -> String {
    if secs < 60.0 {
        return format!("{secs:.2}");
    }
    let t = secs.round() as u64;
    format!("{}:{:02}:{:02}", t / 3600, (t / 60) % 60, t % 60)
}
