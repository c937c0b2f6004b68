//! `fused-kite` command-line front end.
//!
//! Exit status: 0 on success, 2 on configuration or input errors, 3 when a
//! solver stops short of its tolerance, 1 on internal failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod bench;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use fused_kite::alm::{ssnal_solve, AlmParams};
use fused_kite::baselines::{run_baseline, BaselineParams};
use fused_kite::io::{
    generate_synthetic, lambda_from_alphas, normalize_columns, read_data, read_solution, write_data,
    write_solution, DataFormat, LevelSetSummary, ReportDocument, RunRecord, SyntheticSpec,
};
use fused_kite::levelset::{levelset_solve, LevelSetParams};
use fused_kite::{kkt_residual, primal_objective, Error, Problem, SolveReport, SolverKind};

use args::{CheckArgs, Cli, Command, ConstrainedArgs, DataArgs, Format, GenArgs, RegArgs, SolveArgs, Solver};

pub(crate) const THREADS_ENV: &str = "FUSED_KITE_THREADS";

#[derive(Debug)]
pub(crate) enum CliError {
    Config(String),
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Factorization(_) => CliError::Internal(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub(crate) type CliResult<T> = Result<T, CliError>;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Done,
    NotConverged,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::SolveConstrained(a) => cmd_constrained(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Gen(a) => cmd_gen(&a),
    };
    match res {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(3),
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn config<T: serde::Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).unwrap_or(serde_json::Value::Null)
}

pub(crate) fn solver_kind(s: Solver) -> SolverKind {
    match s {
        Solver::Ssnal => SolverKind::Ssnal,
        Solver::Admm => SolverKind::Admm,
        Solver::Iadmm => SolverKind::Iadmm,
        Solver::Ladmm => SolverKind::Ladmm,
        Solver::Apg => SolverKind::Apg,
    }
}

fn data_format(path: &Path, f: Option<Format>) -> DataFormat {
    match f {
        Some(Format::Libsvm) => DataFormat::Libsvm,
        Some(Format::Csv) => DataFormat::Csv,
        None => DataFormat::from_path(path),
    }
}

/// Reads the data, normalizes if asked and resolves the penalty weights.
pub(crate) fn load_problem(data: &DataArgs, reg: &RegArgs) -> CliResult<Problem> {
    let (a, b) = read_data(&data.data, data_format(&data.data, data.format))
        .map_err(|e| CliError::Config(format!("{}: {e}", data.data.display())))?;
    let a = if data.no_normalize { a } else { normalize_columns(&a).0 };
    let (l1, l2) = match (reg.alpha1, reg.alpha2, reg.lambda1, reg.lambda2) {
        (Some(a1), Some(a2), None, None) => lambda_from_alphas(&a, &b, a1, a2)?,
        (None, None, Some(l1), Some(l2)) => (l1, l2),
        _ => {
            return Err(CliError::Config(
                "give exactly one of --alpha1/--alpha2 or --lambda1/--lambda2, both values of the pair".into(),
            ))
        }
    };
    log::info!("m = {}, n = {}, lambda1 = {l1:.6e}, lambda2 = {l2:.6e}", a.nrows(), a.ncols());
    Ok(Problem::new(a, b, l1, l2)?)
}

fn emit(doc: &ReportDocument, out: Option<&Path>) -> CliResult<()> {
    let json = doc.to_json()?;
    match out {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}").map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

fn save_solution(path: Option<&Path>, x: &[f64]) -> CliResult<()> {
    if let Some(p) = path {
        write_solution(p, x).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn outcome(report: &SolveReport) -> Outcome {
    if report.status.is_optimal() {
        Outcome::Done
    } else {
        eprintln!("{} stopped with status {:?} at eta = {:.3e}", report.solver, report.status, report.eta);
        Outcome::NotConverged
    }
}

/// Runs one solver; shared by `solve` and `bench`.
pub(crate) fn run_solver(
    kind: SolverKind,
    problem: &Problem,
    tol: f64,
    max_iter: Option<usize>,
    time_limit: Option<f64>,
    trace: bool,
) -> CliResult<(Vec<f64>, RunRecord)> {
    if let Some(t) = time_limit {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("--time-limit must be positive, got {t}")));
        }
    }
    if kind == SolverKind::Ssnal {
        let defaults = AlmParams::default();
        let params = AlmParams {
            kkt_tol: tol,
            max_outer: max_iter.unwrap_or(defaults.max_outer),
            time_limit,
            record_trace: trace,
            ..defaults
        };
        let out = ssnal_solve(problem, &params)?;
        Ok((out.x, RunRecord { report: out.report, trace: out.trace }))
    } else {
        let defaults = BaselineParams::default();
        let params = BaselineParams {
            tol,
            max_iter: max_iter.unwrap_or(defaults.max_iter),
            time_limit,
            trace_every: usize::from(trace),
            ..defaults
        };
        let out = run_baseline(kind, problem, &params)?;
        Ok((out.x, RunRecord { report: out.report, trace: out.trace }))
    }
}

fn cmd_solve(args: &SolveArgs) -> CliResult<Outcome> {
    let problem = load_problem(&args.data, &args.reg)?;
    let (x, run) = run_solver(
        solver_kind(args.solver),
        &problem,
        args.tol,
        args.max_iter,
        args.time_limit,
        args.trace,
    )?;
    let result = outcome(&run.report);
    let mut doc = ReportDocument::new("solve", config(args));
    doc.runs.push(run);
    emit(&doc, args.out.as_deref())?;
    save_solution(args.solution.as_deref(), &x)?;
    Ok(result)
}

fn cmd_constrained(args: &ConstrainedArgs) -> CliResult<Outcome> {
    let problem = load_problem(&args.data, &args.reg)?;
    let delta = match (args.gamma, args.delta) {
        (Some(g), None) => {
            if !(g > 0.0 && g < 1.0) {
                return Err(CliError::Config(format!("--gamma must lie in (0, 1), got {g}")));
            }
            g * problem.b_norm()
        }
        (None, Some(d)) => d,
        _ => return Err(CliError::Config("constrained mode needs --gamma or --delta".into())),
    };
    let params = LevelSetParams {
        tol: args.tol,
        max_iter: args.max_iter,
        inner_tol: args.inner_tol,
        warm_start: !args.no_warm_start,
        ..LevelSetParams::default()
    };
    let out = levelset_solve(&problem, delta, &params)?;
    let rel_gap = (out.phi - out.delta).abs() / out.delta.max(1.0);
    let result = if out.converged {
        Outcome::Done
    } else {
        eprintln!(
            "level-set stopped after {} steps with |phi - delta| / max(1, delta) = {rel_gap:.3e}",
            out.iterations
        );
        Outcome::NotConverged
    };
    let mut doc = ReportDocument::new("solve-constrained", config(args));
    doc.runs.push(RunRecord { report: out.report.clone(), trace: Vec::new() });
    doc.levelset = Some(LevelSetSummary {
        delta: out.delta,
        mu: out.mu,
        phi: out.phi,
        rel_gap,
        iterations: out.iterations,
        converged: out.converged,
        probes: out.trace,
    });
    emit(&doc, args.out.as_deref())?;
    save_solution(args.solution.as_deref(), &out.x)?;
    Ok(result)
}

fn cmd_check(args: &CheckArgs) -> CliResult<Outcome> {
    let problem = load_problem(&args.data, &args.reg)?;
    let x = read_solution(&args.solution).map_err(|e| CliError::Config(format!("{}: {e}", args.solution.display())))?;
    if x.len() != problem.n() {
        return Err(CliError::Config(format!(
            "solution has {} entries, data has {} columns",
            x.len(),
            problem.n()
        )));
    }
    let eta = kkt_residual(&x, &problem)?;
    let obj = primal_objective(&x, &problem)?;
    println!("eta = {eta:.6e}");
    println!("objective = {obj:.12e}");
    match args.tol {
        Some(tol) if eta > tol => Ok(Outcome::NotConverged),
        _ => Ok(Outcome::Done),
    }
}

fn cmd_gen(args: &GenArgs) -> CliResult<Outcome> {
    if args.m == 0 || args.n == 0 {
        return Err(CliError::Config("--m and --n must be positive".into()));
    }
    let spec = SyntheticSpec {
        m: args.m,
        n: args.n,
        k_blocks: args.k_blocks,
        noise_sd: args.noise_sd,
        density: args.density,
        zero_fraction: args.zero_fraction,
        seed: args.seed,
    };
    let prob = generate_synthetic(&spec)?;
    write_data(&args.out, data_format(&args.out, args.format), &prob.a, &prob.b)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.out.display())))?;
    save_solution(args.truth.as_deref(), &prob.x_true)?;
    eprintln!("wrote {} x {} problem to {}", args.m, args.n, args.out.display());
    Ok(Outcome::Done)
}
