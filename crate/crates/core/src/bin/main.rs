use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use arcqk::arc::{arcqk_minimize, arcqk_minimize_gauss_newton, ArcParams};
use arcqk::bench::{
    builtin_solver, performance_profile, read_records_csv, read_records_json, run_matrix,
    write_curves_csv, write_curves_svg, write_records_csv, write_records_json, BenchRecord,
    BenchSolver, Metric,
};
use arcqk::problem::{
    check_derivatives, check_least_squares, check_points, problem_by_name, suite_problems,
    GaussNewton, SuiteFilter, SuiteProblem,
};
use arcqk::trust_region::{st_minimize, TrParams};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

// Output errors (a closed pipe, typically) are not worth a panic.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "arcqk", version, about = "Cubic regularization with multishift Krylov solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Arcqk,
    St,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one suite problem and print the result record.
    Solve {
        #[arg(long)]
        problem: String,
        /// Override the problem dimension.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "arcqk")]
        solver: SolverArg,
        /// Solver parameter as key=value; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Perturb the start point with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Print the full trace as JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Run a solver × problem matrix and write records and profiles.
    Bench {
        /// Problem names or glob patterns, comma-separated; `all` or `n=LO..HI`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value = "arcqk,st", value_delimiter = ',')]
        solvers: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Perturb every start point with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Wall-clock budget per run, in seconds.
        #[arg(long, default_value_t = 60.0)]
        time_budget: f64,
    },
    /// Build a performance profile from a records file.
    Profile {
        /// Records as JSON or CSV (by extension).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "neval_hvp")]
        metric: String,
        /// Output file; `.svg` renders a plot, anything else writes CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check derivatives of a problem at its start point and 5 perturbations.
    Check {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn split_param(kv: &str) -> Result<(&str, &str)> {
    kv.split_once('=').ok_or_else(|| format!("parameter `{kv}` is not KEY=VALUE").into())
}

fn print_record(r: &BenchRecord) {
    out!(
        "{} ({}) n={} status={} iter={} f={:.6e} |g|={:.3e} #f={} #g={} #Hv={} time={:.3}s",
        r.name,
        r.solver,
        r.nvar,
        r.status.as_str(),
        r.iter,
        r.f,
        r.grad_norm,
        r.neval_f,
        r.neval_grad,
        r.neval_hvp,
        r.elapsed_seconds
    );
}

fn solve(
    problem: &str,
    n: Option<usize>,
    solver: SolverArg,
    params: &[String],
    seed: Option<u64>,
    trace: bool,
) -> Result<()> {
    let mut p = problem_by_name(problem, n)?;
    if let Some(s) = seed {
        p = p.perturbed(s);
    }
    match solver {
        SolverArg::Arcqk => {
            let mut prm = ArcParams::default();
            for kv in params {
                let (k, v) = split_param(kv)?;
                prm.set(k, v)?;
            }
            let (state, rec) = match &p {
                SuiteProblem::Smooth(sp) => arcqk_minimize(sp.as_ref(), &prm)?,
                SuiteProblem::LeastSquares(lp) => arcqk_minimize_gauss_newton(lp.as_ref(), &prm)?,
            };
            print_record(&rec);
            out!("final status: {}, attempts: {}, max alpha: {:.3e}", state.status, state.attempts, state.max_alpha);
            if trace {
                out!("{}", serde_json::to_string_pretty(&state.trace)?);
            }
        }
        SolverArg::St => {
            let mut prm = TrParams::default();
            for kv in params {
                let (k, v) = split_param(kv)?;
                prm.set(k, v)?;
            }
            let (state, rec) = match &p {
                SuiteProblem::Smooth(sp) => st_minimize(sp.as_ref(), &prm)?,
                SuiteProblem::LeastSquares(lp) => st_minimize(&GaussNewton::new(lp.as_ref()), &prm)?,
            };
            print_record(&rec);
            out!("final status: {}, radius: {:.3e}", state.status, state.radius);
            if trace {
                out!("{}", serde_json::to_string_pretty(&state.trace)?);
            }
        }
    }
    Ok(())
}

const DEFAULT_PROFILES: [Metric; 4] = [Metric::Time, Metric::NevalF, Metric::NevalGrad, Metric::NevalHvp];

fn bench(suite: &str, solvers: &[String], out: &Path, seed: Option<u64>, budget: f64) -> Result<()> {
    let mut problems = suite_problems(&SuiteFilter::parse(suite))?;
    if let Some(s) = seed {
        problems = problems.into_iter().map(|p| p.perturbed(s)).collect();
    }
    let boxed: Vec<Box<dyn BenchSolver>> = solvers
        .iter()
        .map(|id| builtin_solver(id).ok_or_else(|| format!("unknown solver `{id}` (expected arcqk or st)")))
        .collect::<std::result::Result<_, _>>()?;
    let refs: Vec<&dyn BenchSolver> = boxed.iter().map(|b| b.as_ref()).collect();
    let records = run_matrix(&problems, &refs, budget);
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    write_records_csv(&records, &out.join("records.csv"))?;
    write_records_json(&records, &out.join("records.json"))?;
    for r in &records {
        print_record(r);
    }
    for metric in DEFAULT_PROFILES {
        let prof = performance_profile(&records, metric)?;
        write_curves_csv(&prof, &out.join(format!("profile_{metric}.csv")))?;
        write_curves_svg(&prof, &out.join(format!("profile_{metric}.svg")))?;
    }
    out!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn profile(input: &Path, metric: &str, out: &Path) -> Result<()> {
    let metric: Metric = metric.parse()?;
    let records = match input.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_records_csv(input)?,
        _ => read_records_json(input)?,
    };
    let prof = performance_profile(&records, metric)?;
    match out.extension().and_then(|e| e.to_str()) {
        Some("svg") => write_curves_svg(&prof, out)?,
        _ => write_curves_csv(&prof, out)?,
    }
    for c in &prof.curves {
        out!("{}: solved fraction {:.3}", c.solver, c.solved_fraction());
    }
    Ok(())
}

fn check(problem: &str, n: Option<usize>, seed: u64) -> Result<bool> {
    let p = problem_by_name(problem, n)?;
    let mut ok = true;
    for (i, x) in check_points(&p.x0(), 5, seed).iter().enumerate() {
        let label = if i == 0 { "x0".to_owned() } else { format!("perturbation {i}") };
        match &p {
            SuiteProblem::Smooth(sp) => {
                let r = check_derivatives(sp.as_ref(), x)?;
                out!(
                    "{label}: grad {:.2e} hvp {:.2e} linearity {:.2e} symmetry {:.2e}{}",
                    r.grad_error,
                    r.hvp_error,
                    r.linearity_error,
                    r.symmetry_error,
                    if r.failed { "  FAILED" } else { "" }
                );
                ok &= !r.failed;
            }
            SuiteProblem::LeastSquares(lp) => {
                let r = check_least_squares(lp.as_ref(), x)?;
                out!(
                    "{label}: grad {:.2e} jprod {:.2e} adjoint {:.2e}{}",
                    r.grad_error,
                    r.jprod_error,
                    r.adjoint_error,
                    if r.failed { "  FAILED" } else { "" }
                );
                ok &= !r.failed;
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { problem, n, solver, params, seed, trace } => {
            solve(&problem, n, solver, &params, seed, trace).map(|_| true)
        }
        Command::Bench { suite, solvers, out, seed, time_budget } => {
            bench(&suite, &solvers, &out, seed, time_budget).map(|_| true)
        }
        Command::Profile { input, metric, out } => profile(&input, &metric, &out).map(|_| true),
        Command::Check { problem, n, seed } => check(&problem, n, seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
