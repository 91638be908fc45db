//! `drqcp`: solve, generate and benchmark quadratic cone programs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drqcp::bench::{self, BenchConfig, BenchOutput};
use drqcp::probgen::{self, GenSpec, Kind};
use drqcp::problem::io;
use drqcp::trace::write_trace_csv;
use drqcp::{Engine, LinSys, Settings, SolveResult, Status};

#[derive(Parser)]
#[command(name = "drqcp", version, about = "Douglas-Rachford QCP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem file and write its result JSON.
    Solve(SolveArgs),
    /// Generate seeded random instances.
    Gen(GenArgs),
    /// Run both engines over generated instances and write CSV reports.
    Bench(BenchArgs),
    /// Recompute the summary and histogram CSVs from a records CSV.
    Summarize(SummarizeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Homogeneous,
    Direct,
}

impl From<Algorithm> for Engine {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Homogeneous => Engine::Homogeneous,
            Algorithm::Direct => Engine::Direct,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LinSysArg {
    Direct,
    Indirect,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Feasible,
    Infeasible,
    Unbounded,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Feasible => Kind::Feasible,
            KindArg::Infeasible => Kind::Infeasible,
            KindArg::Unbounded => Kind::Unbounded,
        }
    }
}

/// Solver flags shared by `solve` and `bench`; unset flags keep each
/// command's own defaults.
#[derive(Args)]
struct SolverFlags {
    #[arg(long, value_enum)]
    linsys: Option<LinSysArg>,
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    eps_infeas: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    #[arg(long)]
    check_interval: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, mut s: Settings) -> Settings {
        if let Some(l) = self.linsys {
            s.linsys = match l {
                LinSysArg::Direct => LinSys::Direct,
                LinSysArg::Indirect => LinSys::Indirect,
            };
        }
        s.eps_abs = self.eps_abs.unwrap_or(s.eps_abs);
        s.eps_rel = self.eps_rel.unwrap_or(s.eps_rel);
        s.eps_infeas = self.eps_infeas.unwrap_or(s.eps_infeas);
        s.max_iters = self.max_iters.unwrap_or(s.max_iters);
        s.time_limit_s = self.time_limit_s.unwrap_or(s.time_limit_s);
        s.check_interval = self.check_interval.unwrap_or(s.check_interval);
        s
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON file.
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "homogeneous")]
    algorithm: Algorithm,
    #[command(flatten)]
    solver: SolverFlags,
    /// Result JSON path [default: the problem path with a `.result.json` suffix].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-check trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// First seed; instance `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = GenSpec::DEFAULT_DENSITY)]
    density: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Restrict to one kind [default: all three].
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 75)]
    m: usize,
    /// Instances per kind.
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = GenSpec::DEFAULT_DENSITY)]
    density: f64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Directory for per-instance trace CSVs.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for records.csv, summary.csv and histogram.csv.
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    /// records.csv written by `bench`.
    records: PathBuf,
    /// Directory for summary.csv and histogram.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Summarize(args) => cmd_summarize(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type CmdResult = Result<u8, Box<dyn std::error::Error>>;

/// Prefixes an error with the file it concerns.
fn at(path: &Path) -> impl Fn(drqcp::Error) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

fn exit_code(status: Status) -> u8 {
    if status.is_success() {
        0
    } else {
        2
    }
}

fn default_result_path(problem: &Path) -> PathBuf {
    let stem = problem.file_stem().unwrap_or_default().to_string_lossy();
    problem.with_file_name(format!("{stem}.result.json"))
}

fn summary_line(result: &SolveResult, objective: Option<f64>) -> String {
    let mut line = format!(
        "status={} iterations={} primal={:.3e} dual={:.3e} gap={:.3e}",
        result.status,
        result.iterations,
        result.residuals.primal,
        result.residuals.dual,
        result.residuals.gap
    );
    if let Some(obj) = objective {
        line.push_str(&format!(" objective={obj:.9e}"));
    }
    if let Some(cert) = &result.certificate {
        line.push_str(&format!(" certificate_residual={:.3e}", cert.residual));
    }
    if result.stalled {
        line.push_str(" stalled");
    }
    line.push_str(&format!(" time={:.3}s", result.solve_time_s));
    line
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let problem = io::read_problem(&args.problem).map_err(at(&args.problem))?;
    let mut settings = args.solver.apply(Settings::default());
    settings.trace = args.trace.is_some();
    let result = drqcp::solve_with(args.algorithm.into(), &problem, &settings)?;
    let out = args.out.unwrap_or_else(|| default_result_path(&args.problem));
    io::write_result(&result, &out).map_err(at(&out))?;
    if let Some(path) = &args.trace {
        write_trace_csv(path, &result.trace).map_err(at(path))?;
    }
    println!("{}", summary_line(&result, result.objective(&problem)));
    Ok(exit_code(result.status))
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    std::fs::create_dir_all(&args.out)?;
    for i in 0..args.count {
        let spec = GenSpec {
            density: args.density,
            ..GenSpec::new(args.kind.into(), args.n, args.m, args.seed + i)
        };
        let problem = probgen::generate(&spec)?.problem;
        let path = args.out.join(spec.file_name());
        io::write_problem(&problem, &path)?;
        println!("{}", path.display());
    }
    Ok(0)
}

fn print_summaries(output: &BenchOutput) {
    for s in &output.summaries {
        println!(
            "{}: instances={} pairs={} geomean_ratio={:.3} homogeneous_faster={}/{} failures homogeneous={} direct={}",
            s.kind,
            s.instances,
            s.pairs,
            s.geomean_ratio,
            s.homogeneous_faster,
            s.instances,
            s.failures_homogeneous,
            s.failures_direct
        );
    }
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let kinds = match args.kind {
        Some(k) => vec![k.into()],
        None => Kind::ALL.to_vec(),
    };
    let mut config = BenchConfig::new(kinds, args.n, args.m, args.count, args.seed);
    config.density = args.density;
    config.settings = args.solver.apply(config.settings);
    if let Some(dir) = &args.trace {
        std::fs::create_dir_all(dir)?;
        config.trace_dir = Some(dir.clone());
    }
    let output = bench::run_bench(&config)?;
    bench::write_outputs(&args.out, &output)?;
    print_summaries(&output);
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_summarize(args: SummarizeArgs) -> CmdResult {
    let records = bench::read_records_csv(&args.records).map_err(at(&args.records))?;
    let (summaries, histogram) = bench::summarize(&records)?;
    std::fs::create_dir_all(&args.out)?;
    bench::write_summary_csv(args.out.join("summary.csv"), &summaries)?;
    bench::write_histogram_csv(args.out.join("histogram.csv"), &histogram)?;
    print_summaries(&BenchOutput {
        records,
        summaries,
        histogram,
    });
    Ok(0)
}
