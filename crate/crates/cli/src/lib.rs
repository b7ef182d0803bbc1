//! `aos-bench`: run single solves, regenerate the iteration-count tables, and
//! self-check the stepsize invariants.
//!
//! Exit codes: 0 on success, 1 when a non-baseline method fails numerically (or a
//! `verify` check fails), 2 on usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use aos_core::bench::{self, emit, preset, BenchmarkReport, BenchmarkSpec, Execution, Format, Preset, PresetOptions, Row};
use aos_core::directions::{B0Convention, BetaVariant, DirectionRule};
use aos_core::quadmodel::{generate, ProblemSpec, DEFAULT_CONDITION_TARGET, DEFAULT_P2_OFFSET};
use aos_core::solver::{run, MethodConfig, SolverConfig, SolverReport, Status};
use aos_core::stepsize::{Fallback, StepsizeKind, StepsizeRule};
use aos_core::verify::{run_all, VerifyOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "aos-bench", version, about = "Approximately optimal stepsize benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem with one method.
    Run(RunArgs),
    /// Regenerate one of the iteration-count tables.
    Preset(PresetArgs),
    /// Run the randomized invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProblemArg {
    P1,
    P2,
    P3,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum MethodArg {
    GmAos,
    CgAos,
    BfgsAos,
    Bb1,
    Bb2,
    #[value(name = "bfgs_1", alias = "bfgs1")]
    Bfgs1,
    Gm,
    Cg,
    Qn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BetaArg {
    Fr,
    Hs,
    Prp,
    Dy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StepsizeArg {
    Aos,
    Bb1,
    Bb2,
    Exact,
    Unit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FallbackArg {
    Exact,
    Unit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Hessian,
    Inverse,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Md,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Md => Format::Md,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Table1,
    Table2,
    Table3,
    Table4,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Table1 => Preset::Table1,
            PresetArg::Table2 => Preset::Table2,
            PresetArg::Table3 => Preset::Table3,
            PresetArg::Table4 => Preset::Table4,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Gradient tolerance (infinity norm).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "p1")]
    problem: ProblemArg,
    /// Problem dimension (ignored for file problems).
    #[arg(long, required_unless_present = "matrix")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Condition number of P3 instances.
    #[arg(long, default_value_t = DEFAULT_CONDITION_TARGET)]
    condition: f64,
    /// Offset in D = 100 (U - offset) for P2 instances.
    #[arg(long, default_value_t = DEFAULT_P2_OFFSET, allow_negative_numbers = true)]
    p2_offset: f64,
    /// MatrixMarket symmetric coordinate file (with --problem file).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Right-hand side, one value per line (with --problem file).
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cg_aos")]
    method: MethodArg,
    #[arg(long, value_enum)]
    beta: Option<BetaArg>,
    /// Broyden parameter: 0 is BFGS, 1 is DFP.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    b0_scale: Option<f64>,
    /// Whether --b0-scale sets B_0 or its inverse.
    #[arg(long, value_enum)]
    b0_convention: Option<ConventionArg>,
    #[arg(long, value_enum)]
    stepsize: Option<StepsizeArg>,
    #[arg(long, value_enum)]
    fallback: Option<FallbackArg>,
    #[command(flatten)]
    solve: SolveArgs,
    /// Print the per-iteration trace.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct PresetArgs {
    #[arg(value_enum)]
    name: PresetArg,
    /// Seeds per seeded problem.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// First seed for seeded problems.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of dimensions.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[command(flatten)]
    solve: SolveArgs,
    /// Run cells one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "md")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

/// A failure to report, with its exit code.
struct Exit(i32, String);

impl From<aos_core::Error> for Exit {
    fn from(e: aos_core::Error) -> Self {
        let code = match e {
            aos_core::Error::InvalidConfig(_) | aos_core::Error::DimensionMismatch { .. } => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Exit(code, format!("error: {e}"))
    }
}

fn usage(msg: impl Into<String>) -> Exit {
    Exit(EXIT_USAGE, format!("error: {}", msg.into()))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Preset(args) => cmd_preset(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            eprintln!("{msg}");
            code
        }
    }
}

fn solver_config(args: &SolveArgs) -> SolverConfig {
    SolverConfig::default().with_tol(args.tol).with_max_iter(args.max_iter)
}

fn problem_spec(args: &RunArgs) -> Result<ProblemSpec, Exit> {
    let n = args.n.unwrap_or(0);
    let spec = match args.problem {
        ProblemArg::P1 => ProblemSpec::p1(n),
        ProblemArg::P2 => ProblemSpec::p2(n, args.seed).with_p2_offset(args.p2_offset),
        ProblemArg::P3 => ProblemSpec::p3(n, args.seed).with_condition_target(args.condition),
        ProblemArg::File => match (&args.matrix, &args.rhs) {
            (Some(m), Some(r)) => ProblemSpec::file(m, r),
            _ => return Err(usage("--problem file needs --matrix and --rhs")),
        },
    };
    if !matches!(args.problem, ProblemArg::File) && (args.matrix.is_some() || args.rhs.is_some()) {
        return Err(usage("--matrix/--rhs only apply to --problem file"));
    }
    Ok(spec)
}

fn method_config(args: &RunArgs) -> Result<MethodConfig, Exit> {
    let mut method = match args.method {
        MethodArg::GmAos => MethodConfig::gm_aos(),
        MethodArg::CgAos => MethodConfig::cg_aos(),
        MethodArg::BfgsAos => MethodConfig::bfgs_aos(1.0),
        MethodArg::Bb1 => MethodConfig::bb1(),
        MethodArg::Bb2 => MethodConfig::bb2(),
        MethodArg::Bfgs1 => MethodConfig::bfgs_1(1.0),
        MethodArg::Gm => MethodConfig::new("GM", DirectionRule::Steepest, StepsizeRule::new(StepsizeKind::Aos)),
        MethodArg::Cg => MethodConfig::new("CG", DirectionRule::cg(BetaVariant::Dy), StepsizeRule::new(StepsizeKind::Aos)),
        MethodArg::Qn => MethodConfig::new("QN", DirectionRule::bfgs(1.0), StepsizeRule::new(StepsizeKind::Aos)),
    };
    let mut custom = matches!(args.method, MethodArg::Gm | MethodArg::Cg | MethodArg::Qn);

    if let Some(beta) = args.beta {
        let DirectionRule::ConjugateGradient { beta: b } = &mut method.direction else {
            return Err(usage("--beta only applies to conjugate-gradient methods"));
        };
        *b = match beta {
            BetaArg::Fr => BetaVariant::Fr,
            BetaArg::Hs => BetaVariant::Hs,
            BetaArg::Prp => BetaVariant::Prp,
            BetaArg::Dy => BetaVariant::Dy,
        };
        custom |= !matches!(beta, BetaArg::Dy);
    }
    let qn_flags = args.theta.is_some() || args.b0_scale.is_some() || args.b0_convention.is_some();
    if qn_flags {
        let DirectionRule::QuasiNewton {
            theta,
            b0_scale,
            b0_convention,
        } = &mut method.direction
        else {
            return Err(usage("--theta/--b0-scale/--b0-convention only apply to quasi-Newton methods"));
        };
        if let Some(t) = args.theta {
            custom |= t != 0.0;
            *theta = t;
        }
        if let Some(s) = args.b0_scale {
            *b0_scale = s;
        }
        if let Some(c) = args.b0_convention {
            *b0_convention = match c {
                ConventionArg::Hessian => B0Convention::Hessian,
                ConventionArg::Inverse => B0Convention::Inverse,
            };
        }
    }
    if let Some(step) = args.stepsize {
        method.stepsize.kind = match step {
            StepsizeArg::Aos => StepsizeKind::Aos,
            StepsizeArg::Bb1 => StepsizeKind::Bb1,
            StepsizeArg::Bb2 => StepsizeKind::Bb2,
            StepsizeArg::Exact => StepsizeKind::Exact,
            StepsizeArg::Unit => StepsizeKind::Unit,
        };
        custom = true;
    }
    if let Some(fb) = args.fallback {
        method.stepsize.fallback = match fb {
            FallbackArg::Exact => Fallback::Exact,
            FallbackArg::Unit => Fallback::Unit,
        };
    }
    if custom {
        method.label = custom_label(&method);
    }
    method.validate()?;
    Ok(method)
}

fn custom_label(method: &MethodConfig) -> String {
    let dir = match method.direction {
        DirectionRule::Steepest => "GM".to_string(),
        DirectionRule::ConjugateGradient { beta } => format!("CG-{beta}"),
        DirectionRule::QuasiNewton { theta: 0.0, .. } => "BFGS".to_string(),
        DirectionRule::QuasiNewton { theta: 1.0, .. } => "DFP".to_string(),
        DirectionRule::QuasiNewton { theta, .. } => format!("BROYDEN({theta})"),
    };
    format!("{dir}_{}", method.stepsize.kind)
}

fn write_output(bytes: &[u8], out: Option<&PathBuf>) -> Result<(), Exit> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Exit(EXIT_FAILURE, format!("error: cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .map_err(|e| Exit(EXIT_FAILURE, format!("error: {e}")))
        }
    }
}

fn format_trace(report: &SolverReport) -> String {
    let mut out = String::from("k,f,grad_inf,alpha,rule,restart\n");
    for r in report.trace.iter().flatten() {
        let _ = writeln!(
            out,
            "{},{:e},{},{:e},{},{}",
            r.k,
            r.f,
            bench::fmt_sci(r.grad_inf),
            r.alpha,
            r.rule,
            u8::from(r.restarted)
        );
    }
    out
}

fn summary_line(row: &Row, report: &SolverReport) -> String {
    let mut line = format!(
        "{} n={} {}: {} after {} iterations (|g|inf={}, f={:e}, restarts={}, skips={}, fallbacks={})",
        row.problem,
        row.n,
        row.method_key(),
        row.status,
        row.iterations,
        bench::fmt_sci(row.grad_inf),
        report.final_objective,
        row.restarts,
        row.skips,
        row.fallbacks
    );
    if let Some(f) = &report.failure {
        let _ = write!(line, " [failure at k={}: {}]", f.iteration, f.reason);
    }
    line
}

fn cmd_run(args: RunArgs) -> Result<i32, Exit> {
    let spec = problem_spec(&args)?;
    let method = method_config(&args)?;
    let mut cfg = solver_config(&args.solve);
    cfg.record_trace = args.trace;

    let problem = generate(&spec)?;
    let started = std::time::Instant::now();
    let report = run(&problem, &method, &cfg)?;
    let ms = started.elapsed().as_secs_f64() * 1e3;

    let spec = ProblemSpec { dim: problem.dim(), ..spec };
    let row = Row::new(&spec, problem.dim(), &method, &report, ms);
    if args.trace {
        write_output(format_trace(&report).as_bytes(), None)?;
    }
    println!("{}", summary_line(&row, &report));

    if let Some(out) = &args.out {
        let mut bench_spec = BenchmarkSpec::new("run", vec![spec], vec![method.clone()]);
        bench_spec.cfg = SolverConfig { record_trace: false, ..cfg };
        let full = BenchmarkReport::new(&bench_spec, vec![row], Execution::Sequential);
        write_output(&emit(&full, args.format.into()), Some(out))?;
    }
    Ok(if report.status == Status::NumericFailure && !method.baseline {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn cmd_preset(args: PresetArgs) -> Result<i32, Exit> {
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let opts = PresetOptions {
        repeats: args.repeats,
        base_seed: args.seed,
        dims: args.dims.clone(),
    };
    let mut spec = preset(args.name.into(), &opts);
    spec.cfg = solver_config(&args.solve);
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::from_env()
    };
    let report = bench::run_suite(&spec, exec)?;
    write_output(&emit(&report, args.format.into()), args.out.as_ref())?;
    Ok(if report.has_unexpected_failure() {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Exit> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let outcomes = run_all(&VerifyOptions {
        seed: args.seed,
        trials: args.trials,
    });
    let mut all = true;
    for o in &outcomes {
        all &= o.passed();
        println!(
            "{} {} ({} trials, worst {:e}, tol {:e}){}",
            if o.passed() { "PASS" } else { "FAIL" },
            o.name,
            o.trials,
            o.worst,
            o.tolerance,
            o.first_failure.as_deref().map(|m| format!(": {m}")).unwrap_or_default()
        );
    }
    Ok(if all { EXIT_OK } else { EXIT_FAILURE })
}
