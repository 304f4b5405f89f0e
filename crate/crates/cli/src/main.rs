use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rbcbs_core::baselines::{DEFAULT_LAMBDA, DEFAULT_PRUNE_QUANTILE};
use rbcbs_core::generator::{generate, Difficulty, GeneratorConfig, DEFAULT_RADIUS};
use rbcbs_core::protocol::{
    calibrate_interval, delta_at, run_benchmark, solve_with, BenchConfig, CalibrationError, Method,
    MethodConfig, SuiteSpec, RISK_LEVELS,
};
use rbcbs_core::rbcbs::protocol_timeout;
use rbcbs_core::{AllocationStrategy, Instance, RiskInterval, Solution, SolveError};

const EXIT_NO_SOLUTION: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_BAD_INPUT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rbcbs",
    version,
    about = "Risk-bounded multi-agent path finding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance
    Gen(GenArgs),
    /// Print the feasible risk interval of an instance
    Calibrate(CalibrateArgs),
    /// Solve one instance with one method under one risk bound
    Solve(SolveArgs),
    /// Run the full protocol over a set of instances and write the trial CSV
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    vertices: usize,
    #[arg(long, default_value_t = 4)]
    agents: usize,
    #[arg(long, default_value_t = Difficulty::Medium)]
    difficulty: Difficulty,
    /// Agent radius
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    instance: PathBuf,
    /// Multiplier on the 60 s per agent allowance
    #[arg(long, default_value_t = 1.0)]
    timeout_scale: f64,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = Method::Rbcbs)]
    method: Method,
    #[arg(long, default_value_t = AllocationStrategy::Uniform)]
    alloc: AllocationStrategy,
    /// Risk multiplier of the lagrangian baseline
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Edge-risk quantile kept by the pruned baseline
    #[arg(long, default_value_t = DEFAULT_PRUNE_QUANTILE)]
    prune_quantile: f64,
    /// Position of the bound in the calibrated interval, in percent
    #[arg(long, value_parser = parse_level, default_value = "100")]
    risk_level: f64,
    /// Explicit global risk bound; skips calibration
    #[arg(long, conflicts_with = "risk_level")]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    timeout_scale: f64,
    /// Write the solution as JSON to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files; a synthetic suite is generated when none are given
    instances: Vec<PathBuf>,
    /// First seed of the generated suite
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of generated instances
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Vertex counts of the generated suite
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    min_agents: usize,
    #[arg(long, default_value_t = 6)]
    max_agents: usize,
    #[arg(long, default_value_t = Difficulty::Medium)]
    difficulty: Difficulty,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
    /// Methods to run (all by default)
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long, default_value_t = AllocationStrategy::Uniform)]
    alloc: AllocationStrategy,
    /// Risk multiplier of the lagrangian baseline
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Edge-risk quantile kept by the pruned baseline
    #[arg(long, default_value_t = DEFAULT_PRUNE_QUANTILE)]
    prune_quantile: f64,
    /// Risk levels in percent (0,25,50,75,100 by default)
    #[arg(long, value_delimiter = ',', value_parser = parse_level)]
    risk_level: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    timeout_scale: f64,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// Leave wall_ms empty so the CSV only depends on the inputs
    #[arg(long)]
    no_timing: bool,
    /// Trial CSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per (method, level) summary CSV
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn parse_level(s: &str) -> Result<f64, String> {
    let pct: f64 = s
        .trim_end_matches('%')
        .parse()
        .map_err(|_| format!("`{s}` is not a percentage"))?;
    if !(0.0..=100.0).contains(&pct) {
        return Err(format!("risk level {pct} is outside 0..100"));
    }
    Ok(pct / 100.0)
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn bad_input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_BAD_INPUT,
            message: message.into(),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::NoSolution(_) => EXIT_NO_SOLUTION,
            SolveError::Timeout(_) => EXIT_TIMEOUT,
            SolveError::InvalidRequest(_) => EXIT_BAD_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CalibrationError> for Failure {
    fn from(e: CalibrationError) -> Self {
        let CalibrationError::Solve { source, .. } = &e;
        Failure {
            message: e.to_string(),
            ..Failure::from(source.clone())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::bad_input(e.to_string())
    }
}

fn check_scale(scale: f64) -> Result<(), Failure> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Failure::bad_input(format!(
            "timeout scale must be positive, got {scale}"
        )))
    }
}

fn method_config(
    allocation: AllocationStrategy,
    lambda: f64,
    prune_quantile: f64,
) -> Result<MethodConfig, Failure> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Failure::bad_input(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if !(0.0..=1.0).contains(&prune_quantile) {
        return Err(Failure::bad_input(format!(
            "prune quantile must be in [0, 1], got {prune_quantile}"
        )));
    }
    Ok(MethodConfig {
        allocation,
        lambda,
        prune_quantile,
    })
}

fn load(path: &Path) -> Result<Instance, Failure> {
    Instance::load(path).map_err(|e| Failure::bad_input(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_gen(args: GenArgs) -> Result<(), Failure> {
    let mut cfg = GeneratorConfig::for_difficulty(args.vertices, args.agents, args.difficulty);
    cfg.radius = args.radius;
    let inst = generate(args.seed, &cfg).map_err(|e| Failure::bad_input(e.to_string()))?;
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "{}", inst.to_json())?;
    out.flush()?;
    Ok(())
}

fn interval_json(interval: &RiskInterval) -> String {
    serde_json::to_string(interval).expect("intervals always serialize")
}

fn run_calibrate(args: CalibrateArgs) -> Result<(), Failure> {
    check_scale(args.timeout_scale)?;
    let inst = load(&args.instance)?;
    let interval = calibrate_interval(
        &inst,
        protocol_timeout(inst.num_agents(), args.timeout_scale),
    )?;
    println!("{}", interval_json(&interval));
    Ok(())
}

fn print_solution(sol: &Solution, delta: f64) {
    for ((path, risk), budget) in sol.paths.iter().zip(&sol.risks).zip(&sol.budgets) {
        let vertices: Vec<String> = path.vertices.iter().map(|v| v.to_string()).collect();
        println!(
            "agent {}: steps {} risk {risk:.6} budget {budget:.6} path {}",
            path.agent,
            path.cost(),
            vertices.join(" ")
        );
    }
    println!(
        "total risk {:.6} of {delta:.6}, sum of costs {}, ct nodes {}, reallocations {}, {:.3}s",
        sol.total_risk,
        sol.sum_of_costs,
        sol.stats.expanded,
        sol.stats.reallocations,
        sol.stats.wall_time.as_secs_f64()
    );
}

fn solution_json(sol: &Solution, delta: f64) -> String {
    let agents: Vec<serde_json::Value> = sol
        .paths
        .iter()
        .zip(&sol.risks)
        .zip(&sol.budgets)
        .map(|((p, r), b)| serde_json::json!({"id": p.agent, "path": p.vertices, "risk": r, "budget": b}))
        .collect();
    let doc = serde_json::json!({
        "delta": delta,
        "total_risk": sol.total_risk,
        "sum_of_costs": sol.sum_of_costs,
        "agents": agents,
    });
    serde_json::to_string_pretty(&doc).expect("solutions always serialize")
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    check_scale(args.timeout_scale)?;
    let inst = load(&args.instance)?;
    let timeout = protocol_timeout(inst.num_agents(), args.timeout_scale);
    let delta = match args.delta {
        Some(d) => d,
        None => {
            let interval = calibrate_interval(&inst, timeout)?;
            println!(
                "interval [{:.6}, {:.6}], level {}%",
                interval.lower,
                interval.upper,
                args.risk_level * 100.0
            );
            delta_at(&interval, args.risk_level)
        }
    };
    let config = method_config(args.alloc, args.lambda, args.prune_quantile)?;
    let sol = solve_with(args.method, &inst, delta, timeout, &config)?;
    print_solution(&sol, delta);
    if let Some(path) = &args.out {
        std::fs::write(path, solution_json(&sol, delta) + "\n")?;
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<(), Failure> {
    check_scale(args.timeout_scale)?;
    let instances = if args.instances.is_empty() {
        if args.sizes.is_empty() || args.min_agents == 0 || args.min_agents > args.max_agents {
            return Err(Failure::bad_input(
                "suite needs sizes and 1 <= min-agents <= max-agents",
            ));
        }
        let suite = SuiteSpec {
            seeds: (args.seed..args.seed + args.count as u64).collect(),
            sizes: args.sizes,
            min_agents: args.min_agents,
            max_agents: args.max_agents,
            difficulty: args.difficulty,
            radius: args.radius,
        };
        suite
            .generate()
            .map_err(|e| Failure::bad_input(e.to_string()))?
    } else {
        args.instances
            .iter()
            .map(|p| load(p))
            .collect::<Result<_, _>>()?
    };
    let config = BenchConfig {
        methods: if args.method.is_empty() {
            Method::ALL.to_vec()
        } else {
            args.method
        },
        levels: if args.risk_level.is_empty() {
            RISK_LEVELS.to_vec()
        } else {
            args.risk_level
        },
        method_config: method_config(args.alloc, args.lambda, args.prune_quantile)?,
        timeout_scale: args.timeout_scale,
        threads: args.threads,
        timing: !args.no_timing,
    };
    let report = run_benchmark(&instances, &config);
    let csv_err = |e: Box<dyn std::error::Error>| Failure::bad_input(e.to_string());
    report
        .write_csv(output(args.out.as_deref())?)
        .map_err(|e| csv_err(e.into()))?;
    if let Some(path) = &args.summary {
        report
            .write_summary_csv(File::create(path)?)
            .map_err(|e| csv_err(e.into()))?;
    }
    eprint!("{}", report.table());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_BAD_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Solve(a) => run_solve(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("rbcbs: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
