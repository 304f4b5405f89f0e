//! Evaluation protocol: calibrating the feasible risk interval of an
//! instance, running every method at fixed fractions of that interval and
//! aggregating the outcomes.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    edge_risk_quantile, solve_fixed_budget, LagrangianPlanner, ParetoPlanner, PrunedPlanner,
    DEFAULT_LAMBDA, DEFAULT_PRUNE_QUANTILE,
};
use crate::generator::{generate, Difficulty, GenerateError, GeneratorConfig};
use crate::instance::Instance;
use crate::rbcbs::{
    protocol_timeout, search, solve, AllocationStrategy, BudgetPolicy, CbsOptions, Objective,
    RiskBoundedPlanner, Solution, SolveError, SolveRequest,
};

/// The five fractions of the feasible interval every method is run at.
pub const RISK_LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Column header of the trial CSV.
pub const CSV_HEADER: [&str; 9] = [
    "instance",
    "method",
    "level",
    "success",
    "total_risk",
    "avg_steps",
    "wall_ms",
    "ct_nodes",
    "reallocs",
];

/// `[lower, upper]`: total risk of the risk-minimising and of the
/// length-minimising conflict-free solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskInterval {
    pub lower: f64,
    pub upper: f64,
}

/// Global bound at fraction `p` of the interval.
pub fn delta_at(interval: &RiskInterval, p: f64) -> f64 {
    interval.lower + p * (interval.upper - interval.lower)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("{objective} calibration solve failed: {source}")]
    Solve {
        objective: &'static str,
        #[source]
        source: SolveError,
    },
}

/// Weight on total risk in the risk-minimising calibration solve.
pub const CALIBRATION_LAMBDA: f64 = 10.0;

/// Solves `instance` twice with plain CBS (no risk bound): once minimising
/// sum of costs and once minimising `J + λ·Σρ` with a large `λ`, which
/// favours low risk and uses length as the tie-break.
pub fn calibrate_interval(
    instance: &Instance,
    timeout: Duration,
) -> Result<RiskInterval, CalibrationError> {
    calibrate_with(instance, timeout, CALIBRATION_LAMBDA)
}

/// [`calibrate_interval`] with an explicit risk weight.
pub fn calibrate_with(
    instance: &Instance,
    timeout: Duration,
    lambda: f64,
) -> Result<RiskInterval, CalibrationError> {
    let g = &instance.graph;
    let tasks = &instance.tasks;
    let mut opts = CbsOptions::new(BudgetPolicy::FixedUniform, instance.radius, timeout);
    let upper = search(g, tasks, f64::INFINITY, &RiskBoundedPlanner, &opts)
        .map_err(|source| CalibrationError::Solve {
            objective: "length",
            source,
        })?
        .total_risk;
    opts.objective = Objective::Weighted { lambda };
    let lower = search(
        g,
        tasks,
        f64::INFINITY,
        &LagrangianPlanner { lambda },
        &opts,
    )
    .map_err(|source| CalibrationError::Solve {
        objective: "risk",
        source,
    })?
    .total_risk;
    Ok(RiskInterval {
        lower: lower.min(upper),
        upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rbcbs,
    Lagrangian,
    Pareto,
    Pruned,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Rbcbs,
        Method::Lagrangian,
        Method::Pareto,
        Method::Pruned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rbcbs => "rbcbs",
            Method::Lagrangian => "lagrangian",
            Method::Pareto => "pareto",
            Method::Pruned => "pruned",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown method `{s}` (expected rbcbs, lagrangian, pareto or pruned)")
            })
    }
}

/// Per-method knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodConfig {
    pub allocation: AllocationStrategy,
    /// Risk multiplier of the Lagrangian baseline.
    pub lambda: f64,
    /// Edge-risk quantile kept by the pruned-graph baseline.
    pub prune_quantile: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            allocation: AllocationStrategy::Uniform,
            lambda: DEFAULT_LAMBDA,
            prune_quantile: DEFAULT_PRUNE_QUANTILE,
        }
    }
}

/// Solves `instance` under global bound `delta` with `method`.
pub fn solve_with(
    method: Method,
    instance: &Instance,
    delta: f64,
    timeout: Duration,
    config: &MethodConfig,
) -> Result<Solution, SolveError> {
    let mut request = SolveRequest::new(
        &instance.graph,
        instance.tasks.clone(),
        delta,
        instance.radius,
    );
    request.timeout = timeout;
    request.allocation = config.allocation;
    match method {
        Method::Rbcbs => solve(&request),
        Method::Lagrangian => solve_fixed_budget(
            &request,
            &LagrangianPlanner {
                lambda: config.lambda,
            },
        ),
        Method::Pareto => solve_fixed_budget(&request, &ParetoPlanner),
        Method::Pruned => {
            let threshold = edge_risk_quantile(&instance.graph, config.prune_quantile);
            solve_fixed_budget(&request, &PrunedPlanner { threshold })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Solved,
    NoSolution,
    Timeout,
    /// The instance could not be calibrated, so no bound was available.
    Uncalibrated,
}

/// One (instance, method, level) run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub instance: String,
    pub method: Method,
    /// Fraction of the feasible interval.
    pub level: f64,
    pub delta: Option<f64>,
    pub outcome: Outcome,
    /// `Σρ` of the solution.
    pub total_risk: Option<f64>,
    /// Mean arrival time of the solution.
    pub avg_steps: Option<f64>,
    pub wall_time: Duration,
    pub ct_nodes: u64,
    pub reallocs: u64,
}

impl TrialRecord {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Solved
    }
}

/// Generated instance set.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub seeds: Vec<u64>,
    /// Vertex counts, cycled through by seed index.
    pub sizes: Vec<usize>,
    pub min_agents: usize,
    pub max_agents: usize,
    pub difficulty: Difficulty,
    pub radius: f64,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec {
            seeds: (0..50).collect(),
            sizes: vec![5, 10, 20, 40],
            min_agents: 2,
            max_agents: 6,
            difficulty: Difficulty::Medium,
            radius: crate::generator::DEFAULT_RADIUS,
        }
    }
}

impl SuiteSpec {
    /// Generator configuration for the `i`-th seed. Agent counts cycle
    /// through `min_agents..=max_agents`, capped at half the vertices.
    pub fn config(&self, i: usize) -> GeneratorConfig {
        let n = self.sizes[i % self.sizes.len()];
        let span = self.max_agents.saturating_sub(self.min_agents) + 1;
        let agents = (self.min_agents + i % span).min((n / 2).max(1));
        let mut cfg = GeneratorConfig::for_difficulty(n, agents, self.difficulty);
        cfg.radius = self.radius;
        cfg
    }

    pub fn generate(&self) -> Result<Vec<Instance>, GenerateError> {
        self.seeds
            .iter()
            .enumerate()
            .map(|(i, &seed)| generate(seed, &self.config(i)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub levels: Vec<f64>,
    pub method_config: MethodConfig,
    /// Multiplier on the `60 · N` second allowance.
    pub timeout_scale: f64,
    /// Worker threads; `None` lets the pool decide.
    pub threads: Option<usize>,
    /// Whether `wall_ms` is written to the CSV; leaving it out makes the
    /// file a pure function of the inputs.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            methods: Method::ALL.to_vec(),
            levels: RISK_LEVELS.to_vec(),
            method_config: MethodConfig::default(),
            timeout_scale: 1.0,
            threads: None,
            timing: true,
        }
    }
}

/// Mean and sample standard deviation over successful trials of one
/// (method, level) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub level: f64,
    pub trials: usize,
    pub successes: usize,
    pub risk_mean: f64,
    pub risk_std: f64,
    pub steps_mean: f64,
    pub steps_std: f64,
}

impl Aggregate {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub intervals: Vec<(String, Option<RiskInterval>)>,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
    pub timing: bool,
}

fn instance_id(instance: &Instance, index: usize) -> String {
    instance
        .name
        .clone()
        .unwrap_or_else(|| format!("instance-{index}"))
}

fn run_trial(
    instance: &Instance,
    id: &str,
    interval: Option<RiskInterval>,
    method: Method,
    level: f64,
    config: &BenchConfig,
) -> TrialRecord {
    let mut rec = TrialRecord {
        instance: id.to_string(),
        method,
        level,
        delta: None,
        outcome: Outcome::Uncalibrated,
        total_risk: None,
        avg_steps: None,
        wall_time: Duration::ZERO,
        ct_nodes: 0,
        reallocs: 0,
    };
    let Some(interval) = interval else {
        return rec;
    };
    let delta = delta_at(&interval, level);
    rec.delta = Some(delta);
    let timeout = protocol_timeout(instance.num_agents(), config.timeout_scale);
    let result = solve_with(method, instance, delta, timeout, &config.method_config);
    let stats = match &result {
        Ok(sol) => Some(&sol.stats),
        Err(e) => e.stats(),
    };
    if let Some(s) = stats {
        rec.wall_time = s.wall_time;
        rec.ct_nodes = s.expanded;
        rec.reallocs = s.reallocations;
    }
    match result {
        Ok(sol) => {
            rec.outcome = Outcome::Solved;
            rec.total_risk = Some(sol.total_risk);
            rec.avg_steps = Some(sol.average_steps());
        }
        Err(SolveError::Timeout(_)) => rec.outcome = Outcome::Timeout,
        Err(_) => rec.outcome = Outcome::NoSolution,
    }
    rec
}

/// Calibrates every instance, then runs each (instance, method, level)
/// trial on a bounded worker pool. Records come back in input order:
/// instance, then method, then level.
pub fn run_benchmark(instances: &[Instance], config: &BenchConfig) -> BenchReport {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().expect("worker pool");
    pool.install(|| {
        let ids: Vec<String> = instances
            .iter()
            .enumerate()
            .map(|(i, x)| instance_id(x, i))
            .collect();
        let intervals: Vec<Option<RiskInterval>> = instances
            .par_iter()
            .map(|inst| {
                calibrate_interval(
                    inst,
                    protocol_timeout(inst.num_agents(), config.timeout_scale),
                )
                .ok()
            })
            .collect();

        let mut jobs = Vec::new();
        for i in 0..instances.len() {
            for &m in &config.methods {
                for &p in &config.levels {
                    jobs.push((i, m, p));
                }
            }
        }
        let records: Vec<TrialRecord> = jobs
            .par_iter()
            .map(|&(i, m, p)| run_trial(&instances[i], &ids[i], intervals[i], m, p, config))
            .collect();
        let aggregates = aggregate(&records, &config.methods, &config.levels);
        BenchReport {
            intervals: ids.into_iter().zip(intervals).collect(),
            records,
            aggregates,
            timing: config.timing,
        }
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per (method, level) aggregates in the given method and level order.
pub fn aggregate(records: &[TrialRecord], methods: &[Method], levels: &[f64]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &method in methods {
        for &level in levels {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.method == method && r.level == level)
                .collect();
            let ok: Vec<&TrialRecord> = cell.iter().copied().filter(|r| r.success()).collect();
            let risks: Vec<f64> = ok.iter().filter_map(|r| r.total_risk).collect();
            let steps: Vec<f64> = ok.iter().filter_map(|r| r.avg_steps).collect();
            let (risk_mean, risk_std) = mean_std(&risks);
            let (steps_mean, steps_std) = mean_std(&steps);
            out.push(Aggregate {
                method,
                level,
                trials: cell.len(),
                successes: ok.len(),
                risk_mean,
                risk_std,
                steps_mean,
                steps_std,
            });
        }
    }
    out
}

fn level_label(level: f64) -> String {
    format!("{}", (level * 100.0).round() as i64)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl BenchReport {
    /// Trial CSV with the columns of [`CSV_HEADER`]. `level` is a
    /// percentage; `total_risk` and `avg_steps` are empty for failures and
    /// `wall_ms` is empty when timing is off.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            let wall = if self.timing {
                format!("{:.3}", r.wall_time.as_secs_f64() * 1e3)
            } else {
                String::new()
            };
            w.write_record([
                r.instance.clone(),
                r.method.to_string(),
                level_label(r.level),
                (r.success() as u8).to_string(),
                opt(r.total_risk),
                opt(r.avg_steps),
                wall,
                r.ct_nodes.to_string(),
                r.reallocs.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aggregate CSV: method, level, trials, successes, success_rate,
    /// risk_mean, risk_std, steps_mean, steps_std.
    pub fn write_summary_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "method",
            "level",
            "trials",
            "successes",
            "success_rate",
            "risk_mean",
            "risk_std",
            "steps_mean",
            "steps_std",
        ])?;
        let num = |x: f64| {
            if x.is_nan() {
                String::new()
            } else {
                x.to_string()
            }
        };
        for a in &self.aggregates {
            w.write_record([
                a.method.to_string(),
                level_label(a.level),
                a.trials.to_string(),
                a.successes.to_string(),
                a.success_rate().to_string(),
                num(a.risk_mean),
                num(a.risk_std),
                num(a.steps_mean),
                num(a.steps_std),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Text table with one row per method and one column per level; cells
    /// read `risk ± std (success%) / steps ± std`.
    pub fn table(&self) -> String {
        let mut levels: Vec<f64> = Vec::new();
        let mut methods: Vec<Method> = Vec::new();
        for a in &self.aggregates {
            if !levels.contains(&a.level) {
                levels.push(a.level);
            }
            if !methods.contains(&a.method) {
                methods.push(a.method);
            }
        }
        let mut s = format!("{:<12}", "method");
        for l in &levels {
            s += &format!(" | {:^32}", format!("{}%", level_label(*l)));
        }
        s.push('\n');
        for m in methods {
            s += &format!("{:<12}", m.name());
            for l in &levels {
                let a = self
                    .aggregates
                    .iter()
                    .find(|a| a.method == m && a.level == *l)
                    .unwrap();
                let cell = if a.successes == 0 {
                    format!("- ({:.0}%)", 100.0 * a.success_rate())
                } else {
                    format!(
                        "{:.2}±{:.2} ({:.0}%) / {:.2}±{:.2}",
                        a.risk_mean,
                        a.risk_std,
                        100.0 * a.success_rate(),
                        a.steps_mean,
                        a.steps_std
                    )
                };
                s += &format!(" | {cell:^32}");
            }
            s.push('\n');
        }
        s
    }
}
