//! Constraint-tree search shared by RB-CBS, the baselines and calibration.

use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::collision::{detect_collisions, CollisionConfig, Conflict};
use crate::graph::{AgentTask, TimedPath, WaypointGraph};
use crate::lowlevel::{
    default_horizon, min_feasible_risk, warm_start, AgentConstraints, Constraint, LowLevelError,
    Plan, SearchContext, SearchRecord, SearchSeed,
};

use super::allocation::{initial_allocation, AllocationStrategy};
use super::frontier::{Frontier, NodeKey};
use super::realloc::reallocate;
use super::split::disjoint_split;
use super::{Solution, SolveError, SolveStats};

const RISK_TOL: f64 = 1e-9;

/// Single-agent planner plugged into the constraint tree.
pub trait AgentPlanner {
    /// A path admissible under `ctx` with risk at most `budget`.
    fn plan(
        &self,
        ctx: SearchContext<'_>,
        budget: f64,
        seed: &SearchSeed,
    ) -> Result<Plan, LowLevelError>;

    /// Edges riskier than this are invisible to the planner.
    fn max_edge_risk(&self) -> f64 {
        f64::INFINITY
    }
}

/// What the high-level search orders nodes by.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Objective {
    /// Sum of costs, then collisions, then budget churn.
    #[default]
    Length,
    /// Total risk, then sum of costs. Waiting is free, so a tree ordered
    /// this way need not terminate when the least-risk level is blocked.
    Risk,
    /// `J + λ·Σρ`, then total risk.
    Weighted { lambda: f64 },
}

/// How per-agent budgets are managed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BudgetPolicy {
    /// Root paths ignore risk, budgets start from `strategy` and move
    /// between agents whenever a replan fails.
    Reallocating(AllocationStrategy),
    /// Every agent keeps `Δ / N` for the whole search.
    FixedUniform,
}

#[derive(Debug, Clone)]
pub struct CbsOptions {
    pub objective: Objective,
    pub budgets: BudgetPolicy,
    pub collision: CollisionConfig,
    pub timeout: Duration,
    /// Upper bound on every low-level horizon.
    pub horizon_cap: Option<usize>,
}

impl CbsOptions {
    pub fn new(budgets: BudgetPolicy, radius: f64, timeout: Duration) -> Self {
        CbsOptions {
            objective: Objective::Length,
            budgets,
            collision: CollisionConfig::new(radius),
            timeout,
            horizon_cap: None,
        }
    }
}

/// Constraints of a node: its parent's plus the one added by the split.
/// Siblings share the common prefix.
#[derive(Debug, Clone, Default)]
pub struct ConstraintChain(Option<Rc<Link>>);

#[derive(Debug)]
struct Link {
    constraint: Constraint,
    parent: ConstraintChain,
    len: usize,
}

impl ConstraintChain {
    pub fn push(&self, constraint: Constraint) -> Self {
        ConstraintChain(Some(Rc::new(Link {
            constraint,
            parent: self.clone(),
            len: self.len() + 1,
        })))
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |l| l.len)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    /// Newest first.
    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        let mut cur = self.0.as_deref();
        std::iter::from_fn(move || {
            let link = cur?;
            cur = link.parent.0.as_deref();
            Some(&link.constraint)
        })
    }

    /// Oldest first.
    pub fn to_vec(&self) -> Vec<Constraint> {
        let mut v: Vec<Constraint> = self.iter().copied().collect();
        v.reverse();
        v
    }
}

impl Drop for ConstraintChain {
    // unlinks iteratively; deep chains would otherwise recurse once per link
    fn drop(&mut self) {
        let mut next = self.0.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut link) => next = link.parent.0.take(),
                Err(_) => break,
            }
        }
    }
}

/// Constraint-tree node.
#[derive(Debug, Clone)]
pub struct CtNode {
    pub constraints: ConstraintChain,
    pub paths: Vec<Rc<TimedPath>>,
    pub risks: Vec<f64>,
    /// `paths[i]` respects the node's constraints (false once a replan failed).
    pub path_ok: Vec<bool>,
    pub budgets: Vec<f64>,
    /// `φ`: path exists, respects constraints and fits the budget.
    pub satisfied: Vec<bool>,
    pub changed: usize,
    pub collisions: usize,
}

impl CtNode {
    pub fn sum_of_costs(&self) -> usize {
        self.paths.iter().map(|p| p.cost()).sum()
    }

    pub fn total_risk(&self) -> f64 {
        self.risks.iter().sum()
    }
}

struct Engine<'a> {
    graph: &'a WaypointGraph,
    tasks: Vec<AgentTask>,
    delta: f64,
    planner: &'a dyn AgentPlanner,
    opts: &'a CbsOptions,
    records: Vec<Arc<SearchRecord>>,
    stats: SolveStats,
    deadline: Instant,
    started: Instant,
}

impl<'a> Engine<'a> {
    fn table(&self, agent: usize, constraints: &ConstraintChain) -> AgentConstraints {
        AgentConstraints::build(agent, constraints.iter(), Some(self.opts.collision))
    }

    fn context<'c>(&'c self, agent: usize, table: &'c AgentConstraints) -> SearchContext<'c> {
        let mut horizon = default_horizon(self.graph, table);
        if let Some(cap) = self.opts.horizon_cap {
            horizon = horizon.min(cap);
        }
        SearchContext::new(self.graph, self.tasks[agent], table)
            .with_horizon(horizon)
            .with_max_edge_risk(self.planner.max_edge_risk())
    }

    fn seed(&self, agent: usize) -> SearchSeed {
        warm_start(
            Some(&self.records[agent]),
            self.tasks[agent].goal,
            self.planner.max_edge_risk(),
        )
    }

    fn replan(
        &mut self,
        agent: usize,
        constraints: &ConstraintChain,
        budget: f64,
    ) -> Result<Plan, LowLevelError> {
        let table = self.table(agent, constraints);
        self.stats.low_level_calls += 1;
        let res = self
            .planner
            .plan(self.context(agent, &table), budget, &self.seed(agent));
        if let Ok(p) = &res {
            self.stats.low_level_expansions += p.expansions;
        }
        res
    }

    fn min_risk(&mut self, agent: usize, constraints: &ConstraintChain) -> Option<f64> {
        let table = self.table(agent, constraints);
        self.stats.low_level_calls += 1;
        let res = min_feasible_risk(self.context(agent, &table), &self.seed(agent));
        res.ok().map(|p| {
            self.stats.low_level_expansions += p.expansions;
            p.risk
        })
    }

    fn conflicts(&mut self, node: &CtNode) -> Vec<Conflict> {
        let refs: Vec<&TimedPath> = node.paths.iter().map(|p| p.as_ref()).collect();
        detect_collisions(
            self.graph,
            &refs,
            &self.opts.collision,
            &mut self.stats.kernel,
        )
    }

    fn key(&self, node: &CtNode) -> NodeKey {
        let soc = node.sum_of_costs() as f64;
        match self.opts.objective {
            Objective::Length => NodeKey::new(soc, node.collisions, node.changed),
            Objective::Risk => NodeKey {
                cost: node.total_risk(),
                tie: soc,
                collisions: node.collisions,
                changed: node.changed,
            },
            Objective::Weighted { lambda } => NodeKey {
                cost: soc + lambda * node.total_risk(),
                tie: node.total_risk(),
                collisions: node.collisions,
                changed: node.changed,
            },
        }
    }

    fn push(&mut self, frontier: &mut Frontier<CtNode>, mut node: CtNode) {
        node.collisions = self.conflicts(&node).len();
        self.stats.generated += 1;
        let key = self.key(&node);
        frontier.insert(key, node);
    }

    /// Budget reallocation for `node` given its failing agents; returns the
    /// successor or `None` when the node has to be pruned.
    fn reallocated(&mut self, node: &CtNode, failing: &[usize]) -> Option<CtNode> {
        let n = self.tasks.len();
        let mut min_risk = vec![0.0; n];
        for (i, slot) in min_risk.iter_mut().enumerate() {
            *slot = self.min_risk(i, &node.constraints)?;
        }
        let mut is_failing = vec![false; n];
        for &i in failing {
            is_failing[i] = true;
        }
        let budgets = reallocate(&node.budgets, &min_risk, &is_failing).ok()?;
        self.stats.reallocations += 1;

        let mut next = node.clone();
        next.changed = budgets
            .iter()
            .zip(&node.budgets)
            .filter(|(a, b)| a != b)
            .count();
        for i in 0..n {
            next.satisfied[i] = !is_failing[i] && next.path_ok[i] && next.risks[i] <= budgets[i];
        }
        next.budgets = budgets;
        Some(next)
    }

    fn root(&mut self) -> Result<CtNode, SolveError> {
        let n = self.tasks.len();
        let root_budget = |policy: BudgetPolicy, share: f64| match policy {
            BudgetPolicy::Reallocating(_) => f64::INFINITY,
            BudgetPolicy::FixedUniform => share,
        };
        let share = self.delta / n as f64;
        let mut paths = Vec::with_capacity(n);
        let mut risks = Vec::with_capacity(n);
        for i in 0..n {
            let plan = self
                .replan(
                    i,
                    &ConstraintChain::default(),
                    root_budget(self.opts.budgets, share),
                )
                .map_err(|_| self.no_solution())?;
            risks.push(plan.risk);
            paths.push(Rc::new(plan.path));
        }

        let budgets = match self.opts.budgets {
            BudgetPolicy::Reallocating(strategy) => {
                let utilities: Vec<f64> = match strategy {
                    AllocationStrategy::Uniform => Vec::new(),
                    AllocationStrategy::Utility => risks.iter().map(|r| r.max(1e-6)).collect(),
                    AllocationStrategy::InverseUtility => {
                        paths.iter().map(|p| (p.cost() as f64).max(1e-6)).collect()
                    }
                };
                initial_allocation(strategy, self.delta, &utilities, n)
                    .map_err(|e| SolveError::InvalidRequest(e.to_string()))?
                    .0
            }
            BudgetPolicy::FixedUniform => vec![share; n],
        };
        let satisfied = risks.iter().zip(&budgets).map(|(r, b)| r <= b).collect();
        Ok(CtNode {
            constraints: ConstraintChain::default(),
            paths,
            risks,
            path_ok: vec![true; n],
            budgets,
            satisfied,
            changed: 0,
            collisions: 0,
        })
    }

    fn no_solution(&self) -> SolveError {
        let mut stats = self.stats.clone();
        stats.wall_time = self.started.elapsed();
        SolveError::NoSolution(stats)
    }

    fn finish(&self, node: CtNode) -> Solution {
        let mut stats = self.stats.clone();
        stats.wall_time = self.started.elapsed();
        Solution {
            paths: node.paths.iter().map(|p| (**p).clone()).collect(),
            sum_of_costs: node.sum_of_costs(),
            total_risk: node.total_risk(),
            risks: node.risks,
            budgets: node.budgets,
            stats,
        }
    }

    fn acceptable(&self, node: &CtNode) -> bool {
        node.total_risk() <= self.delta + RISK_TOL
    }

    fn run(&mut self) -> Result<Solution, SolveError> {
        let n = self.tasks.len();
        let reallocating = matches!(self.opts.budgets, BudgetPolicy::Reallocating(_));
        let root = self.root()?;

        // Root completeness: unconstrained paths that are already
        // conflict-free and within the global bound are returned as is.
        // The reported budgets are the paths' own risks plus an equal share
        // of the slack.
        if reallocating && self.acceptable(&root) && self.conflicts(&root).is_empty() {
            self.stats.expanded += 1;
            let mut root = root;
            let slack = (self.delta - root.total_risk()).max(0.0) / n as f64;
            root.budgets = root.risks.iter().map(|r| r + slack).collect();
            return Ok(self.finish(root));
        }

        let mut frontier = Frontier::new();
        self.push(&mut frontier, root);

        while let Some((_, mut node)) = frontier.extract_min() {
            if Instant::now() >= self.deadline {
                let mut stats = self.stats.clone();
                stats.wall_time = self.started.elapsed();
                return Err(SolveError::Timeout(stats));
            }
            self.stats.expanded += 1;

            if node.satisfied.iter().any(|s| !s) {
                let mut failing = Vec::new();
                for i in 0..n {
                    if node.satisfied[i] {
                        continue;
                    }
                    match self.replan(i, &node.constraints, node.budgets[i]) {
                        Ok(plan) => {
                            node.risks[i] = plan.risk;
                            node.paths[i] = Rc::new(plan.path);
                            node.path_ok[i] = true;
                            node.satisfied[i] = true;
                        }
                        Err(_) => failing.push(i),
                    }
                }
                if !failing.is_empty() {
                    if reallocating {
                        for &i in &failing {
                            node.path_ok[i] = false;
                        }
                        if let Some(next) = self.reallocated(&node, &failing) {
                            self.push(&mut frontier, next);
                        }
                    }
                    continue;
                }
            }

            let conflicts = self.conflicts(&node);
            let Some(conflict) = conflicts.first() else {
                if self.acceptable(&node) {
                    return Ok(self.finish(node));
                }
                continue;
            };

            let (positive, negative) = disjoint_split(conflict);
            for constraint in [positive, negative] {
                let mut child = node.clone();
                child.constraints = node.constraints.push(constraint);
                child.changed = 0;
                let mut failing = Vec::new();
                for i in 0..n {
                    let table = self.table(i, &child.constraints);
                    if table.admits(self.graph, &child.paths[i]) {
                        continue;
                    }
                    match self.replan(i, &child.constraints, child.budgets[i]) {
                        Ok(plan) => {
                            child.risks[i] = plan.risk;
                            child.paths[i] = Rc::new(plan.path);
                        }
                        Err(_) => {
                            child.path_ok[i] = false;
                            child.satisfied[i] = false;
                            failing.push(i);
                        }
                    }
                }
                if failing.is_empty() {
                    self.push(&mut frontier, child);
                } else if reallocating {
                    if let Some(next) = self.reallocated(&child, &failing) {
                        self.push(&mut frontier, next);
                    }
                }
            }
        }
        Err(self.no_solution())
    }
}

/// Runs the constraint-tree search for `tasks` (agent ids are positions in
/// the slice).
pub fn search(
    graph: &WaypointGraph,
    tasks: &[AgentTask],
    delta: f64,
    planner: &dyn AgentPlanner,
    opts: &CbsOptions,
) -> Result<Solution, SolveError> {
    if tasks.is_empty() {
        return Err(SolveError::InvalidRequest("no agents".into()));
    }
    let internal: Vec<AgentTask> = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| AgentTask::new(i, t.start, t.goal))
        .collect();
    let started = Instant::now();
    let records = internal
        .iter()
        .map(|t| Arc::new(SearchRecord::build(graph, t.goal, planner.max_edge_risk())))
        .collect();
    let mut engine = Engine {
        graph,
        tasks: internal,
        delta,
        planner,
        opts,
        records,
        stats: SolveStats::default(),
        deadline: started + opts.timeout,
        started,
    };
    let mut solution = engine.run()?;
    for (path, task) in solution.paths.iter_mut().zip(tasks) {
        path.agent = task.agent;
    }
    Ok(solution)
}
