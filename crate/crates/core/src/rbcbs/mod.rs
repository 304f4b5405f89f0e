//! Risk-bounded conflict-based search.
//!
//! The high level explores a constraint tree whose nodes carry, next to the
//! usual constraints and paths, a per-agent risk budget vector `δ` and
//! satisfaction flags `φ`. When a low-level replan fails for lack of
//! budget, budget is moved from agents with surplus (see [`reallocate`]).

mod allocation;
mod frontier;
mod realloc;
mod search;
mod split;

use std::time::Duration;

use thiserror::Error;

pub use allocation::{initial_allocation, AllocationError, AllocationStrategy, RiskAllocation};
pub use frontier::{Frontier, NodeKey};
pub use realloc::{reallocate, ReallocationFailed};
pub use search::{
    search, AgentPlanner, BudgetPolicy, CbsOptions, ConstraintChain, CtNode, Objective,
};
pub use split::{conflict_location, disjoint_split};

use crate::collision::KernelDiagnostics;
use crate::graph::{AgentTask, TimedPath, WaypointGraph};
use crate::lowlevel::{
    min_feasible_risk, rba_star, LowLevelError, Plan, SearchContext, SearchSeed,
};

/// Wall-clock allowance per agent used by the evaluation protocol.
pub const SECONDS_PER_AGENT: u64 = 60;

/// `60 · N` seconds, scaled.
pub fn protocol_timeout(n_agents: usize, scale: f64) -> Duration {
    Duration::from_secs_f64(SECONDS_PER_AGENT as f64 * n_agents as f64 * scale)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Constraint-tree nodes popped from the frontier.
    pub expanded: u64,
    /// Constraint-tree nodes pushed onto the frontier.
    pub generated: u64,
    pub reallocations: u64,
    pub low_level_calls: u64,
    pub low_level_expansions: u64,
    pub wall_time: Duration,
    pub kernel: KernelDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub paths: Vec<TimedPath>,
    /// `ρ(π_i)` per agent.
    pub risks: Vec<f64>,
    pub total_risk: f64,
    /// `J(Π)`.
    pub sum_of_costs: usize,
    /// Budgets of the node the solution came from.
    pub budgets: Vec<f64>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn average_steps(&self) -> f64 {
        self.sum_of_costs as f64 / self.paths.len() as f64
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no solution: constraint tree exhausted")]
    NoSolution(SolveStats),
    #[error("timed out after {:.3}s", .0.wall_time.as_secs_f64())]
    Timeout(SolveStats),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl SolveError {
    pub fn stats(&self) -> Option<&SolveStats> {
        match self {
            SolveError::NoSolution(s) | SolveError::Timeout(s) => Some(s),
            SolveError::InvalidRequest(_) => None,
        }
    }
}

/// Everything needed for one risk-bounded solve.
#[derive(Debug, Clone)]
pub struct SolveRequest<'a> {
    pub graph: &'a WaypointGraph,
    pub tasks: Vec<AgentTask>,
    /// Global risk bound `Δ`.
    pub delta: f64,
    pub radius: f64,
    pub timeout: Duration,
    pub allocation: AllocationStrategy,
}

impl<'a> SolveRequest<'a> {
    pub fn new(graph: &'a WaypointGraph, tasks: Vec<AgentTask>, delta: f64, radius: f64) -> Self {
        let timeout = protocol_timeout(tasks.len(), 1.0);
        SolveRequest {
            graph,
            tasks,
            delta,
            radius,
            timeout,
            allocation: AllocationStrategy::Uniform,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::InvalidRequest(m));
        if self.tasks.is_empty() {
            return bad("no agents".into());
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return bad(format!(
                "global risk bound must be finite and >= 0, got {}",
                self.delta
            ));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        let mut ids: Vec<_> = self.tasks.iter().map(|t| t.agent).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("agent ids must be unique".into());
        }
        for t in &self.tasks {
            if let Err(e) = t.validate(self.graph) {
                return bad(format!("agent {}: {e}", t.agent));
            }
        }
        Ok(())
    }
}

/// RBA*: earliest arrival within the budget.
#[derive(Debug, Clone, Copy, Default)]
pub struct RiskBoundedPlanner;

impl AgentPlanner for RiskBoundedPlanner {
    fn plan(
        &self,
        ctx: SearchContext<'_>,
        budget: f64,
        seed: &SearchSeed,
    ) -> Result<Plan, LowLevelError> {
        rba_star(ctx, budget, seed)
    }
}

/// Minimum-risk paths (arrival time as tie-break), for risk-minimising CBS.
#[derive(Debug, Clone, Copy, Default)]
pub struct MinRiskPlanner;

impl AgentPlanner for MinRiskPlanner {
    fn plan(
        &self,
        ctx: SearchContext<'_>,
        budget: f64,
        seed: &SearchSeed,
    ) -> Result<Plan, LowLevelError> {
        let plan = min_feasible_risk(ctx, seed)?;
        if plan.risk <= budget {
            Ok(plan)
        } else {
            Err(LowLevelError::Infeasible {
                horizon: ctx.horizon,
                horizon_exhausted: false,
            })
        }
    }
}

/// Solves a risk-bounded MAPF instance with RB-CBS.
pub fn solve(request: &SolveRequest<'_>) -> Result<Solution, SolveError> {
    request.validate()?;
    let opts = CbsOptions::new(
        BudgetPolicy::Reallocating(request.allocation),
        request.radius,
        request.timeout,
    );
    search(
        request.graph,
        &request.tasks,
        request.delta,
        &RiskBoundedPlanner,
        &opts,
    )
}
