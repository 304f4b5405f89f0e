//! Comparison planners: Lagrangian scalarization, bi-objective Pareto
//! search and search over a risk-pruned graph.
//!
//! Their multi-agent versions run the same constraint tree as RB-CBS but
//! with a fixed `Δ / N` budget per agent and no reallocation.

mod pareto;

pub use pareto::{pareto_search, select_within_budget, ParetoLabel, ParetoPoint};

use crate::graph::WaypointGraph;
use crate::lowlevel::{
    rba_star, scalarized_search, LowLevelError, Plan, SearchContext, SearchSeed,
};
use crate::rbcbs::{
    search, AgentPlanner, BudgetPolicy, CbsOptions, Solution, SolveError, SolveRequest,
};

/// Default multiplier on risk in the scalarized objective.
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Default edge-risk quantile kept by the pruned graph.
pub const DEFAULT_PRUNE_QUANTILE: f64 = 0.5;

/// Minimises `length + λ·ρ`.
pub fn lagrangian_search(
    ctx: SearchContext<'_>,
    lambda: f64,
    seed: &SearchSeed,
) -> Result<Plan, LowLevelError> {
    scalarized_search(ctx, lambda, seed)
}

/// Earliest arrival using only edges with risk at most `threshold`.
pub fn pruned_graph_search(
    ctx: SearchContext<'_>,
    threshold: f64,
    seed: &SearchSeed,
) -> Result<Plan, LowLevelError> {
    let limit = threshold.min(ctx.max_edge_risk);
    rba_star(ctx.with_max_edge_risk(limit), f64::INFINITY, seed)
}

/// The `q`-quantile (lower nearest rank) of the graph's edge risks; `0` for
/// a graph without edges.
pub fn edge_risk_quantile(graph: &WaypointGraph, q: f64) -> f64 {
    let mut risks: Vec<f64> = graph.edges().map(|(_, e)| e.risk).collect();
    if risks.is_empty() {
        return 0.0;
    }
    risks.sort_by(f64::total_cmp);
    let q = q.clamp(0.0, 1.0);
    let idx = (q * (risks.len() - 1) as f64).floor() as usize;
    risks[idx]
}

fn over_budget(ctx: &SearchContext<'_>) -> LowLevelError {
    LowLevelError::Infeasible {
        horizon: ctx.horizon,
        horizon_exhausted: false,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LagrangianPlanner {
    pub lambda: f64,
}

impl AgentPlanner for LagrangianPlanner {
    fn plan(
        &self,
        ctx: SearchContext<'_>,
        budget: f64,
        seed: &SearchSeed,
    ) -> Result<Plan, LowLevelError> {
        let plan = lagrangian_search(ctx, self.lambda, seed)?;
        if plan.risk <= budget {
            Ok(plan)
        } else {
            Err(over_budget(&ctx))
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParetoPlanner;

impl AgentPlanner for ParetoPlanner {
    fn plan(
        &self,
        ctx: SearchContext<'_>,
        budget: f64,
        seed: &SearchSeed,
    ) -> Result<Plan, LowLevelError> {
        let frontier = pareto_search(ctx, seed)?;
        let chosen = select_within_budget(&frontier, budget).ok_or_else(|| over_budget(&ctx))?;
        let expansions = frontier.len() as u64;
        let record = match &seed.hints {
            Some(r) if r.applies_to(ctx.task.goal, ctx.max_edge_risk) => r.clone(),
            _ => std::sync::Arc::new(crate::lowlevel::SearchRecord::build(
                ctx.graph,
                ctx.task.goal,
                ctx.max_edge_risk,
            )),
        };
        Ok(Plan {
            path: chosen.path.clone(),
            risk: chosen.risk,
            expansions,
            record,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PrunedPlanner {
    pub threshold: f64,
}

impl AgentPlanner for PrunedPlanner {
    fn plan(
        &self,
        ctx: SearchContext<'_>,
        budget: f64,
        seed: &SearchSeed,
    ) -> Result<Plan, LowLevelError> {
        let plan = pruned_graph_search(ctx, self.threshold, seed)?;
        if plan.risk <= budget {
            Ok(plan)
        } else {
            Err(over_budget(&ctx))
        }
    }

    fn max_edge_risk(&self) -> f64 {
        self.threshold
    }
}

/// Runs `planner` inside the constraint tree with fixed `Δ / N` budgets.
pub fn solve_fixed_budget(
    request: &SolveRequest<'_>,
    planner: &dyn AgentPlanner,
) -> Result<Solution, SolveError> {
    request.validate()?;
    let opts = CbsOptions::new(BudgetPolicy::FixedUniform, request.radius, request.timeout);
    search(request.graph, &request.tasks, request.delta, planner, &opts)
}
