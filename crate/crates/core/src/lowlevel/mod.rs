//! Single-agent planning under spatio-temporal constraints and a risk budget.
//!
//! All planners here run the same forward sweep over the time-expanded
//! graph. Layer `t` holds at most one label per vertex: the minimum-risk way
//! of standing on that vertex at time `t`. Because constraints only depend
//! on vertex, time and motion, a label with lower accumulated risk at the
//! same `(vertex, time)` dominates every other one, so a single survivor is
//! exact. Labels inside a layer are kept in lexicographic order of their
//! vertex sequences, which gives a deterministic tie-break for free.

mod constraint;
mod record;

use std::sync::Arc;

use thiserror::Error;

pub use constraint::{AgentConstraints, Constraint, Location, Polarity};
pub use record::{warm_start, SearchRecord, SearchSeed};

use crate::graph::{AgentTask, TimedPath, VertexId, WaypointGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowLevelError {
    /// No admissible path. `horizon_exhausted` tells whether the sweep ran
    /// out of time steps with labels still alive (a longer horizon might
    /// help) or died out before that (infeasible at any horizon).
    #[error(
        "no admissible path within horizon {horizon} (horizon exhausted: {horizon_exhausted})"
    )]
    Infeasible {
        horizon: usize,
        horizon_exhausted: bool,
    },
}

/// One single-agent query.
#[derive(Debug, Clone, Copy)]
pub struct SearchContext<'a> {
    pub graph: &'a WaypointGraph,
    pub task: AgentTask,
    pub constraints: &'a AgentConstraints,
    /// Last timestep considered.
    pub horizon: usize,
    /// Edges riskier than this are not traversable.
    pub max_edge_risk: f64,
}

impl<'a> SearchContext<'a> {
    pub fn new(
        graph: &'a WaypointGraph,
        task: AgentTask,
        constraints: &'a AgentConstraints,
    ) -> Self {
        SearchContext {
            graph,
            task,
            constraints,
            horizon: default_horizon(graph, constraints),
            max_edge_risk: f64::INFINITY,
        }
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_max_edge_risk(mut self, max_edge_risk: f64) -> Self {
        self.max_edge_risk = max_edge_risk;
        self
    }
}

/// Latest constrained instant plus twice the vertex count.
pub fn default_horizon(graph: &WaypointGraph, constraints: &AgentConstraints) -> usize {
    constraints.max_instant() + 2 * graph.num_vertices()
}

/// A planned path and what it cost to find.
#[derive(Debug, Clone)]
pub struct Plan {
    pub path: TimedPath,
    pub risk: f64,
    pub expansions: u64,
    /// Bounds that a later search of the same agent can reuse.
    pub record: Arc<SearchRecord>,
}

/// Minimum-risk goal label for one arrival time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: usize,
    pub risk: f64,
}

const NO_PARENT: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Label {
    vertex: VertexId,
    parent: usize,
    risk: f64,
}

enum Control {
    Stop,
    /// Keep sweeping, pruning labels that cannot finish under this risk.
    Continue(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepEnd {
    Stopped,
    DiedOut,
    Horizon,
}

fn slack(bound: f64) -> f64 {
    1e-9 * bound.abs().max(1.0)
}

struct Sweep<'a> {
    ctx: SearchContext<'a>,
    hints: Option<Arc<SearchRecord>>,
    layers: Vec<Vec<Label>>,
    expansions: u64,
}

impl<'a> Sweep<'a> {
    fn new(ctx: SearchContext<'a>, seed: &SearchSeed) -> Self {
        let hints = seed
            .hints
            .clone()
            .filter(|r| r.applies_to(ctx.task.goal, ctx.max_edge_risk));
        Sweep {
            ctx,
            hints,
            layers: Vec::new(),
            expansions: 0,
        }
    }

    #[inline]
    fn pruned(&self, v: VertexId, t: usize, risk: f64, soft_bound: f64) -> bool {
        match &self.hints {
            Some(h) => {
                let hops = h.hops_to_goal(v);
                hops == usize::MAX
                    || t + hops > self.ctx.horizon
                    || risk + h.risk_to_goal(v) > soft_bound + slack(soft_bound)
            }
            None => risk > soft_bound + slack(soft_bound),
        }
    }

    /// Runs the sweep. `budget` caps label risk exactly; `soft_bound` is a
    /// tolerant cap used for bound-based pruning and may be tightened by
    /// `on_arrival`.
    fn run<F>(&mut self, budget: f64, mut soft_bound: f64, mut on_arrival: F) -> SweepEnd
    where
        F: FnMut(usize, f64) -> Control,
    {
        let SearchContext {
            graph,
            task,
            constraints,
            horizon,
            max_edge_risk,
        } = self.ctx;
        let n = graph.num_vertices();
        if constraints.is_contradictory()
            || !constraints.vertex_allowed(task.start, 0)
            || self.pruned(task.start, 0, 0.0, soft_bound)
        {
            return SweepEnd::DiedOut;
        }
        let rest = constraints.earliest_rest(graph, task.goal);
        self.layers.push(vec![Label {
            vertex: task.start,
            parent: NO_PARENT,
            risk: 0.0,
        }]);

        let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, NO_PARENT); n];
        let mut touched: Vec<VertexId> = Vec::new();
        for t in 0..=horizon {
            if t >= rest {
                if let Some(l) = self.layers[t].iter().find(|l| l.vertex == task.goal) {
                    match on_arrival(t, l.risk) {
                        Control::Stop => return SweepEnd::Stopped,
                        Control::Continue(b) => soft_bound = b,
                    }
                }
            }
            if t == horizon {
                return SweepEnd::Horizon;
            }

            let layer = &self.layers[t];
            self.expansions += layer.len() as u64;
            for (pi, label) in layer.iter().enumerate() {
                let u = label.vertex;
                let mut consider = |v: VertexId, risk: f64| {
                    if risk > budget
                        || risk >= best[v].0
                        || !constraints.motion_allowed(graph, u, v, t)
                        || self.pruned(v, t + 1, risk, soft_bound)
                    {
                        return;
                    }
                    if best[v].1 == NO_PARENT {
                        touched.push(v);
                    }
                    best[v] = (risk, pi);
                };
                consider(u, label.risk);
                for e in graph.edges_from(u) {
                    if e.risk <= max_edge_risk {
                        consider(e.to, label.risk + e.risk);
                    }
                }
            }

            let mut next: Vec<Label> = touched
                .drain(..)
                .map(|v| {
                    let (risk, parent) = best[v];
                    best[v] = (f64::INFINITY, NO_PARENT);
                    Label {
                        vertex: v,
                        parent,
                        risk,
                    }
                })
                .collect();
            if next.is_empty() {
                return SweepEnd::DiedOut;
            }
            next.sort_unstable_by_key(|l| (l.parent, l.vertex));
            self.layers.push(next);
        }
        SweepEnd::Horizon
    }

    fn goal_path(&self, t: usize) -> TimedPath {
        let goal = self.ctx.task.goal;
        let mut idx = self.layers[t]
            .iter()
            .position(|l| l.vertex == goal)
            .expect("arrival label exists");
        let mut vertices = vec![0; t + 1];
        for layer in (0..=t).rev() {
            let l = self.layers[layer][idx];
            vertices[layer] = l.vertex;
            idx = l.parent;
        }
        TimedPath::new(self.ctx.task.agent, vertices)
    }

    fn fail(&self, end: SweepEnd) -> LowLevelError {
        LowLevelError::Infeasible {
            horizon: self.ctx.horizon,
            horizon_exhausted: end == SweepEnd::Horizon,
        }
    }

    fn into_plan(self, t: usize, risk: f64) -> Plan {
        let path = self.goal_path(t);
        let record = self.hints.clone().unwrap_or_else(|| {
            Arc::new(SearchRecord::build(
                self.ctx.graph,
                self.ctx.task.goal,
                self.ctx.max_edge_risk,
            ))
        });
        Plan {
            path,
            risk,
            expansions: self.expansions,
            record,
        }
    }
}

/// Risk-bounded A*: the earliest-arriving path with accumulated risk at most
/// `budget`. Ties go to lower risk, then to the lexicographically smaller
/// vertex sequence.
pub fn rba_star(
    ctx: SearchContext<'_>,
    budget: f64,
    seed: &SearchSeed,
) -> Result<Plan, LowLevelError> {
    let mut sweep = Sweep::new(ctx, seed);
    let mut found = None;
    let end = sweep.run(budget, budget, |t, risk| {
        found = Some((t, risk));
        Control::Stop
    });
    match found {
        Some((t, risk)) => Ok(sweep.into_plan(t, risk)),
        None => Err(sweep.fail(end)),
    }
}

/// Minimum accumulated risk over admissible paths, realised by the
/// earliest-arriving path that attains it.
pub fn min_feasible_risk(ctx: SearchContext<'_>, seed: &SearchSeed) -> Result<Plan, LowLevelError> {
    let mut sweep = Sweep::new(ctx, seed);
    let mut found: Option<(usize, f64)> = None;
    let end = sweep.run(f64::INFINITY, f64::INFINITY, |t, risk| {
        if found.is_none_or(|(_, r)| risk < r) {
            found = Some((t, risk));
        }
        Control::Continue(found.map_or(f64::INFINITY, |(_, r)| r))
    });
    match found {
        Some((t, risk)) => Ok(sweep.into_plan(t, risk)),
        None => Err(sweep.fail(end)),
    }
}

/// Minimum risk for every feasible arrival time up to the horizon.
pub fn arrival_profile(ctx: SearchContext<'_>, seed: &SearchSeed) -> Vec<Arrival> {
    let mut sweep = Sweep::new(ctx, seed);
    let mut out = Vec::new();
    sweep.run(f64::INFINITY, f64::INFINITY, |time, risk| {
        out.push(Arrival { time, risk });
        Control::Continue(f64::INFINITY)
    });
    out
}

/// Minimises `arrival + lambda * risk`; ties go to lower risk, then earlier
/// arrival, then the lexicographically smaller sequence.
pub fn scalarized_search(
    ctx: SearchContext<'_>,
    lambda: f64,
    seed: &SearchSeed,
) -> Result<Plan, LowLevelError> {
    let mut sweep = Sweep::new(ctx, seed);
    let mut best: Option<(f64, f64, usize)> = None;
    let end = sweep.run(f64::INFINITY, f64::INFINITY, |t, risk| {
        let score = t as f64 + lambda * risk;
        let better = match best {
            None => true,
            Some((s, r, _)) => score < s || (score == s && risk < r),
        };
        if better {
            best = Some((score, risk, t));
        }
        Control::Continue(f64::INFINITY)
    });
    match best {
        Some((_, risk, t)) => Ok(sweep.into_plan(t, risk)),
        None => Err(sweep.fail(end)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::diamond;
    use crate::graph::{path_risk, GraphBuilder};

    fn task() -> AgentTask {
        AgentTask::new(0, 0, 4)
    }

    #[test]
    fn budget_selects_route() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, task(), &c).with_horizon(6);
        let p = rba_star(ctx, 10.0, &SearchSeed::cold()).unwrap();
        assert_eq!(p.path.vertices, vec![0, 1, 4]);
        assert_eq!(p.risk, 10.0);
        let p = rba_star(ctx, 9.0, &SearchSeed::cold()).unwrap();
        assert_eq!(p.path.vertices, vec![0, 2, 3, 4]);
        assert_eq!(p.risk, 0.0);
    }

    #[test]
    fn zero_budget_on_risky_only_route() {
        let g = GraphBuilder::new(2, 5.0)
            .coords(vec![[0.0, 0.0], [1.0, 0.0]])
            .edge(0, 1, 1.0, 2.0)
            .build()
            .unwrap();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, AgentTask::new(0, 0, 1), &c);
        // Waiting keeps a cold sweep alive until the horizon.
        let err = rba_star(ctx, 0.0, &SearchSeed::cold()).unwrap_err();
        assert!(matches!(
            err,
            LowLevelError::Infeasible {
                horizon_exhausted: true,
                ..
            }
        ));
        // The risk bound proves infeasibility outright.
        let record = Arc::new(SearchRecord::build(&g, 1, f64::INFINITY));
        let err = rba_star(ctx, 0.0, &warm_start(Some(&record), 1, f64::INFINITY)).unwrap_err();
        assert!(matches!(
            err,
            LowLevelError::Infeasible {
                horizon_exhausted: false,
                ..
            }
        ));
    }

    #[test]
    fn start_equals_goal() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, AgentTask::new(0, 3, 3), &c);
        let p = rba_star(ctx, 0.0, &SearchSeed::cold()).unwrap();
        assert_eq!(p.path.vertices, vec![3]);
        assert_eq!(p.risk, 0.0);
    }

    #[test]
    fn min_risk_on_diamond() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, task(), &c);
        let p = min_feasible_risk(ctx, &SearchSeed::cold()).unwrap();
        assert_eq!(p.risk, 0.0);
        assert_eq!(p.path.cost(), 3);
    }

    #[test]
    fn min_risk_through_mandatory_edge() {
        // both routes share 3 -> 4 with risk 3
        let g = GraphBuilder::new(5, 10.0)
            .coords(vec![[0.0; 2]; 5])
            .pair_dist(crate::graph::PairDistSource::Table(
                (0..25)
                    .map(|i| if i % 6 == 0 { 0.0 } else { 1.0 })
                    .collect(),
            ))
            .edge(0, 1, 1.0, 0.0)
            .edge(0, 2, 1.0, 0.0)
            .edge(1, 3, 1.0, 0.0)
            .edge(2, 3, 1.0, 0.0)
            .edge(3, 4, 1.0, 3.0)
            .build()
            .unwrap();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, task(), &c);
        assert_eq!(
            min_feasible_risk(ctx, &SearchSeed::cold()).unwrap().risk,
            3.0
        );
    }

    #[test]
    fn unreachable_goal() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, AgentTask::new(0, 4, 0), &c);
        assert!(min_feasible_risk(ctx, &SearchSeed::cold()).is_err());
        assert!(rba_star(ctx, f64::INFINITY, &SearchSeed::cold()).is_err());
    }

    #[test]
    fn constraints_push_arrival_later() {
        let g = diamond();
        let cs = [Constraint::vertex(0, 1, 1, Polarity::Negative)];
        let c = AgentConstraints::build(0, &cs, None);
        let ctx = SearchContext::new(&g, task(), &c);
        let p = rba_star(ctx, 10.0, &SearchSeed::cold()).unwrap();
        // wait then go through a: T = 3, risk 10 ties with the safe route at
        // T = 3, which wins on risk.
        assert_eq!(p.path.vertices, vec![0, 2, 3, 4]);
        let cs = [
            Constraint::vertex(0, 1, 1, Polarity::Negative),
            Constraint::vertex(0, 2, 1, Polarity::Negative),
        ];
        let c = AgentConstraints::build(0, &cs, None);
        let ctx = SearchContext::new(&g, task(), &c);
        let p = rba_star(ctx, 10.0, &SearchSeed::cold()).unwrap();
        assert_eq!(p.path.vertices, vec![0, 0, 1, 4]);
    }

    #[test]
    fn goal_must_be_restable() {
        let g = diamond();
        let cs = [Constraint::vertex(0, 4, 4, Polarity::Negative)];
        let c = AgentConstraints::build(0, &cs, None);
        let ctx = SearchContext::new(&g, task(), &c);
        let p = rba_star(ctx, 10.0, &SearchSeed::cold()).unwrap();
        assert_eq!(p.path.cost(), 5);
        assert!(c.admits(&g, &p.path));
    }

    #[test]
    fn warm_start_preserves_result() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, task(), &c).with_horizon(12);
        let cold = rba_star(ctx, 9.0, &SearchSeed::cold()).unwrap();
        let seed = warm_start(Some(&cold.record), 4, f64::INFINITY);
        let warm = rba_star(ctx, 9.0, &seed).unwrap();
        assert_eq!(cold.path, warm.path);
        assert!(warm.expansions <= cold.expansions);
        let other = rba_star(ctx, 100.0, &seed).unwrap();
        assert_eq!(other.path.vertices, vec![0, 1, 4]);
    }

    #[test]
    fn scalarized_on_diamond() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, task(), &c);
        let p = |l| {
            scalarized_search(ctx, l, &SearchSeed::cold())
                .unwrap()
                .path
                .vertices
        };
        assert_eq!(p(0.0), vec![0, 1, 4]);
        assert_eq!(p(0.2), vec![0, 2, 3, 4]);
        assert_eq!(p(1e6), vec![0, 2, 3, 4]);
    }

    #[test]
    fn profile_lists_min_risk_per_arrival() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, task(), &c).with_horizon(4);
        let prof = arrival_profile(ctx, &SearchSeed::cold());
        let pairs: Vec<_> = prof.iter().map(|a| (a.time, a.risk)).collect();
        assert_eq!(pairs, vec![(2, 10.0), (3, 0.0), (4, 0.0)]);
    }

    #[test]
    fn returned_risk_matches_path_risk() {
        let g = diamond();
        let c = AgentConstraints::empty(0);
        let ctx = SearchContext::new(&g, task(), &c);
        let p = rba_star(ctx, 50.0, &SearchSeed::cold()).unwrap();
        assert_eq!(path_risk(&p.path, &g).unwrap(), p.risk);
    }
}
