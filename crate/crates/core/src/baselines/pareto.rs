use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::sync::Arc;

use crate::graph::{TimedPath, VertexId};
use crate::lowlevel::{LowLevelError, SearchContext, SearchRecord, SearchSeed};

/// A partial path in the bi-objective search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoLabel {
    pub vertex: VertexId,
    pub time: usize,
    pub risk: f64,
    pub parent: Option<usize>,
}

impl ParetoLabel {
    /// Length so far (waits included).
    pub fn length(&self) -> usize {
        self.time
    }
}

/// One non-dominated `(length, risk)` outcome with a witness path.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub length: usize,
    pub risk: f64,
    pub path: TimedPath,
}

#[derive(Debug, Clone, Copy)]
struct Open {
    f_len: usize,
    f_risk: f64,
    label: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f_len
            .cmp(&self.f_len)
            .then_with(|| other.f_risk.total_cmp(&self.f_risk))
            .then_with(|| other.label.cmp(&self.label))
    }
}

/// Complete `(length, risk)` Pareto frontier of admissible paths up to the
/// context's horizon, sorted by increasing length (and so decreasing risk).
///
/// Labels are expanded in lexicographic `(length, risk)` order of their
/// A* estimates. Labels at the same vertex and time only compete with each
/// other while constraints are still active; past the last constrained
/// instant waiting is free, so an earlier label with no more risk
/// dominates later ones at the same vertex.
pub fn pareto_search(
    ctx: SearchContext<'_>,
    seed: &SearchSeed,
) -> Result<Vec<ParetoPoint>, LowLevelError> {
    let SearchContext {
        graph,
        task,
        constraints,
        horizon,
        max_edge_risk,
    } = ctx;
    let record = seed
        .hints
        .clone()
        .filter(|r| r.applies_to(task.goal, max_edge_risk))
        .unwrap_or_else(|| Arc::new(SearchRecord::build(graph, task.goal, max_edge_risk)));
    let infeasible = || LowLevelError::Infeasible {
        horizon,
        horizon_exhausted: false,
    };
    if constraints.is_contradictory() || !constraints.vertex_allowed(task.start, 0) {
        return Err(infeasible());
    }

    let stable = constraints.max_instant();
    let rest = constraints.earliest_rest(graph, task.goal);
    let mut labels: Vec<ParetoLabel> = Vec::new();
    let mut open = BinaryHeap::new();
    let mut seen: HashSet<(VertexId, usize)> = HashSet::new();
    let mut best_after = vec![f64::INFINITY; graph.num_vertices()];
    let mut goal_best = f64::INFINITY;
    let mut frontier = Vec::new();

    let push = |labels: &mut Vec<ParetoLabel>, open: &mut BinaryHeap<Open>, l: ParetoLabel| {
        let hops = record.hops_to_goal(l.vertex);
        if hops == usize::MAX || l.time + hops > horizon {
            return;
        }
        labels.push(l);
        open.push(Open {
            f_len: l.time + hops,
            f_risk: l.risk + record.risk_to_goal(l.vertex),
            label: labels.len() - 1,
        });
    };
    push(
        &mut labels,
        &mut open,
        ParetoLabel {
            vertex: task.start,
            time: 0,
            risk: 0.0,
            parent: None,
        },
    );

    while let Some(Open { f_risk, label, .. }) = open.pop() {
        if f_risk >= goal_best {
            continue;
        }
        let l = labels[label];
        if l.time <= stable {
            if !seen.insert((l.vertex, l.time)) {
                continue;
            }
        } else {
            if best_after[l.vertex] <= l.risk {
                continue;
            }
            best_after[l.vertex] = l.risk;
        }
        if l.vertex == task.goal && l.time >= rest {
            goal_best = l.risk;
            frontier.push(ParetoPoint {
                length: l.time,
                risk: l.risk,
                path: trace(&labels, label, task.agent),
            });
            continue;
        }
        if l.time == horizon {
            continue;
        }
        let mut extend = |v: VertexId, w: f64| {
            if constraints.motion_allowed(graph, l.vertex, v, l.time) {
                push(
                    &mut labels,
                    &mut open,
                    ParetoLabel {
                        vertex: v,
                        time: l.time + 1,
                        risk: l.risk + w,
                        parent: Some(label),
                    },
                );
            }
        };
        extend(l.vertex, 0.0);
        for e in graph.edges_from(l.vertex) {
            if e.risk <= max_edge_risk {
                extend(e.to, e.risk);
            }
        }
    }

    if frontier.is_empty() {
        Err(infeasible())
    } else {
        Ok(frontier)
    }
}

fn trace(labels: &[ParetoLabel], mut idx: usize, agent: usize) -> TimedPath {
    let mut vertices = vec![0; labels[idx].time + 1];
    loop {
        let l = labels[idx];
        vertices[l.time] = l.vertex;
        match l.parent {
            Some(p) => idx = p,
            None => break,
        }
    }
    TimedPath::new(agent, vertices)
}

/// Shortest frontier member whose risk fits `budget`.
pub fn select_within_budget(frontier: &[ParetoPoint], budget: f64) -> Option<&ParetoPoint> {
    frontier
        .iter()
        .filter(|p| p.risk <= budget)
        .min_by_key(|p| p.length)
}
