use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::graph::{VertexId, WaypointGraph};

/// Constraint-independent lower bounds toward one goal, kept from an
/// earlier search and reused by later searches of the same agent.
///
/// Both tables ignore time and constraints, so they stay admissible no
/// matter which constraints or budget a later query carries.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRecord {
    goal: VertexId,
    max_edge_risk: f64,
    hops_to_goal: Vec<usize>,
    risk_to_goal: Vec<f64>,
}

impl SearchRecord {
    pub fn build(graph: &WaypointGraph, goal: VertexId, max_edge_risk: f64) -> Self {
        let n = graph.num_vertices();
        let mut rev: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); n];
        for (u, e) in graph.edges() {
            if e.risk <= max_edge_risk {
                rev[e.to].push((u, e.risk));
            }
        }

        let mut hops = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::from([goal]);
        hops[goal] = 0;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &rev[v] {
                if hops[u] == usize::MAX {
                    hops[u] = hops[v] + 1;
                    queue.push_back(u);
                }
            }
        }

        let mut risk = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        risk[goal] = 0.0;
        heap.push(Reverse((OrdF64(0.0), goal)));
        while let Some(Reverse((OrdF64(d), v))) = heap.pop() {
            if d > risk[v] {
                continue;
            }
            for &(u, w) in &rev[v] {
                let nd = d + w;
                if nd < risk[u] {
                    risk[u] = nd;
                    heap.push(Reverse((OrdF64(nd), u)));
                }
            }
        }

        SearchRecord {
            goal,
            max_edge_risk,
            hops_to_goal: hops,
            risk_to_goal: risk,
        }
    }

    pub fn goal(&self) -> VertexId {
        self.goal
    }

    pub fn max_edge_risk(&self) -> f64 {
        self.max_edge_risk
    }

    #[inline]
    pub fn hops_to_goal(&self, v: VertexId) -> usize {
        self.hops_to_goal[v]
    }

    #[inline]
    pub fn risk_to_goal(&self, v: VertexId) -> f64 {
        self.risk_to_goal[v]
    }

    pub(crate) fn applies_to(&self, goal: VertexId, max_edge_risk: f64) -> bool {
        self.goal == goal && self.max_edge_risk == max_edge_risk
    }
}

/// Hints handed to a search. Empty hints give a cold search.
#[derive(Debug, Clone, Default)]
pub struct SearchSeed {
    pub(crate) hints: Option<Arc<SearchRecord>>,
}

impl SearchSeed {
    pub fn cold() -> Self {
        SearchSeed::default()
    }

    pub fn is_cold(&self) -> bool {
        self.hints.is_none()
    }
}

/// Prepares a seed from an earlier record. The record is dropped when it
/// was built for another goal or edge filter; hints never change which path
/// a search returns, only how many labels it expands.
pub fn warm_start(
    previous: Option<&Arc<SearchRecord>>,
    goal: VertexId,
    max_edge_risk: f64,
) -> SearchSeed {
    SearchSeed {
        hints: previous
            .filter(|r| r.applies_to(goal, max_edge_risk))
            .cloned(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
