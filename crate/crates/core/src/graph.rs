//! Dual-weighted waypoint graphs, agent tasks and timed paths.
//!
//! Every directed edge carries a traversal distance and a traversal risk.
//! A dense pairwise distance table sits next to the adjacency; the
//! collision kernel only ever looks at that table, never at coordinates.

use std::fmt;

use thiserror::Error;

pub type VertexId = usize;
pub type AgentId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex {0} is out of range")]
    UnknownVertex(VertexId),
    #[error("edge {0}->{1} does not exist")]
    MissingEdge(VertexId, VertexId),
    #[error("edge {0}->{1} is a self loop; waiting is implicit")]
    SelfLoop(VertexId, VertexId),
    #[error("edge {0}->{1} is declared twice")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge {u}->{v} has distance {dist} which is not below the cutoff {max_dist}")]
    EdgeOverCutoff {
        u: VertexId,
        v: VertexId,
        dist: f64,
        max_dist: f64,
    },
    #[error("{what} must be finite and non-negative, got {value}")]
    BadWeight { what: &'static str, value: f64 },
    #[error("max_dist must be positive and finite, got {0}")]
    BadCutoff(f64),
    #[error("pairwise distance table has {got} entries, expected {expected}")]
    PairDistShape { expected: usize, got: usize },
    #[error("pairwise distance from vertex {0} to itself must be 0")]
    PairDistDiagonal(VertexId),
    #[error("euclidean pairwise distances need coordinates for every vertex")]
    MissingCoordinates,
    #[error("coordinates given for {got} vertices, expected {expected}")]
    CoordinateCount { expected: usize, got: usize },
    #[error("path is empty")]
    EmptyPath,
    #[error("path for agent {agent} starts at {found}, task starts at {expected}")]
    WrongStart {
        agent: AgentId,
        expected: VertexId,
        found: VertexId,
    },
    #[error("path for agent {agent} ends at {found}, task goal is {expected}")]
    WrongGoal {
        agent: AgentId,
        expected: VertexId,
        found: VertexId,
    },
}

/// Outgoing edge record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub to: VertexId,
    pub dist: f64,
    pub risk: f64,
}

/// Directed graph `(V, E, W_d, W_c)` plus the pairwise distance oracle.
///
/// Immutable after construction; share it freely between solves.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointGraph {
    out: Vec<Vec<Edge>>,
    pair_dist: Vec<f64>,
    max_dist: f64,
    coords: Option<Vec<[f64; 2]>>,
    euclidean: bool,
}

impl WaypointGraph {
    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    pub fn num_edges(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn max_dist(&self) -> f64 {
        self.max_dist
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    /// True when the pairwise table was derived from the coordinates.
    pub fn pair_dist_is_euclidean(&self) -> bool {
        self.euclidean
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.out.len()
    }

    /// Outgoing edges of `u`, sorted by target.
    pub fn edges_from(&self, u: VertexId) -> &[Edge] {
        &self.out[u]
    }

    pub fn edge(&self, u: VertexId, v: VertexId) -> Option<&Edge> {
        let out = self.out.get(u)?;
        out.binary_search_by_key(&v, |e| e.to).ok().map(|i| &out[i])
    }

    /// All edges as `(from, edge)` pairs in (from, to) order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, &Edge)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, es)| es.iter().map(move |e| (u, e)))
    }

    /// Pairwise distance estimate between any two vertices.
    #[inline]
    pub fn pair_dist(&self, u: VertexId, v: VertexId) -> f64 {
        self.pair_dist[u * self.out.len() + v]
    }

    pub fn pair_dist_table(&self) -> &[f64] {
        &self.pair_dist
    }

    /// Reverse adjacency as `(from, risk)` lists, used by goal-directed bounds.
    pub fn reverse_adjacency(&self) -> Vec<Vec<(VertexId, f64)>> {
        let mut rev = vec![Vec::new(); self.num_vertices()];
        for (u, e) in self.edges() {
            rev[e.to].push((u, e.risk));
        }
        rev
    }

    /// Unweighted hop counts from `src` (`usize::MAX` when unreachable).
    pub fn hop_distances_from(&self, src: VertexId) -> Vec<usize> {
        let mut hops = vec![usize::MAX; self.num_vertices()];
        let mut queue = std::collections::VecDeque::new();
        hops[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for e in &self.out[u] {
                if hops[e.to] == usize::MAX {
                    hops[e.to] = hops[u] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        hops
    }
}

/// Source of the pairwise distance table handed to [`GraphBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub enum PairDistSource {
    /// Euclidean distances between the builder's coordinates.
    Euclidean,
    /// Row-major `|V| x |V|` table.
    Table(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct GraphBuilder {
    n: usize,
    max_dist: f64,
    edges: Vec<(VertexId, VertexId, f64, f64)>,
    coords: Option<Vec<[f64; 2]>>,
    pair_dist: PairDistSource,
}

impl GraphBuilder {
    pub fn new(n: usize, max_dist: f64) -> Self {
        GraphBuilder {
            n,
            max_dist,
            edges: Vec::new(),
            coords: None,
            pair_dist: PairDistSource::Euclidean,
        }
    }

    pub fn edge(mut self, u: VertexId, v: VertexId, dist: f64, risk: f64) -> Self {
        self.edges.push((u, v, dist, risk));
        self
    }

    /// Adds `u -> v` and `v -> u` with identical weights.
    pub fn undirected(self, u: VertexId, v: VertexId, dist: f64, risk: f64) -> Self {
        self.edge(u, v, dist, risk).edge(v, u, dist, risk)
    }

    pub fn coords(mut self, coords: Vec<[f64; 2]>) -> Self {
        self.coords = Some(coords);
        self
    }

    pub fn pair_dist(mut self, source: PairDistSource) -> Self {
        self.pair_dist = source;
        self
    }

    pub fn build(self) -> Result<WaypointGraph, GraphError> {
        let n = self.n;
        if !(self.max_dist.is_finite() && self.max_dist > 0.0) {
            return Err(GraphError::BadCutoff(self.max_dist));
        }
        if let Some(c) = &self.coords {
            if c.len() != n {
                return Err(GraphError::CoordinateCount {
                    expected: n,
                    got: c.len(),
                });
            }
            for p in c {
                for &x in p {
                    if !x.is_finite() {
                        return Err(GraphError::BadWeight {
                            what: "coordinate",
                            value: x,
                        });
                    }
                }
            }
        }

        let (pair_dist, euclidean) = match self.pair_dist {
            PairDistSource::Euclidean => {
                let coords = self.coords.as_ref().ok_or(GraphError::MissingCoordinates)?;
                let mut table = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        table[i * n + j] = euclid(coords[i], coords[j]);
                    }
                }
                (table, true)
            }
            PairDistSource::Table(table) => {
                if table.len() != n * n {
                    return Err(GraphError::PairDistShape {
                        expected: n * n,
                        got: table.len(),
                    });
                }
                (table, false)
            }
        };
        for &d in &pair_dist {
            check_weight("pair_dist", d)?;
        }
        for v in 0..n {
            if pair_dist[v * n + v] != 0.0 {
                return Err(GraphError::PairDistDiagonal(v));
            }
        }

        let mut out: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for (u, v, dist, risk) in self.edges {
            if u >= n {
                return Err(GraphError::UnknownVertex(u));
            }
            if v >= n {
                return Err(GraphError::UnknownVertex(v));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u, v));
            }
            check_weight("edge distance", dist)?;
            check_weight("edge risk", risk)?;
            if dist >= self.max_dist {
                return Err(GraphError::EdgeOverCutoff {
                    u,
                    v,
                    dist,
                    max_dist: self.max_dist,
                });
            }
            out[u].push(Edge { to: v, dist, risk });
        }
        for (u, es) in out.iter_mut().enumerate() {
            es.sort_by_key(|e| e.to);
            if let Some(w) = es.windows(2).find(|w| w[0].to == w[1].to) {
                return Err(GraphError::DuplicateEdge(u, w[0].to));
            }
        }

        Ok(WaypointGraph {
            out,
            pair_dist,
            max_dist: self.max_dist,
            coords: self.coords,
            euclidean,
        })
    }
}

fn check_weight(what: &'static str, value: f64) -> Result<(), GraphError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(GraphError::BadWeight { what, value })
    }
}

pub(crate) fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Start/goal pair of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentTask {
    pub agent: AgentId,
    pub start: VertexId,
    pub goal: VertexId,
}

impl AgentTask {
    pub fn new(agent: AgentId, start: VertexId, goal: VertexId) -> Self {
        AgentTask { agent, start, goal }
    }

    pub fn validate(&self, graph: &WaypointGraph) -> Result<(), GraphError> {
        for v in [self.start, self.goal] {
            if !graph.contains(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        Ok(())
    }
}

/// One vertex per unit timestep; repeated vertices are waits. After the
/// last entry the agent stays at its goal forever.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimedPath {
    pub agent: AgentId,
    pub vertices: Vec<VertexId>,
}

impl TimedPath {
    pub fn new(agent: AgentId, vertices: Vec<VertexId>) -> Self {
        TimedPath { agent, vertices }
    }

    /// Arrival timestep `T`.
    pub fn cost(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn goal(&self) -> VertexId {
        *self.vertices.last().expect("timed path is never empty")
    }

    /// Position at `t`, holding the final vertex after arrival.
    #[inline]
    pub fn position(&self, t: usize) -> VertexId {
        self.vertices[t.min(self.vertices.len() - 1)]
    }

    /// Motion `(from, to)` performed during step `t`.
    #[inline]
    pub fn motion(&self, t: usize) -> (VertexId, VertexId) {
        (self.position(t), self.position(t + 1))
    }

    /// Checks that every non-wait step is an edge.
    pub fn check_edges(&self, graph: &WaypointGraph) -> Result<(), GraphError> {
        if self.vertices.is_empty() {
            return Err(GraphError::EmptyPath);
        }
        for &v in &self.vertices {
            if !graph.contains(v) {
                return Err(GraphError::UnknownVertex(v));
            }
        }
        for w in self.vertices.windows(2) {
            if w[0] != w[1] && graph.edge(w[0], w[1]).is_none() {
                return Err(GraphError::MissingEdge(w[0], w[1]));
            }
        }
        Ok(())
    }

    /// Checks edges plus the start/goal of `task`.
    pub fn validate(&self, graph: &WaypointGraph, task: &AgentTask) -> Result<(), GraphError> {
        self.check_edges(graph)?;
        if self.start() != task.start {
            return Err(GraphError::WrongStart {
                agent: task.agent,
                expected: task.start,
                found: self.start(),
            });
        }
        if self.goal() != task.goal {
            return Err(GraphError::WrongGoal {
                agent: task.agent,
                expected: task.goal,
                found: self.goal(),
            });
        }
        Ok(())
    }

    pub fn risk(&self, graph: &WaypointGraph) -> Result<f64, GraphError> {
        path_risk(self, graph)
    }
}

impl fmt::Display for TimedPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent {}:", self.agent)?;
        for v in &self.vertices {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

/// Accumulated risk: sum of edge risks over traversed steps. Waits are free.
pub fn path_risk(path: &TimedPath, graph: &WaypointGraph) -> Result<f64, GraphError> {
    if path.vertices.is_empty() {
        return Err(GraphError::EmptyPath);
    }
    let mut risk = 0.0;
    for w in path.vertices.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        risk += graph
            .edge(w[0], w[1])
            .ok_or(GraphError::MissingEdge(w[0], w[1]))?
            .risk;
    }
    Ok(risk)
}

/// `J(Π)`: sum of arrival timesteps.
pub fn sum_of_costs<'a, I>(paths: I) -> usize
where
    I: IntoIterator<Item = &'a TimedPath>,
{
    paths.into_iter().map(TimedPath::cost).sum()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// s=0, a=1, b=2, b'=3, g=4. Short route s-a-g carries risk 10, the
    /// zero-risk route s-b-b'-g takes one extra step.
    pub fn diamond() -> WaypointGraph {
        GraphBuilder::new(5, 10.0)
            .coords(vec![
                [0.0, 0.0],
                [1.0, 1.0],
                [1.0, -1.0],
                [2.0, -1.0],
                [2.0, 0.0],
            ])
            .edge(0, 1, 1.0, 5.0)
            .edge(1, 4, 1.0, 5.0)
            .edge(0, 2, 1.0, 0.0)
            .edge(2, 3, 1.0, 0.0)
            .edge(3, 4, 1.0, 0.0)
            .build()
            .unwrap()
    }
}
