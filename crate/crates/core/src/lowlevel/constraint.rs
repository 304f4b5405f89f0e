use std::collections::{HashMap, HashSet};

use crate::collision::{motions_conflict, CollisionConfig};
use crate::graph::{AgentId, TimedPath, VertexId, WaypointGraph};

/// Where a constraint applies. Vertex constraints refer to the instant
/// `time`; motion constraints to the step from `time` to `time + 1`
/// (`from == to` constrains a wait).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Vertex(VertexId),
    Motion { from: VertexId, to: VertexId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// The agent must not be at the location.
    Negative,
    /// The agent must be at the location; every other agent is barred from
    /// anything that would collide with it.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub agent: AgentId,
    pub location: Location,
    pub time: usize,
    pub polarity: Polarity,
}

impl Constraint {
    pub fn vertex(agent: AgentId, v: VertexId, time: usize, polarity: Polarity) -> Self {
        Constraint {
            agent,
            location: Location::Vertex(v),
            time,
            polarity,
        }
    }

    pub fn motion(
        agent: AgentId,
        from: VertexId,
        to: VertexId,
        time: usize,
        polarity: Polarity,
    ) -> Self {
        Constraint {
            agent,
            location: Location::Motion { from, to },
            time,
            polarity,
        }
    }

    /// Latest instant the constraint refers to.
    pub fn last_instant(&self) -> usize {
        match self.location {
            Location::Vertex(_) => self.time,
            Location::Motion { .. } => self.time + 1,
        }
    }
}

/// Constraints of one agent compiled into lookup tables, including the
/// negatives derived from other agents' positive constraints.
#[derive(Debug, Clone, Default)]
pub struct AgentConstraints {
    agent: AgentId,
    forbidden_vertices: HashSet<(VertexId, usize)>,
    forbidden_motions: HashSet<(VertexId, VertexId, usize)>,
    /// Mandatory motions of other agents, keyed by step.
    foreign_motions: HashMap<usize, Vec<(VertexId, VertexId)>>,
    required_vertices: HashMap<usize, VertexId>,
    required_motions: HashMap<usize, (VertexId, VertexId)>,
    /// Two different mandatory positions at the same instant.
    contradictory: bool,
    collision: Option<CollisionConfig>,
    max_instant: usize,
    count: usize,
}

impl AgentConstraints {
    /// No constraints at all.
    pub fn empty(agent: AgentId) -> Self {
        AgentConstraints {
            agent,
            ..Default::default()
        }
    }

    /// Compiles the constraints relevant to `agent` out of a node's full set.
    /// `collision` is needed to turn other agents' positive motion
    /// constraints into negatives for this agent.
    pub fn build<'a, I>(agent: AgentId, constraints: I, collision: Option<CollisionConfig>) -> Self
    where
        I: IntoIterator<Item = &'a Constraint>,
    {
        let mut out = AgentConstraints::empty(agent);
        out.collision = collision;
        for c in constraints {
            out.add(c);
        }
        out
    }

    fn add(&mut self, c: &Constraint) {
        let own = c.agent == self.agent;
        if !own && c.polarity == Polarity::Negative {
            return;
        }
        self.count += 1;
        self.max_instant = self.max_instant.max(c.last_instant());
        match (own, c.polarity, c.location) {
            (true, Polarity::Negative, Location::Vertex(v)) => {
                self.forbidden_vertices.insert((v, c.time));
            }
            (true, Polarity::Negative, Location::Motion { from, to }) => {
                self.forbidden_motions.insert((from, to, c.time));
            }
            (true, Polarity::Positive, Location::Vertex(v)) => {
                self.require_vertex(v, c.time);
            }
            (true, Polarity::Positive, Location::Motion { from, to }) => {
                match self.required_motions.insert(c.time, (from, to)) {
                    Some(prev) if prev != (from, to) => self.contradictory = true,
                    _ => {}
                }
                self.require_vertex(from, c.time);
                self.require_vertex(to, c.time + 1);
            }
            (false, _, Location::Vertex(v)) => {
                self.forbidden_vertices.insert((v, c.time));
            }
            (false, _, Location::Motion { from, to }) => {
                self.foreign_motions
                    .entry(c.time)
                    .or_default()
                    .push((from, to));
            }
        }
    }

    fn require_vertex(&mut self, v: VertexId, t: usize) {
        match self.required_vertices.insert(t, v) {
            Some(prev) if prev != v => self.contradictory = true,
            _ => {}
        }
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    /// Number of constraints that affect this agent.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Latest instant referenced by any constraint; the problem is
    /// time-invariant afterwards.
    pub fn max_instant(&self) -> usize {
        self.max_instant
    }

    pub fn is_contradictory(&self) -> bool {
        self.contradictory
    }

    #[inline]
    pub fn vertex_allowed(&self, v: VertexId, t: usize) -> bool {
        if self.forbidden_vertices.contains(&(v, t)) {
            return false;
        }
        match self.required_vertices.get(&t) {
            Some(&req) => req == v,
            None => true,
        }
    }

    /// Whether moving `from -> to` during step `t` is allowed, including the
    /// arrival vertex at `t + 1`. The departure vertex is assumed checked.
    #[inline]
    pub fn motion_allowed(
        &self,
        graph: &WaypointGraph,
        from: VertexId,
        to: VertexId,
        t: usize,
    ) -> bool {
        if !self.vertex_allowed(to, t + 1) {
            return false;
        }
        if self.forbidden_motions.contains(&(from, to, t)) {
            return false;
        }
        if let Some(&req) = self.required_motions.get(&t) {
            if req != (from, to) {
                return false;
            }
        }
        if let Some(foreign) = self.foreign_motions.get(&t) {
            let cfg = self
                .collision
                .as_ref()
                .expect("foreign positive constraints need a collision config");
            if foreign
                .iter()
                .any(|&m| motions_conflict(graph, (from, to), m, cfg))
            {
                return false;
            }
        }
        true
    }

    /// Earliest arrival time `T` from which the agent may stay at `goal`
    /// forever without violating anything.
    pub fn earliest_rest(&self, graph: &WaypointGraph, goal: VertexId) -> usize {
        let mut rest = 0;
        let mut bump = |t: usize| rest = rest.max(t + 1);
        for &(v, t) in &self.forbidden_vertices {
            if v == goal {
                bump(t);
            }
        }
        for &(from, to, t) in &self.forbidden_motions {
            if from == goal && to == goal {
                bump(t);
            }
        }
        for (&t, &v) in &self.required_vertices {
            if v != goal {
                bump(t);
            }
        }
        for (&t, &m) in &self.required_motions {
            if m != (goal, goal) {
                bump(t);
            }
        }
        if let Some(cfg) = &self.collision {
            for (&t, foreign) in &self.foreign_motions {
                if foreign
                    .iter()
                    .any(|&m| motions_conflict(graph, (goal, goal), m, cfg))
                {
                    bump(t);
                }
            }
        }
        rest
    }

    /// Whether a complete path (followed by resting at its last vertex)
    /// satisfies every constraint.
    pub fn admits(&self, graph: &WaypointGraph, path: &TimedPath) -> bool {
        if self.contradictory || path.vertices.is_empty() {
            return false;
        }
        let horizon = path.cost().max(self.max_instant);
        if !self.vertex_allowed(path.position(0), 0) {
            return false;
        }
        for t in 0..horizon {
            let (u, v) = path.motion(t);
            if !self.motion_allowed(graph, u, v, t) {
                return false;
            }
        }
        true
    }
}
