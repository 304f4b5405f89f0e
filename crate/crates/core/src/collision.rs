//! Conflict detection between timed paths.
//!
//! Agents are discs of a common radius `r` moving linearly along one graph
//! edge per timestep. Besides the discrete vertex and swap checks, every
//! pair of concurrent segments goes through a continuous-time test whose
//! quadratic `f(τ) = aτ² + bτ + c` (squared centre distance) is assembled
//! from the pairwise distance table alone, so it works on graphs with no
//! coordinate embedding.

use crate::graph::{AgentId, TimedPath, VertexId, WaypointGraph};

/// Coefficients at or below this magnitude are treated as a flat quadratic.
const FLAT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionConfig {
    pub radius: f64,
    /// Slack added to the `2r` threshold to absorb rounding noise.
    pub eps: f64,
}

impl CollisionConfig {
    pub fn new(radius: f64) -> Self {
        CollisionConfig { radius, eps: 1e-9 }
    }

    #[inline]
    pub fn threshold(&self) -> f64 {
        2.0 * self.radius + self.eps
    }
}

/// Straight-line motion of one agent during step `step`. `from == to` is a wait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MotionSegment {
    pub agent: AgentId,
    pub from: VertexId,
    pub to: VertexId,
    pub step: usize,
}

impl MotionSegment {
    pub fn of(path: &TimedPath, step: usize) -> Self {
        let (from, to) = path.motion(step);
        MotionSegment {
            agent: path.agent,
            from,
            to,
            step,
        }
    }

    pub fn is_wait(&self) -> bool {
        self.from == self.to
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    #[inline]
    pub fn eval(&self, tau: f64) -> f64 {
        (self.a * tau + self.b) * tau + self.c
    }
}

/// Squared-distance quadratic of two segments from distance queries only.
///
/// With `d` the table lookup and `p0→p1`, `q0→q1` the two motions:
/// `a = d(p0,p1)² + d(q0,q1)² + d(p0,q0)² + d(p1,q1)² − d(p0,q1)² − d(p1,q0)²`,
/// `b = d(p1,q0)² − d(p0,p1)² − 2·d(p0,q0)² − d(q0,q1)² + d(p0,q1)²`,
/// `c = d(p0,q0)²`.
pub fn quadratic_coefficients(
    graph: &WaypointGraph,
    (p0, p1): (VertexId, VertexId),
    (q0, q1): (VertexId, VertexId),
) -> Quadratic {
    let sq = |u, v| {
        let d = graph.pair_dist(u, v);
        d * d
    };
    let p0p1 = sq(p0, p1);
    let q0q1 = sq(q0, q1);
    let p0q0 = sq(p0, q0);
    let p1q1 = sq(p1, q1);
    let p0q1 = sq(p0, q1);
    let p1q0 = sq(p1, q0);
    Quadratic {
        a: p0p1 + q0q1 + p0q0 + p1q1 - p0q1 - p1q0,
        b: p1q0 - p0p1 - 2.0 * p0q0 - q0q1 + p0q1,
        c: p0q0,
    }
}

/// Outcome of the continuous-time test on one segment pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentCheck {
    pub collides: bool,
    /// Time of closest approach within the step.
    pub tau: f64,
    pub min_dist: f64,
    /// A slightly negative `f` was clamped to zero.
    pub clamped: bool,
    /// `a` was clearly negative (non-metric table); fell back to the endpoints.
    pub degenerate: bool,
}

/// Closest approach of a quadratic over `τ ∈ [0, 1]`.
pub fn closest_approach(q: &Quadratic, threshold: f64) -> SegmentCheck {
    let degenerate = q.a < -FLAT_EPS;
    let (tau, f) = if q.a > FLAT_EPS {
        let tau = (-q.b / (2.0 * q.a)).clamp(0.0, 1.0);
        (tau, q.eval(tau))
    } else {
        let (f0, f1) = (q.eval(0.0), q.eval(1.0));
        if f1 < f0 {
            (1.0, f1)
        } else {
            (0.0, f0)
        }
    };
    let clamped = f < 0.0;
    let min_dist = f.max(0.0).sqrt();
    SegmentCheck {
        collides: min_dist <= threshold,
        tau,
        min_dist,
        clamped,
        degenerate,
    }
}

/// Continuous-time disc–disc test for two concurrent motions.
pub fn check_segment_pair(
    graph: &WaypointGraph,
    a: (VertexId, VertexId),
    b: (VertexId, VertexId),
    cfg: &CollisionConfig,
) -> SegmentCheck {
    closest_approach(&quadratic_coefficients(graph, a, b), cfg.threshold())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConflictKind {
    /// Both agents occupy `vertex` at time `time`.
    Vertex { vertex: VertexId, time: usize },
    /// The agents traverse the same edge in opposite directions.
    EdgeSwap,
    /// Discs overlap mid-step on spatially close segments.
    Geometric { tau: f64, min_dist: f64 },
}

/// Collision between agents `first < second` during step `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conflict {
    pub first: MotionSegment,
    pub second: MotionSegment,
    pub step: usize,
    pub kind: ConflictKind,
}

impl Conflict {
    pub fn agents(&self) -> (AgentId, AgentId) {
        (self.first.agent, self.second.agent)
    }
}

/// Checks one pair of concurrent motions. Discrete checks win over the
/// geometric one so that constraints keep their vertex/edge meaning.
pub fn classify_motions(
    graph: &WaypointGraph,
    a: (VertexId, VertexId),
    b: (VertexId, VertexId),
    step: usize,
    cfg: &CollisionConfig,
) -> Option<ConflictKind> {
    if a.1 == b.1 {
        return Some(ConflictKind::Vertex {
            vertex: a.1,
            time: step + 1,
        });
    }
    if a.0 != a.1 && a.0 == b.1 && a.1 == b.0 {
        return Some(ConflictKind::EdgeSwap);
    }
    let check = check_segment_pair(graph, a, b, cfg);
    check.collides.then_some(ConflictKind::Geometric {
        tau: check.tau,
        min_dist: check.min_dist,
    })
}

/// True when two concurrent motions collide in any of the three senses.
#[inline]
pub fn motions_conflict(
    graph: &WaypointGraph,
    a: (VertexId, VertexId),
    b: (VertexId, VertexId),
    cfg: &CollisionConfig,
) -> bool {
    classify_motions(graph, a, b, 0, cfg).is_some()
}

/// Counters for numerically suspicious kernel evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelDiagnostics {
    pub clamps: u64,
    pub degenerate: u64,
}

fn pair_conflict(
    graph: &WaypointGraph,
    pi: &TimedPath,
    pj: &TimedPath,
    t: usize,
    cfg: &CollisionConfig,
    diag: &mut KernelDiagnostics,
) -> Option<Conflict> {
    let first = MotionSegment::of(pi, t);
    let second = MotionSegment::of(pj, t);
    let a = (first.from, first.to);
    let b = (second.from, second.to);
    let kind = if t == 0 && a.0 == b.0 {
        // co-located at time 0
        ConflictKind::Vertex {
            vertex: a.0,
            time: 0,
        }
    } else if a.1 == b.1 {
        ConflictKind::Vertex {
            vertex: a.1,
            time: t + 1,
        }
    } else if a.0 != a.1 && a.0 == b.1 && a.1 == b.0 {
        ConflictKind::EdgeSwap
    } else {
        let check = check_segment_pair(graph, a, b, cfg);
        diag.clamps += check.clamped as u64;
        diag.degenerate += check.degenerate as u64;
        if !check.collides {
            return None;
        }
        ConflictKind::Geometric {
            tau: check.tau,
            min_dist: check.min_dist,
        }
    };
    Some(Conflict {
        first,
        second,
        step: t,
        kind,
    })
}

/// Steps that must be swept: every step up to the latest arrival, plus the
/// final stationary configuration.
fn sweep_len(paths: &[&TimedPath]) -> usize {
    paths.iter().map(|p| p.cost()).max().unwrap_or(0) + 1
}

/// All conflicts, ordered by step and then by agent pair (in slice order).
pub fn detect_collisions(
    graph: &WaypointGraph,
    paths: &[&TimedPath],
    cfg: &CollisionConfig,
    diag: &mut KernelDiagnostics,
) -> Vec<Conflict> {
    let mut out = Vec::new();
    for t in 0..sweep_len(paths) {
        for (i, pi) in paths.iter().enumerate() {
            for pj in &paths[i + 1..] {
                if let Some(c) = pair_conflict(graph, pi, pj, t, cfg, diag) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Earliest conflict under the same ordering as [`detect_collisions`].
pub fn first_conflict(
    graph: &WaypointGraph,
    paths: &[&TimedPath],
    cfg: &CollisionConfig,
    diag: &mut KernelDiagnostics,
) -> Option<Conflict> {
    for t in 0..sweep_len(paths) {
        for (i, pi) in paths.iter().enumerate() {
            for pj in &paths[i + 1..] {
                if let Some(c) = pair_conflict(graph, pi, pj, t, cfg, diag) {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Number of conflicting (step, pair) combinations.
pub fn count_collisions(
    graph: &WaypointGraph,
    paths: &[&TimedPath],
    cfg: &CollisionConfig,
) -> usize {
    let mut diag = KernelDiagnostics::default();
    detect_collisions(graph, paths, cfg, &mut diag).len()
}
