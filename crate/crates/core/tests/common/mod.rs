//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the solver code except to build graphs.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rbcbs_core::graph::{GraphBuilder, TimedPath, WaypointGraph};
use rbcbs_core::lowlevel::{Constraint, Location, Polarity};

/// Random directed graph on `n` points of the unit square. Edge risks are
/// small integers so that ties are common.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p_edge: f64) -> WaypointGraph {
    let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen(), rng.gen()]).collect();
    let mut b = GraphBuilder::new(n, 2.0).coords(coords.clone());
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(p_edge) {
                let d = ((coords[u][0] - coords[v][0]).powi(2)
                    + (coords[u][1] - coords[v][1]).powi(2))
                .sqrt();
                b = b.edge(u, v, d, rng.gen_range(0..6) as f64);
            }
        }
    }
    b.build().unwrap()
}

pub fn is_move(graph: &WaypointGraph, u: usize, v: usize) -> bool {
    u == v || graph.edges_from(u).iter().any(|e| e.to == v)
}

pub fn walk_risk(graph: &WaypointGraph, walk: &[usize]) -> f64 {
    walk.windows(2)
        .filter(|w| w[0] != w[1])
        .map(|w| {
            graph
                .edges_from(w[0])
                .iter()
                .find(|e| e.to == w[1])
                .unwrap()
                .risk
        })
        .sum()
}

/// Every vertex sequence of exactly `len + 1` entries starting at `start`
/// whose consecutive entries are waits or edges.
pub fn walks_of_len(
    graph: &WaypointGraph,
    start: usize,
    len: usize,
    waits: bool,
) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![start];
    fn rec(
        g: &WaypointGraph,
        len: usize,
        waits: bool,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == len + 1 {
            out.push(cur.clone());
            return;
        }
        let u = *cur.last().unwrap();
        for v in 0..g.num_vertices() {
            if (v == u && waits) || (v != u && is_move(g, u, v)) {
                cur.push(v);
                rec(g, len, waits, cur, out);
                cur.pop();
            }
        }
    }
    rec(graph, len, waits, &mut cur, &mut out);
    out
}

/// `(length, risk)` of every edge-only walk from `start` to `goal` with at
/// most `max_len` steps.
pub fn goal_walk_outcomes(
    graph: &WaypointGraph,
    start: usize,
    goal: usize,
    max_len: usize,
) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(start, 0usize, 0.0f64)];
    while let Some((u, len, risk)) = stack.pop() {
        if u == goal {
            out.push((len, risk));
        }
        if len == max_len {
            continue;
        }
        for e in graph.edges_from(u) {
            stack.push((e.to, len + 1, risk + e.risk));
        }
    }
    out
}

/// Non-dominated `(length, risk)` pairs, sorted by length.
pub fn pareto_filter(points: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(usize, f64)> = Vec::new();
    for p in pts {
        if out.last().is_none_or(|q| p.1 < q.1) {
            out.push(p);
        }
    }
    out
}

/// Position of a path at time `t`, parked at the goal afterwards.
pub fn at(path: &[usize], t: usize) -> usize {
    path[t.min(path.len() - 1)]
}

/// Does the path satisfy every one of its own constraints?
pub fn satisfies(path: &[usize], constraints: &[Constraint]) -> bool {
    constraints.iter().all(|c| {
        let holds = match c.location {
            Location::Vertex(v) => at(path, c.time) == v,
            Location::Motion { from, to } => at(path, c.time) == from && at(path, c.time + 1) == to,
        };
        match c.polarity {
            Polarity::Positive => holds,
            Polarity::Negative => !holds,
        }
    })
}

/// Minimum distance over `τ ∈ [0, 1]` between points moving linearly
/// `p0 → p1` and `q0 → q1`, via the dot-product form.
pub fn segment_min_dist(p0: [f64; 2], p1: [f64; 2], q0: [f64; 2], q1: [f64; 2]) -> f64 {
    let d0 = [p0[0] - q0[0], p0[1] - q0[1]];
    let v = [
        (p1[0] - p0[0]) - (q1[0] - q0[0]),
        (p1[1] - p0[1]) - (q1[1] - q0[1]),
    ];
    let vv = v[0] * v[0] + v[1] * v[1];
    let tau = if vv > 0.0 {
        (-(d0[0] * v[0] + d0[1] * v[1]) / vv).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((d0[0] + tau * v[0]).powi(2) + (d0[1] + tau * v[1]).powi(2)).sqrt()
}

/// Same quantity by sampling `samples + 1` evenly spaced instants.
pub fn dense_min_dist(
    p0: [f64; 2],
    p1: [f64; 2],
    q0: [f64; 2],
    q1: [f64; 2],
    samples: usize,
) -> f64 {
    (0..=samples)
        .map(|k| {
            let s = k as f64 / samples as f64;
            let dx = (p0[0] + s * (p1[0] - p0[0])) - (q0[0] + s * (q1[0] - q0[0]));
            let dy = (p0[1] + s * (p1[1] - p0[1])) - (q0[1] + s * (q1[1] - q0[1]));
            (dx * dx + dy * dy).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Geometric check of a joint plan: discs of radius `r` never come within
/// `2r` of each other during any step, including the final parked state.
pub fn jointly_safe(coords: &[[f64; 2]], paths: &[&[usize]], r: f64) -> bool {
    let steps = paths.iter().map(|p| p.len()).max().unwrap_or(1);
    for t in 0..steps {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                let (a0, a1) = (at(paths[i], t), at(paths[i], t + 1));
                let (b0, b1) = (at(paths[j], t), at(paths[j], t + 1));
                let d = segment_min_dist(coords[a0], coords[a1], coords[b0], coords[b1]);
                if d <= 2.0 * r + 1e-9 {
                    return false;
                }
            }
        }
    }
    true
}

/// Canonical single-agent plans: walks from `start` ending at `goal` with
/// at most `horizon` steps whose last step is not a wait at the goal.
pub fn canonical_plans(
    graph: &WaypointGraph,
    start: usize,
    goal: usize,
    horizon: usize,
) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for len in 0..=horizon {
        for w in walks_of_len(graph, start, len, true) {
            if w[len] == goal && (len == 0 || w[len - 1] != goal) {
                out.push(w);
            }
        }
    }
    out
}

/// Minimum sum of costs over pairs of canonical plans (each at most
/// `horizon` steps) that are jointly safe with total risk at most `delta`.
pub fn joint_optimum(
    graph: &WaypointGraph,
    tasks: &[(usize, usize)],
    horizon: usize,
    delta: f64,
    r: f64,
) -> Option<usize> {
    assert_eq!(tasks.len(), 2);
    let coords = graph.coords().unwrap();
    let a = canonical_plans(graph, tasks[0].0, tasks[0].1, horizon);
    let b = canonical_plans(graph, tasks[1].0, tasks[1].1, horizon);
    let mut best: Option<usize> = None;
    for pa in &a {
        let ra = walk_risk(graph, pa);
        for pb in &b {
            let j = pa.len() + pb.len() - 2;
            if best.is_some_and(|x| j >= x) {
                continue;
            }
            if ra + walk_risk(graph, pb) > delta + 1e-9 {
                continue;
            }
            if jointly_safe(coords, &[pa, pb], r) {
                best = Some(j);
            }
        }
    }
    best
}

pub fn path_vertices(p: &TimedPath) -> &[usize] {
    &p.vertices
}
