//! Fixtures shared by the benchmarks.

use rbcbs_core::generator::{generate, Difficulty, GeneratorConfig};
use rbcbs_core::graph::{GraphBuilder, WaypointGraph};
use rbcbs_core::Instance;

/// `k x k` four-connected grid with unit spacing. Risk peaks in the middle
/// so that short and safe routes differ.
pub fn hazard_grid(k: usize) -> WaypointGraph {
    let coords: Vec<[f64; 2]> = (0..k * k)
        .map(|i| [(i % k) as f64, (i / k) as f64])
        .collect();
    let c = (k as f64 - 1.0) / 2.0;
    let risk = |p: [f64; 2]| {
        let d2 = (p[0] - c).powi(2) + (p[1] - c).powi(2);
        (-d2 / (k as f64)).exp()
    };
    let mut pairs = Vec::new();
    for i in 0..k * k {
        if i % k + 1 < k {
            pairs.push((i, i + 1));
        }
        if i / k + 1 < k {
            pairs.push((i, i + k));
        }
    }
    let mut b = GraphBuilder::new(k * k, 1.5).coords(coords.clone());
    for (i, j) in pairs {
        let r = 0.5 * (risk(coords[i]) + risk(coords[j]));
        b = b.edge(i, j, 1.0, r).edge(j, i, 1.0, r);
    }
    b.build().expect("grid is well formed")
}

/// Generated instance of the given size; panics if the generator gives up.
pub fn synthetic(seed: u64, vertices: usize, agents: usize) -> Instance {
    generate(
        seed,
        &GeneratorConfig::for_difficulty(vertices, agents, Difficulty::Hard),
    )
    .expect("generator succeeds")
}
