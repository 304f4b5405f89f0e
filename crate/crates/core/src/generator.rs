//! Synthetic instances: random geometric graphs over the unit square with
//! risk drawn from a field of Gaussian hazards.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{euclid, AgentTask, GraphBuilder, WaypointGraph};
use crate::instance::Instance;

/// Default agent radius of generated instances.
pub const DEFAULT_RADIUS: f64 = 0.02;

const MAX_ATTEMPTS: usize = 200;
const PLACEMENT_TRIES: usize = 2000;
const HAZARD_SAMPLES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("need at least one agent")]
    NoAgents,
    #[error("{agents} agents do not fit on {vertices} vertices")]
    TooManyAgents { agents: usize, vertices: usize },
    #[error("invalid generator parameter: {0}")]
    BadParameter(String),
    #[error("no connected instance after {0} attempts")]
    Failed(usize),
}

/// Gaussian hazards placed uniformly in the square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardSpec {
    pub count: usize,
    /// Peak hazard density.
    pub amplitude: f64,
    /// Standard deviation of each hazard.
    pub sigma: f64,
}

impl HazardSpec {
    pub fn gaussian(count: usize, amplitude: f64, sigma: f64) -> Self {
        HazardSpec {
            count,
            amplitude,
            sigma,
        }
    }

    pub fn none() -> Self {
        Self::gaussian(0, 0.0, 0.1)
    }
}

/// Stand-in for easy / medium / hard scenes: harder instances get stronger,
/// wider hazards and a sparser graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    #[default]
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn hazard(self) -> HazardSpec {
        match self {
            Difficulty::Easy => HazardSpec::gaussian(2, 1.0, 0.10),
            Difficulty::Medium => HazardSpec::gaussian(3, 2.0, 0.14),
            Difficulty::Hard => HazardSpec::gaussian(4, 4.0, 0.18),
        }
    }

    /// Multiplier on the connection radius.
    pub fn connectivity(self) -> f64 {
        match self {
            Difficulty::Easy => 1.2,
            Difficulty::Medium => 1.0,
            Difficulty::Hard => 0.85,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Difficulty::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown difficulty '{s}' (expected easy, medium or hard)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_vertices: usize,
    pub n_agents: usize,
    pub hazard: HazardSpec,
    pub radius: f64,
    /// Connection radius is `connectivity * sqrt(ln(n + 1) / n)`.
    pub connectivity: f64,
}

impl GeneratorConfig {
    pub fn new(n_vertices: usize, n_agents: usize, hazard: HazardSpec) -> Self {
        GeneratorConfig {
            n_vertices,
            n_agents,
            hazard,
            radius: DEFAULT_RADIUS,
            connectivity: 1.0,
        }
    }

    pub fn for_difficulty(n_vertices: usize, n_agents: usize, difficulty: Difficulty) -> Self {
        GeneratorConfig {
            connectivity: difficulty.connectivity(),
            ..Self::new(n_vertices, n_agents, difficulty.hazard())
        }
    }

    pub fn connection_radius(&self) -> f64 {
        let n = self.n_vertices as f64;
        self.connectivity * ((n + 1.0).ln() / n).sqrt()
    }

    /// Minimum spacing between sampled vertices; keeps parked agents apart.
    pub fn min_separation(&self) -> f64 {
        (0.3 / (self.n_vertices as f64).sqrt()).max(2.5 * self.radius)
    }

    fn validate(&self) -> Result<(), GenerateError> {
        if self.n_vertices < 2 {
            return Err(GenerateError::TooFewVertices(self.n_vertices));
        }
        if self.n_agents == 0 {
            return Err(GenerateError::NoAgents);
        }
        if self.n_agents > self.n_vertices {
            return Err(GenerateError::TooManyAgents {
                agents: self.n_agents,
                vertices: self.n_vertices,
            });
        }
        let h = &self.hazard;
        if !(h.amplitude.is_finite() && h.amplitude >= 0.0 && h.sigma.is_finite() && h.sigma > 0.0)
        {
            return Err(GenerateError::BadParameter(format!("hazard {h:?}")));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(GenerateError::BadParameter(format!(
                "radius {}",
                self.radius
            )));
        }
        if !(self.connectivity.is_finite() && self.connectivity > 0.0) {
            return Err(GenerateError::BadParameter(format!(
                "connectivity {}",
                self.connectivity
            )));
        }
        Ok(())
    }
}

/// Hazard density at `p`.
pub fn hazard_at(centers: &[[f64; 2]], spec: &HazardSpec, p: [f64; 2]) -> f64 {
    let s2 = 2.0 * spec.sigma * spec.sigma;
    centers
        .iter()
        .map(|c| {
            let d = euclid(*c, p);
            spec.amplitude * (-d * d / s2).exp()
        })
        .sum()
}

/// Segment length times the mean hazard along it (midpoint rule).
fn segment_risk(centers: &[[f64; 2]], spec: &HazardSpec, a: [f64; 2], b: [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for k in 0..HAZARD_SAMPLES {
        let s = (k as f64 + 0.5) / HAZARD_SAMPLES as f64;
        acc += hazard_at(
            centers,
            spec,
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
        );
    }
    euclid(a, b) * acc / HAZARD_SAMPLES as f64
}

/// Same as [`generate`] with the default radius and connectivity.
pub fn build_synthetic_instance(
    seed: u64,
    n_vertices: usize,
    n_agents: usize,
    hazard: &HazardSpec,
) -> Result<Instance, GenerateError> {
    generate(seed, &GeneratorConfig::new(n_vertices, n_agents, *hazard))
}

/// Deterministic in `(seed, config)`. The graph is connected, every task
/// has `start != goal`, and starts and goals are pairwise distinct.
pub fn generate(seed: u64, config: &GeneratorConfig) -> Result<Instance, GenerateError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<[f64; 2]> = (0..config.hazard.count)
        .map(|_| [rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85)])
        .collect();
    let cutoff = config.connection_radius();
    let sep = config.min_separation();

    for _ in 0..MAX_ATTEMPTS {
        let Some(points) = place_points(&mut rng, config.n_vertices, sep) else {
            continue;
        };
        let mut builder = GraphBuilder::new(config.n_vertices, cutoff).coords(points.clone());
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = euclid(points[i], points[j]);
                if d < cutoff {
                    let risk = segment_risk(&centers, &config.hazard, points[i], points[j]);
                    builder = builder.undirected(i, j, d, risk);
                }
            }
        }
        let graph = builder
            .build()
            .expect("generated graphs are valid by construction");
        if !connected(&graph) {
            continue;
        }
        let tasks = assign_tasks(&mut rng, config.n_vertices, config.n_agents);
        let mut inst = Instance::new(graph, tasks, config.radius);
        inst.name = Some(format!("syn-{seed}"));
        return Ok(inst);
    }
    Err(GenerateError::Failed(MAX_ATTEMPTS))
}

fn place_points(rng: &mut ChaCha8Rng, n: usize, sep: f64) -> Option<Vec<[f64; 2]>> {
    let mut points: Vec<[f64; 2]> = Vec::with_capacity(n);
    let mut tries = 0;
    while points.len() < n {
        tries += 1;
        if tries > PLACEMENT_TRIES * n {
            return None;
        }
        let p = [rng.gen::<f64>(), rng.gen::<f64>()];
        if points.iter().all(|q| euclid(*q, p) >= sep) {
            points.push(p);
        }
    }
    Some(points)
}

fn connected(graph: &WaypointGraph) -> bool {
    graph.hop_distances_from(0).iter().all(|&h| h != usize::MAX)
}

fn assign_tasks(rng: &mut ChaCha8Rng, n: usize, agents: usize) -> Vec<AgentTask> {
    let mut starts: Vec<usize> = (0..n).collect();
    let mut goals: Vec<usize> = (0..n).collect();
    loop {
        starts.shuffle(rng);
        goals.shuffle(rng);
        if (0..agents).all(|i| starts[i] != goals[i]) {
            return (0..agents)
                .map(|i| AgentTask::new(i, starts[i], goals[i]))
                .collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let h = HazardSpec::gaussian(3, 2.0, 0.15);
        let a = build_synthetic_instance(7, 40, 4, &h).unwrap();
        let b = build_synthetic_instance(7, 40, 4, &h).unwrap();
        assert_eq!(a, b);
        let c = build_synthetic_instance(8, 40, 4, &h).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_amplitude_gives_zero_risk() {
        let h = HazardSpec::gaussian(3, 0.0, 0.15);
        let inst = build_synthetic_instance(1, 20, 2, &h).unwrap();
        assert!(inst.graph.edges().all(|(_, e)| e.risk == 0.0));
    }

    #[test]
    fn invariants_hold() {
        for seed in 0..20 {
            for d in Difficulty::ALL {
                let inst = generate(
                    seed,
                    &GeneratorConfig::for_difficulty(10 + seed as usize, 3, d),
                )
                .unwrap();
                let g = &inst.graph;
                assert!(g
                    .edges()
                    .all(|(_, e)| e.dist < g.max_dist() && e.risk >= 0.0));
                let mut s: Vec<_> = inst.tasks.iter().map(|t| t.start).collect();
                let mut t: Vec<_> = inst.tasks.iter().map(|t| t.goal).collect();
                s.sort_unstable();
                t.sort_unstable();
                s.dedup();
                t.dedup();
                assert_eq!((s.len(), t.len()), (3, 3));
                assert!(inst.tasks.iter().all(|t| t.start != t.goal));
            }
        }
    }

    #[test]
    fn bad_parameters() {
        let h = HazardSpec::none();
        assert_eq!(
            build_synthetic_instance(0, 1, 1, &h),
            Err(GenerateError::TooFewVertices(1))
        );
        assert_eq!(
            build_synthetic_instance(0, 5, 0, &h),
            Err(GenerateError::NoAgents)
        );
        assert!(matches!(
            build_synthetic_instance(0, 3, 4, &h),
            Err(GenerateError::TooManyAgents { .. })
        ));
    }

    #[test]
    fn hazard_peaks_at_center() {
        let h = HazardSpec::gaussian(1, 2.0, 0.1);
        assert_eq!(hazard_at(&[[0.5, 0.5]], &h, [0.5, 0.5]), 2.0);
        assert!(hazard_at(&[[0.5, 0.5]], &h, [0.9, 0.9]) < 0.01);
    }
}
