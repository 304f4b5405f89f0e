//! Instance files.
//!
//! One JSON document per instance:
//!
//! ```json
//! {
//!   "name": "syn-7",
//!   "max_dist": 0.4,
//!   "radius": 0.02,
//!   "vertices": [{"id": 0, "x": 0.1, "y": 0.2}, {"id": 1, "x": 0.3, "y": 0.2}],
//!   "edges": [{"u": 0, "v": 1, "dist": 0.2, "risk": 0.05}],
//!   "pair_dist": "euclidean",
//!   "agents": [{"id": 0, "start": 0, "goal": 1}]
//! }
//! ```
//!
//! `vertices` must list ids `0..n` in order; coordinates are optional but
//! all-or-nothing. Edges are directed. `pair_dist` is either the string
//! `"euclidean"` (distances between the coordinates) or a dense `n x n`
//! matrix given as a list of rows. `name` is optional.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AgentTask, GraphBuilder, GraphError, PairDistSource, WaypointGraph};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A graph, the agents' tasks and the agent radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: Option<String>,
    pub graph: WaypointGraph,
    pub tasks: Vec<AgentTask>,
    pub radius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    max_dist: f64,
    radius: f64,
    vertices: Vec<VertexDoc>,
    edges: Vec<EdgeDoc>,
    pair_dist: PairDistDoc,
    agents: Vec<AgentDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    u: usize,
    v: usize,
    dist: f64,
    risk: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PairDistDoc {
    Marker(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: usize,
    start: usize,
    goal: usize,
}

const EUCLIDEAN: &str = "euclidean";

impl Instance {
    pub fn new(graph: WaypointGraph, tasks: Vec<AgentTask>, radius: f64) -> Self {
        Instance {
            name: None,
            graph,
            tasks,
            radius,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.tasks.len()
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Self::from_doc(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance documents always serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    fn from_doc(doc: InstanceDoc) -> Result<Self, InstanceError> {
        let n = doc.vertices.len();
        for (i, v) in doc.vertices.iter().enumerate() {
            if v.id != i {
                return Err(InstanceError::Invalid(format!(
                    "vertex ids must be 0..{n} in order, found {} at position {i}",
                    v.id
                )));
            }
        }
        let coords: Option<Vec<[f64; 2]>> = match doc
            .vertices
            .iter()
            .filter(|v| v.x.is_some() && v.y.is_some())
            .count()
        {
            0 if doc.vertices.iter().all(|v| v.x.is_none() && v.y.is_none()) => None,
            k if k == n => Some(
                doc.vertices
                    .iter()
                    .map(|v| [v.x.unwrap(), v.y.unwrap()])
                    .collect(),
            ),
            _ => {
                return Err(InstanceError::Invalid(
                    "coordinates must be given for every vertex or for none".into(),
                ))
            }
        };

        let mut builder = GraphBuilder::new(n, doc.max_dist);
        if let Some(c) = coords {
            builder = builder.coords(c);
        }
        builder = match doc.pair_dist {
            PairDistDoc::Marker(m) if m == EUCLIDEAN => {
                builder.pair_dist(PairDistSource::Euclidean)
            }
            PairDistDoc::Marker(m) => {
                return Err(InstanceError::Invalid(format!(
                    "pair_dist must be \"{EUCLIDEAN}\" or a matrix, got \"{m}\""
                )))
            }
            PairDistDoc::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(InstanceError::Invalid(format!(
                        "pair_dist must be {n} x {n}"
                    )));
                }
                builder.pair_dist(PairDistSource::Table(rows.concat()))
            }
        };
        for e in &doc.edges {
            builder = builder.edge(e.u, e.v, e.dist, e.risk);
        }
        let graph = builder.build()?;

        let tasks: Vec<AgentTask> = doc
            .agents
            .iter()
            .map(|a| AgentTask::new(a.id, a.start, a.goal))
            .collect();
        for t in &tasks {
            t.validate(&graph)?;
        }
        let mut ids: Vec<_> = tasks.iter().map(|t| t.agent).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(InstanceError::Invalid("agent ids must be unique".into()));
        }
        if !(doc.radius.is_finite() && doc.radius > 0.0) {
            return Err(InstanceError::Invalid(format!(
                "radius must be positive, got {}",
                doc.radius
            )));
        }
        Ok(Instance {
            name: doc.name,
            graph,
            tasks,
            radius: doc.radius,
        })
    }

    fn to_doc(&self) -> InstanceDoc {
        let g = &self.graph;
        let n = g.num_vertices();
        let vertices = (0..n)
            .map(|id| {
                let c = g.coords().map(|c| c[id]);
                VertexDoc {
                    id,
                    x: c.map(|p| p[0]),
                    y: c.map(|p| p[1]),
                }
            })
            .collect();
        let edges = g
            .edges()
            .map(|(u, e)| EdgeDoc {
                u,
                v: e.to,
                dist: e.dist,
                risk: e.risk,
            })
            .collect();
        let pair_dist = if g.pair_dist_is_euclidean() {
            PairDistDoc::Marker(EUCLIDEAN.into())
        } else {
            PairDistDoc::Matrix(
                g.pair_dist_table()
                    .chunks(n.max(1))
                    .map(<[f64]>::to_vec)
                    .collect(),
            )
        };
        let agents = self
            .tasks
            .iter()
            .map(|t| AgentDoc {
                id: t.agent,
                start: t.start,
                goal: t.goal,
            })
            .collect();
        InstanceDoc {
            name: self.name.clone(),
            max_dist: g.max_dist(),
            radius: self.radius,
            vertices,
            edges,
            pair_dist,
            agents,
        }
    }
}
