//! Risk-bounded multi-agent path finding on dual-weighted waypoint graphs.
//!
//! Every edge carries a travel distance and a risk. Agents move one edge or
//! wait per timestep and stay at their goal once they arrive; a joint plan
//! must be free of disc collisions and keep the summed risk of all paths
//! under a global bound `Δ`. [`rbcbs::solve`] is the main entry point.

pub mod baselines;
pub mod collision;
pub mod generator;
pub mod graph;
pub mod instance;
pub mod lowlevel;
pub mod protocol;
pub mod rbcbs;

pub use collision::{CollisionConfig, Conflict, ConflictKind};
pub use generator::{build_synthetic_instance, Difficulty, GeneratorConfig, HazardSpec};
pub use graph::{
    path_risk, sum_of_costs, AgentId, AgentTask, GraphBuilder, PairDistSource, TimedPath, VertexId,
    WaypointGraph,
};
pub use instance::{Instance, InstanceError};
pub use protocol::{calibrate_interval, delta_at, Method, MethodConfig, RiskInterval, TrialRecord};
pub use rbcbs::{solve, AllocationStrategy, Solution, SolveError, SolveRequest};
