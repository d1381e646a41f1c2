//! Multi-agent swarm library with adaptive alertness.
//!
//! Agents exchange beliefs about a shared grid, score how responsive and
//! truthful their peers are, pick whom to consult with glowworm swarm
//! optimization, merge the consulted peers' reports weighted by reputation,
//! label every peer with one of four threat levels and scale their own query
//! rate with the resulting risk.

pub mod anomaly;
pub mod awareness;
mod error;
pub mod gso;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    distance, AgentId, AlertnessLevel, Belief, Category, CellId, Position, ThreatLevel, Tick,
};
pub use sim::{run_experiment, MetricsRecord, World, WorldConfig};
