//! Deterministic discrete-time swarm simulation.
//!
//! Each tick runs six phases over all agents: perceive the local grid,
//! answer last tick's queries, score those answers, reselect communication
//! domains, send new queries and, on merge ticks, merge peer reports and
//! reassess threats. A phase only reads state committed by earlier phases.

mod config;
mod metrics;
mod rng;
mod world;

pub use config::{
    largest_remainder, AdversaryProfile, AwarenessParams, ProfileKind, ProfileProbs, ProfileTable,
    RiskParams, WorldConfig,
};
pub use metrics::{
    run_experiment, run_experiment_with, DetectionCounts, KindDetection, MetricsRecord, RunSummary,
    TickMetrics, QUERY_RATE_WINDOW,
};
pub use rng::{Phase, RngStreams};
pub use world::{Activity, Agent, PeerHistory, Query, World};
