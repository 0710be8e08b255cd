//! Deterministic discrete-event federated learning simulator.
//!
//! Clients hold synthetic Gaussian-mixture data, train multinomial logistic
//! regression locally and exchange models over simulated links. All
//! randomness comes from [`rng::Stream`]s keyed by the config seed, so a
//! `(config, seed)` pair always reproduces the same metrics and event log.

pub mod config;
pub mod data;
pub mod events;
pub mod fedavg;
pub mod model;
pub mod network;
pub mod rng;
mod run;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use config::{BatchMode, DeviceRequirements, FaultSpec, LinkSpec, NetworkSpec, Range, SampleSizes, SimConfig};
pub use events::{EventKind, LogRecord};
pub use network::TrafficCounters;
pub use run::simulate;

use crate::plugins::registry::{ClientRegistry, CoVersioningRegistry};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("incompatible plug-ins: {0}")]
    Incompatible(String),
    #[error("training diverged: {0}")]
    NonFinite(String),
    #[error("no updates to aggregate")]
    EmptyUpdate,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no client satisfies the selection policy")]
    EmptySelection,
    #[error("masking needs at least two participants, got {0}")]
    MaskingCardinality(usize),
    #[error("global version {0} is already recorded")]
    DuplicateVersion(u64),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::Config(_) => "config_error",
            SimError::Incompatible(_) => "incompatible_plugins",
            SimError::NonFinite(_) => "non_finite",
            SimError::EmptyUpdate => "empty_update",
            SimError::DimensionMismatch { .. } => "dimension_mismatch",
            SimError::EmptySelection => "empty_selection",
            SimError::MaskingCardinality(_) => "masking_cardinality",
            SimError::DuplicateVersion(_) => "duplicate_version",
        }
    }
}

/// Where the converged model ended up and how well it runs there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentOutcome {
    pub capabilities: Vec<f64>,
    /// `"full"` or `"light"` per client.
    pub assigned_models: Vec<String>,
    /// Zero where the device cannot run its assigned model.
    pub on_device_accuracy: Vec<f64>,
    pub mean_on_device_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    /// Global test accuracy after each round (after every `n` merges when
    /// asynchronous).
    pub accuracy_per_round: Vec<f64>,
    pub final_accuracy: f64,
    pub per_task_accuracy: Vec<f64>,
    /// Accuracy of the model each client uses, on its own held-out data.
    pub per_client_accuracy: Vec<f64>,
    pub accuracy_variance_across_clients: f64,
    #[serde(flatten)]
    pub traffic: TrafficCounters,
    pub simulated_wall_time: f64,
    pub round_end_times: Vec<f64>,
    pub rounds_completed: usize,
    pub global_version: u64,
    pub rounds_to_target: Option<usize>,
    pub time_to_target: Option<f64>,
    pub uplink_messages_to_target: Option<u64>,
    /// Accepted updates per client.
    pub participation_count: Vec<u64>,
    pub mean_participation: f64,
    pub selected_clients: Option<Vec<usize>>,
    pub cluster_groups: Option<Vec<usize>>,
    pub edge_assignment: Option<Vec<usize>>,
    pub accuracy_at_crash: Option<f64>,
    pub accuracy_gain_after_crash: Option<f64>,
    pub deployment: DeploymentOutcome,
    pub replacement_triggers: usize,
    pub incentive_rewards: Option<Vec<f64>>,
    pub client_registry_head: Option<String>,
    pub co_versioning_head: Option<String>,
    pub co_versioning_entries: usize,
    pub discarded_stale_updates: u64,
    pub discarded_rounds: u64,
    pub event_count: u64,
    pub event_log_digest: String,
}

impl SimMetrics {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub metrics: SimMetrics,
    /// Final global weights; one block per task when multi-task.
    pub global_model: Vec<f64>,
    /// The model each client ends up using.
    pub client_models: Vec<Vec<f64>>,
    /// Processed events, when requested.
    pub events: Vec<LogRecord>,
    pub client_registry: Option<ClientRegistry>,
    pub co_versioning: Option<CoVersioningRegistry>,
}

/// Runs `config` to completion.
pub fn run_simulation(config: &SimConfig) -> Result<SimMetrics, SimError> {
    simulate(config, false).map(|out| out.metrics)
}
