//! Patterns as simulator plug-ins.
//!
//! Each pattern that has runtime mechanics gets a parameter block under
//! `pattern_toggles` in [`SimConfig`](crate::SimConfig); a present block turns
//! the plug-in on. The training configurator has no block: the configuration
//! surface itself (config files, command line, service) plays that role.

pub mod compressor;
pub mod data_handler;
pub mod deployment;
pub mod gossip;
pub mod incentive;
pub mod multi_task;
pub mod registry;
pub mod secure;
pub mod selector;
pub mod cluster;
pub mod staleness;
pub mod trigger;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::sim::{SimConfig, SimError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryConfig {
    #[serde(default)]
    pub hash_chained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorConfig {
    #[serde(default)]
    pub min_speed: f64,
    #[serde(default)]
    pub min_bandwidth: f64,
    pub top_k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    ByLabelDistribution,
    ByGroupLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub n_groups: usize,
    pub grouping: Grouping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorConfig {
    pub bits: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoVersioningConfig {
    #[serde(default = "yes")]
    pub hash_chained: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerConfig {
    pub window: usize,
    pub drop_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentConfig {
    /// Capability the selector demands before handing out the full model.
    pub capability_threshold: f64,
    /// Quantization of the light model.
    #[serde(default = "four")]
    pub light_bits: u8,
}

fn four() -> u8 {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiTaskConfig {
    pub n_tasks: usize,
    pub shared_dims: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataHandlerConfig {
    #[serde(default = "yes")]
    pub oversample_to_balance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncentiveConfig {
    pub reward_per_update: f64,
    /// Participation gain per unit of log reward.
    pub p_gain: f64,
    /// Baseline participation probability; defaults to each client's own
    /// `1 - dropout_prob`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_base: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsyncConfig {
    pub alpha: f64,
    pub max_staleness: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Ring,
    RandomK { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecentralisedConfig {
    pub topology: Topology,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeAssignment {
    /// Edge `g mod n_edges` for data group `g`; clients without a group use
    /// their id.
    #[default]
    ByGroupLabel,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchicalConfig {
    pub n_edges: usize,
    #[serde(default)]
    pub assignment: EdgeAssignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecureConfig {
    pub masking: bool,
    #[serde(default)]
    pub dp_sigma: f64,
}

/// Plug-in parameter blocks keyed by pattern id; absent means off.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternToggles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_registry: Option<RegistryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_selector: Option<SelectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_cluster: Option<ClusterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_compressor: Option<CompressorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_co_versioning_registry: Option<CoVersioningConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_replacement_trigger: Option<TriggerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deployment_selector: Option<DeploymentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_task_model_trainer: Option<MultiTaskConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heterogeneous_data_handler: Option<DataHandlerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incentive_registry: Option<IncentiveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asynchronous_aggregator: Option<AsyncConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decentralised_aggregator: Option<DecentralisedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchical_aggregator: Option<HierarchicalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secure_aggregator: Option<SecureConfig>,
}

/// Pattern ids that have a plug-in, in declaration order.
pub const PLUGIN_PATTERNS: [&str; 14] = [
    "client_registry",
    "client_selector",
    "client_cluster",
    "message_compressor",
    "model_co_versioning_registry",
    "model_replacement_trigger",
    "deployment_selector",
    "multi_task_model_trainer",
    "heterogeneous_data_handler",
    "incentive_registry",
    "asynchronous_aggregator",
    "decentralised_aggregator",
    "hierarchical_aggregator",
    "secure_aggregator",
];

/// Pairs that cannot run together.
pub const INCOMPATIBLE: [(&str, &str); 2] =
    [("decentralised_aggregator", "hierarchical_aggregator"), ("decentralised_aggregator", "asynchronous_aggregator")];

impl PatternToggles {
    pub fn is_on(&self, pattern_id: &str) -> bool {
        match pattern_id {
            "client_registry" => self.client_registry.is_some(),
            "client_selector" => self.client_selector.is_some(),
            "client_cluster" => self.client_cluster.is_some(),
            "message_compressor" | "model_compressor" => self.message_compressor.is_some(),
            "model_co_versioning_registry" => self.model_co_versioning_registry.is_some(),
            "model_replacement_trigger" => self.model_replacement_trigger.is_some(),
            "deployment_selector" => self.deployment_selector.is_some(),
            "multi_task_model_trainer" => self.multi_task_model_trainer.is_some(),
            "heterogeneous_data_handler" => self.heterogeneous_data_handler.is_some(),
            "incentive_registry" => self.incentive_registry.is_some(),
            "asynchronous_aggregator" => self.asynchronous_aggregator.is_some(),
            "decentralised_aggregator" => self.decentralised_aggregator.is_some(),
            "hierarchical_aggregator" => self.hierarchical_aggregator.is_some(),
            "secure_aggregator" => self.secure_aggregator.is_some(),
            _ => false,
        }
    }

    /// Turns a plug-in off; returns whether it was on. Unknown ids are
    /// rejected.
    pub fn remove(&mut self, pattern_id: &str) -> Result<bool, SimError> {
        fn take<T>(slot: &mut Option<T>) -> bool {
            slot.take().is_some()
        }
        Ok(match pattern_id {
            "client_registry" => take(&mut self.client_registry),
            "client_selector" => take(&mut self.client_selector),
            "client_cluster" => take(&mut self.client_cluster),
            "message_compressor" | "model_compressor" => take(&mut self.message_compressor),
            "model_co_versioning_registry" => take(&mut self.model_co_versioning_registry),
            "model_replacement_trigger" => take(&mut self.model_replacement_trigger),
            "deployment_selector" => take(&mut self.deployment_selector),
            "multi_task_model_trainer" => take(&mut self.multi_task_model_trainer),
            "heterogeneous_data_handler" => take(&mut self.heterogeneous_data_handler),
            "incentive_registry" => take(&mut self.incentive_registry),
            "asynchronous_aggregator" => take(&mut self.asynchronous_aggregator),
            "decentralised_aggregator" => take(&mut self.decentralised_aggregator),
            "hierarchical_aggregator" => take(&mut self.hierarchical_aggregator),
            "secure_aggregator" => take(&mut self.secure_aggregator),
            other => return Err(SimError::Config(format!("`{other}` has no simulator plug-in"))),
        })
    }

    pub fn enabled(&self) -> Vec<&'static str> {
        PLUGIN_PATTERNS.into_iter().filter(|p| self.is_on(p)).collect()
    }

    /// Parameter ranges, the incompatibility matrix and, in strict mode, the
    /// complement requirements.
    pub fn validate(&self, config: &SimConfig) -> Result<(), SimError> {
        for (a, b) in INCOMPATIBLE {
            if self.is_on(a) && self.is_on(b) {
                return Err(SimError::Incompatible(format!("{a} cannot be combined with {b}")));
            }
        }
        if let Some(secure) = &self.secure_aggregator {
            if secure.masking && self.asynchronous_aggregator.is_some() && self.hierarchical_aggregator.is_none() {
                return Err(SimError::Incompatible(
                    "masked secure aggregation needs at least two updates per sum; asynchronous merging \
                     aggregates one update at a time unless edges batch them (enable hierarchical_aggregator)"
                        .into(),
                ));
            }
            if !(secure.dp_sigma.is_finite() && secure.dp_sigma >= 0.0) {
                return Err(SimError::Config("dp_sigma must be finite and non-negative".into()));
            }
        }
        if config.strict && self.client_registry.is_none() {
            for dependent in ["client_selector", "client_cluster"] {
                if self.is_on(dependent) {
                    return Err(SimError::Config(format!("{dependent} requires client_registry in strict mode")));
                }
            }
        }
        if let Some(s) = &self.client_selector {
            if s.top_k == 0 || !(s.min_speed >= 0.0) || !(s.min_bandwidth >= 0.0) {
                return Err(SimError::Config("client_selector needs top_k >= 1 and non-negative thresholds".into()));
            }
        }
        if let Some(c) = &self.client_cluster {
            if c.n_groups < 1 || c.n_groups > config.n_clients {
                return Err(SimError::Config(format!("client_cluster n_groups must lie in 1..={}", config.n_clients)));
            }
        }
        if let Some(c) = &self.message_compressor {
            if !(2..=16).contains(&c.bits) {
                return Err(SimError::Config("message_compressor bits must lie in [2, 16]".into()));
            }
        }
        if let Some(t) = &self.model_replacement_trigger {
            if t.window == 0 || !(t.drop_threshold >= 0.0) {
                return Err(SimError::Config("model_replacement_trigger needs window >= 1 and threshold >= 0".into()));
            }
        }
        if let Some(d) = &self.deployment_selector {
            if !(2..=16).contains(&d.light_bits) || !d.capability_threshold.is_finite() {
                return Err(SimError::Config("deployment_selector parameters are invalid".into()));
            }
        }
        if let Some(m) = &self.multi_task_model_trainer {
            if m.n_tasks < 2 {
                return Err(SimError::Config("multi_task_model_trainer needs at least two tasks".into()));
            }
            if m.shared_dims > config.n_features {
                return Err(SimError::Config(format!(
                    "shared_dims {} exceeds the {} features",
                    m.shared_dims, config.n_features
                )));
            }
        }
        if let Some(i) = &self.incentive_registry {
            let base_ok = i.p_base.map_or(true, |p| (0.0..=1.0).contains(&p));
            if !(i.reward_per_update >= 0.0 && i.p_gain >= 0.0 && base_ok) {
                return Err(SimError::Config("incentive_registry parameters are invalid".into()));
            }
        }
        if let Some(a) = &self.asynchronous_aggregator {
            if !(0.0..=1.0).contains(&a.alpha) {
                return Err(SimError::Config("asynchronous_aggregator alpha must lie in [0, 1]".into()));
            }
        }
        if let Some(DecentralisedConfig { topology: Topology::RandomK { k } }) = &self.decentralised_aggregator {
            if *k == 0 {
                return Err(SimError::Config("random_k topology needs k >= 1".into()));
            }
        }
        if let Some(h) = &self.hierarchical_aggregator {
            if h.n_edges == 0 {
                return Err(SimError::Config("hierarchical_aggregator needs at least one edge".into()));
            }
        }
        Ok(())
    }
}
