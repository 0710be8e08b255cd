use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::plugins::PatternToggles;

/// Uniform range; `min == max` is a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn fixed(v: f64) -> Self {
        Range { min: v, max: v }
    }

    fn check(&self, what: &str, positive: bool) -> Result<(), SimError> {
        let ok = self.min.is_finite() && self.max.is_finite() && self.min <= self.max;
        let ok = ok && if positive { self.min > 0.0 } else { self.min >= 0.0 };
        if ok {
            Ok(())
        } else {
            Err(SimError::Config(format!("{what} range {}..{} is invalid", self.min, self.max)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSizes {
    Fixed(usize),
    Uniform { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchMode {
    FullBatch,
    Minibatch { size: usize },
}

/// Link parameters of a point-to-point connection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    /// Bytes per second.
    pub bandwidth: f64,
    /// Seconds.
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Client link bandwidth in bytes per second.
    pub bandwidth: Range,
    /// Client link base latency in seconds.
    pub latency: Range,
    /// Training throughput in samples per second.
    pub device_speed: Range,
    /// Fraction of clients whose speed and bandwidth are divided by
    /// `straggler_slowdown`.
    #[serde(default)]
    pub straggler_fraction: f64,
    #[serde(default = "one")]
    pub straggler_slowdown: f64,
    /// Edge node to central server link, used by the hierarchical aggregator.
    #[serde(default = "default_edge_link")]
    pub edge_link: LinkSpec,
}

fn one() -> f64 {
    1.0
}

fn default_edge_link() -> LinkSpec {
    LinkSpec { bandwidth: 1.0e7, latency: 0.01 }
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            bandwidth: Range::fixed(1.0e6),
            latency: Range::fixed(0.05),
            device_speed: Range::fixed(1000.0),
            straggler_fraction: 0.0,
            straggler_slowdown: 1.0,
            edge_link: default_edge_link(),
        }
    }
}

/// Injected failures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// From this round on the central server neither broadcasts nor aggregates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server_crash_round: Option<usize>,
    /// From this round on every label `y` becomes `(y + 1) mod classes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_drift_round: Option<usize>,
}

/// Minimum device capability needed to run each deployable model. A device
/// below the requirement of the model it receives scores zero accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRequirements {
    pub full_model: f64,
    pub light_model: f64,
}

impl Default for DeviceRequirements {
    fn default() -> Self {
        DeviceRequirements { full_model: 0.0, light_model: 0.0 }
    }
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_clients: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub samples_per_client: SampleSizes,
    /// Dirichlet concentration of per-client label proportions.
    pub label_skew_beta: f64,
    /// When set, clients form this many data groups (client `k` is in group
    /// `k mod n`) that share label proportions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_data_groups: Option<usize>,
    /// Radius of the sphere holding the class means.
    #[serde(default = "one")]
    pub class_separation: f64,
    pub rounds: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    pub batch_mode: BatchMode,
    #[serde(default)]
    pub network: NetworkSpec,
    /// Per-client probability of sitting out a round; each client draws its
    /// own value from the range.
    #[serde(default = "no_dropout")]
    pub dropout_prob: Range,
    #[serde(default)]
    pub pattern_toggles: PatternToggles,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_accuracy: Option<f64>,
    /// Reject plugins whose required initial pattern is off.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub faults: FaultSpec,
    #[serde(default)]
    pub device_requirements: DeviceRequirements,
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
    #[serde(default = "default_client_test_samples")]
    pub client_test_samples: usize,
}

fn no_dropout() -> Range {
    Range::fixed(0.0)
}

fn default_test_samples() -> usize {
    2000
}

fn default_client_test_samples() -> usize {
    200
}

impl SimConfig {
    /// A small IID scenario with every plugin off.
    pub fn baseline(seed: u64) -> Self {
        SimConfig {
            n_clients: 10,
            n_features: 10,
            n_classes: 5,
            samples_per_client: SampleSizes::Fixed(200),
            label_skew_beta: 1.0,
            n_data_groups: None,
            class_separation: 1.0,
            rounds: 20,
            local_epochs: 1,
            learning_rate: 0.5,
            batch_mode: BatchMode::FullBatch,
            network: NetworkSpec::default(),
            dropout_prob: no_dropout(),
            pattern_toggles: PatternToggles::default(),
            seed,
            target_accuracy: None,
            strict: false,
            faults: FaultSpec::default(),
            device_requirements: DeviceRequirements::default(),
            test_samples: default_test_samples(),
            client_test_samples: default_client_test_samples(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, SimError> {
        let config: SimConfig = serde_json::from_str(text).map_err(|e| SimError::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks ranges and plugin compatibility.
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("n_clients", self.n_clients),
            ("n_features", self.n_features),
            ("n_classes", self.n_classes),
            ("rounds", self.rounds),
            ("test_samples", self.test_samples),
            ("client_test_samples", self.client_test_samples),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(SimError::Config(format!("{name} must be positive")));
            }
        }
        if self.n_classes < 2 {
            return Err(SimError::Config("n_classes must be at least 2".into()));
        }
        match self.samples_per_client {
            SampleSizes::Fixed(0) => return Err(SimError::Config("samples_per_client must be positive".into())),
            SampleSizes::Uniform { min, max } if min == 0 || min > max => {
                return Err(SimError::Config(format!("samples_per_client range {min}..{max} is invalid")));
            }
            _ => {}
        }
        if !(self.label_skew_beta.is_finite() && self.label_skew_beta > 0.0) {
            return Err(SimError::Config("label_skew_beta must be positive".into()));
        }
        if !(self.class_separation.is_finite() && self.class_separation > 0.0) {
            return Err(SimError::Config("class_separation must be positive".into()));
        }
        if self.n_data_groups == Some(0) {
            return Err(SimError::Config("n_data_groups must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(SimError::Config("learning_rate must be finite and non-negative".into()));
        }
        if let BatchMode::Minibatch { size: 0 } = self.batch_mode {
            return Err(SimError::Config("minibatch size must be positive".into()));
        }
        if let Some(t) = self.target_accuracy {
            if !(0.0..=1.0).contains(&t) {
                return Err(SimError::Config("target_accuracy must lie in [0, 1]".into()));
            }
        }
        self.network.bandwidth.check("bandwidth", true)?;
        self.network.latency.check("latency", false)?;
        self.network.device_speed.check("device_speed", true)?;
        if !(0.0..=1.0).contains(&self.network.straggler_fraction) || !(self.network.straggler_slowdown >= 1.0) {
            return Err(SimError::Config("straggler_fraction must lie in [0, 1] and straggler_slowdown be >= 1".into()));
        }
        let edge = self.network.edge_link;
        if !(edge.bandwidth > 0.0 && edge.latency >= 0.0 && edge.bandwidth.is_finite() && edge.latency.is_finite()) {
            return Err(SimError::Config("edge link parameters are invalid".into()));
        }
        self.dropout_prob.check("dropout_prob", false)?;
        if self.dropout_prob.max > 1.0 {
            return Err(SimError::Config("dropout_prob must lie in [0, 1]".into()));
        }
        self.pattern_toggles.validate(self)
    }
}
