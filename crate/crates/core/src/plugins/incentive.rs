use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRecord {
    pub round: usize,
    pub client_id: usize,
    pub n_samples: usize,
    pub credit: f64,
}

/// Accumulated rewards per client and the contributions behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncentiveLedger {
    pub rewards: Vec<f64>,
    pub records: Vec<ContributionRecord>,
}

impl IncentiveLedger {
    pub fn new(n_clients: usize) -> Self {
        IncentiveLedger { rewards: vec![0.0; n_clients], records: Vec::new() }
    }

    /// Credits `reward_per_update * n_samples / 1000` for an accepted update.
    pub fn credit(&mut self, round: usize, client_id: usize, n_samples: usize, reward_per_update: f64) {
        let credit = reward_per_update * n_samples as f64 / 1000.0;
        self.rewards[client_id] += credit;
        self.records.push(ContributionRecord { round, client_id, n_samples, credit });
    }

    pub fn total(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// `clamp(p_base + p_gain * ln(1 + reward), p_base, 1)`.
pub fn participation_prob(p_base: f64, p_gain: f64, reward: f64) -> f64 {
    (p_base + p_gain * math::ln(1.0 + reward)).clamp(p_base, 1.0)
}
