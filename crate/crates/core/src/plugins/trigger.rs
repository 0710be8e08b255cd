use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerDecision {
    Keep,
    TriggerRetrain,
}

fn moving_average(history: &[f64], end: usize, window: usize) -> f64 {
    history[end + 1 - window..=end].iter().sum::<f64>() / window as f64
}

/// Decision after the last point of `history`: retrain when the latest moving
/// average falls more than `drop_threshold` below the best one seen so far.
/// Fewer than `window` points always keeps.
pub fn evaluate_replacement_trigger(history: &[f64], window: usize, drop_threshold: f64) -> TriggerDecision {
    assert!(window >= 1, "window must be positive");
    if history.len() < window {
        return TriggerDecision::Keep;
    }
    let last = history.len() - 1;
    let best = (window - 1..=last).map(|i| moving_average(history, i, window)).fold(f64::NEG_INFINITY, f64::max);
    if moving_average(history, last, window) < best - drop_threshold {
        TriggerDecision::TriggerRetrain
    } else {
        TriggerDecision::Keep
    }
}

/// Online form of [`evaluate_replacement_trigger`]; history restarts after
/// each trigger.
#[derive(Debug, Clone)]
pub struct ReplacementTrigger {
    window: usize,
    drop_threshold: f64,
    history: Vec<f64>,
}

impl ReplacementTrigger {
    pub fn new(window: usize, drop_threshold: f64) -> Self {
        ReplacementTrigger { window, drop_threshold, history: Vec::new() }
    }

    pub fn observe(&mut self, accuracy: f64) -> TriggerDecision {
        self.history.push(accuracy);
        let decision = evaluate_replacement_trigger(&self.history, self.window, self.drop_threshold);
        if decision == TriggerDecision::TriggerRetrain {
            self.history.clear();
        }
        decision
    }
}
