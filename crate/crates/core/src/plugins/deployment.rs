use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A converged model on offer, tagged with the capability it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCandidate {
    pub name: String,
    pub requirement: f64,
    pub accuracy: f64,
}

/// `(speed / max_speed) * (memory_rank / max_rank)`, in `[0, 1]`.
pub fn capability(speed: f64, max_speed: f64, memory_rank: u32, max_rank: u32) -> f64 {
    (speed / max_speed) * (memory_rank as f64 / max_rank as f64)
}

/// Index of the model each client receives: the most accurate candidate the
/// client can run, else the lightest. Ties go to the lower index.
pub fn match_deployment(candidates: &[ModelCandidate], capabilities: &[f64]) -> Vec<usize> {
    assert!(!candidates.is_empty(), "no model to deploy");
    let lightest = (0..candidates.len())
        .min_by(|&a, &b| candidates[a].requirement.total_cmp(&candidates[b].requirement).then(a.cmp(&b)))
        .unwrap_or(0);
    capabilities
        .iter()
        .map(|&cap| {
            (0..candidates.len())
                .filter(|&i| candidates[i].requirement <= cap)
                .max_by(|&a, &b| candidates[a].accuracy.total_cmp(&candidates[b].accuracy).then(b.cmp(&a)))
                .unwrap_or(lightest)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn model(name: &str, requirement: f64, accuracy: f64) -> ModelCandidate {
        ModelCandidate { name: name.into(), requirement, accuracy }
    }

    #[test]
    fn single_model_goes_everywhere() {
        assert_eq!(match_deployment(&[model("only", 0.0, 0.7)], &[0.0, 0.4, 1.0]), vec![0, 0, 0]);
    }

    #[test]
    fn threshold_filter() {
        let models = [model("heavy", 0.8, 0.9), model("light", 0.2, 0.8)];
        assert_eq!(match_deployment(&models, &[0.5, 0.9, 0.1]), vec![1, 0, 1]);
    }

    #[test]
    fn capability_score() {
        assert_eq!(capability(500.0, 1000.0, 2, 4), 0.25);
        assert_eq!(capability(1000.0, 1000.0, 4, 4), 1.0);
    }
}
