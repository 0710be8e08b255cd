use alloc::vec::Vec;

use super::SelectorConfig;
use crate::sim::SimError;

/// What the selector knows about a client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub client_id: usize,
    pub speed: f64,
    pub bandwidth: f64,
}

/// Keeps clients meeting both thresholds, then the `top_k` fastest; equal
/// speeds go to the lower client id. Returned ids are ascending.
pub fn select_clients(candidates: &[Candidate], policy: &SelectorConfig) -> Result<Vec<usize>, SimError> {
    let mut eligible: Vec<&Candidate> =
        candidates.iter().filter(|c| c.speed >= policy.min_speed && c.bandwidth >= policy.min_bandwidth).collect();
    if eligible.is_empty() {
        return Err(SimError::EmptySelection);
    }
    eligible.sort_by(|a, b| b.speed.total_cmp(&a.speed).then(a.client_id.cmp(&b.client_id)));
    let mut chosen: Vec<usize> = eligible.iter().take(policy.top_k).map(|c| c.client_id).collect();
    chosen.sort_unstable();
    Ok(chosen)
}
