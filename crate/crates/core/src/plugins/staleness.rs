use alloc::vec::Vec;

/// Mixing rate for an update `staleness` versions old: `alpha / (1 + staleness)`.
pub fn staleness_weight(alpha: f64, staleness: u64) -> f64 {
    alpha / (1.0 + staleness as f64)
}

/// `(1 - a) * global + a * update` with `a` the staleness-discounted rate.
pub fn async_merge(global: &[f64], update: &[f64], staleness: u64, alpha: f64) -> Vec<f64> {
    let a = staleness_weight(alpha, staleness);
    global.iter().zip(update).map(|(g, u)| (1.0 - a) * g + a * u).collect()
}
