/// Averages the shared block across tasks in place. `stacked` holds one
/// `n_classes x (n_features + 1)` model per task; the shared block is columns
/// `0..shared_dims` of every class row.
pub fn share_block(stacked: &mut [f64], n_tasks: usize, n_classes: usize, n_features: usize, shared_dims: usize) {
    let cols = n_features + 1;
    let d = n_classes * cols;
    debug_assert_eq!(stacked.len(), n_tasks * d);
    for c in 0..n_classes {
        for j in 0..shared_dims.min(n_features) {
            let at = c * cols + j;
            let mean = (0..n_tasks).map(|t| stacked[t * d + at]).sum::<f64>() / n_tasks as f64;
            for t in 0..n_tasks {
                stacked[t * d + at] = mean;
            }
        }
    }
}
