use alloc::vec::Vec;

use crate::sim::data::Dataset;
use crate::sim::rng::Stream;

/// Feature jitter added to each synthesized sample.
pub const JITTER_SIGMA: f64 = 0.05;

/// Copy of `data` in which every present class is topped up to the majority
/// count with jittered resamples of its own rows. Absent classes stay absent,
/// so a single-class dataset comes back unchanged.
pub fn balance_local_data(data: &Dataset, n_classes: usize, stream: &mut Stream) -> Dataset {
    let mut out = data.clone();
    let counts = data.class_counts(n_classes);
    let majority = counts.iter().copied().max().unwrap_or(0);
    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == majority {
            continue;
        }
        let rows: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        for _ in count..majority {
            let src = rows[stream.below(rows.len() as u64) as usize];
            let x: Vec<f64> = data.row(src).iter().map(|v| v + JITTER_SIGMA * stream.normal()).collect();
            out.push(&x, class);
        }
    }
    out
}
