//! Peer-to-peer model averaging.

use alloc::vec::Vec;

use crate::sim::rng::Stream;

fn average_pair(models: &mut [Vec<f64>], a: usize, b: usize) {
    if a == b {
        return;
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let (left, right) = models.split_at_mut(hi);
    for (x, y) in left[lo].iter_mut().zip(right[0].iter_mut()) {
        let mid = 0.5 * (*x + *y);
        *x = mid;
        *y = mid;
    }
}

/// One pass around the ring: member `i` averages with member `i + 1` in turn,
/// for `i = 0..n`. Returns the exchanged pairs.
pub fn gossip_ring(models: &mut [Vec<f64>]) -> Vec<(usize, usize)> {
    let n = models.len();
    if n < 2 {
        return Vec::new();
    }
    let pairs: Vec<(usize, usize)> = if n == 2 { alloc::vec![(0, 1)] } else { (0..n).map(|i| (i, (i + 1) % n)).collect() };
    for &(a, b) in &pairs {
        average_pair(models, a, b);
    }
    pairs
}

/// Each member in turn averages with `k` peers drawn from `stream`.
pub fn gossip_random_k(models: &mut [Vec<f64>], k: usize, stream: &mut Stream) -> Vec<(usize, usize)> {
    let n = models.len();
    let mut pairs = Vec::new();
    if n < 2 {
        return pairs;
    }
    for i in 0..n {
        for _ in 0..k.min(n - 1) {
            // uniform over the other members
            let mut j = stream.below(n as u64 - 1) as usize;
            if j >= i {
                j += 1;
            }
            average_pair(models, i, j);
            pairs.push((i, j));
        }
    }
    pairs
}
