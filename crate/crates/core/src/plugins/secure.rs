//! Secure aggregation stand-in: exact pairwise additive masking in fixed point
//! plus optional Gaussian noise.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::sim::fedavg::Update;
use crate::sim::rng::{tag, Stream};
use crate::sim::SimError;

/// Fixed-point scale, 2^16.
pub const SCALE: f64 = 65536.0;

pub fn to_fixed(x: f64) -> i64 {
    math::round(x * SCALE) as i64
}

pub fn from_fixed(v: i64) -> f64 {
    v as f64 / SCALE
}

fn pair_stream(seed: u64, i: u64, j: u64, round: u64) -> Stream {
    Stream::new(seed, tag::MASK, i << 32 | j, round)
}

/// Client `i`'s masked vector: its value plus `m_ij` for every `j > i` minus
/// `m_ji` for every `j < i`, in wrapping arithmetic. `peers` lists every
/// participant's id, including `i`.
pub fn mask(values: &[i64], i: u64, peers: &[u64], seed: u64, round: u64) -> Vec<i64> {
    let mut out = values.to_vec();
    for &j in peers {
        if j == i {
            continue;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let mut s = pair_stream(seed, lo, hi, round);
        for v in out.iter_mut() {
            let m = s.next_u64() as i64;
            *v = if i == lo { v.wrapping_add(m) } else { v.wrapping_sub(m) };
        }
    }
    out
}

/// Wrapping sum of the masked vectors of every participant.
pub fn masked_fixed_sum(values: &[(u64, Vec<i64>)], seed: u64, round: u64) -> Result<Vec<i64>, SimError> {
    if values.len() < 2 {
        return Err(SimError::MaskingCardinality(values.len()));
    }
    let peers: Vec<u64> = values.iter().map(|(id, _)| *id).collect();
    let d = values[0].1.len();
    let mut sum = vec![0i64; d];
    for (id, v) in values {
        if v.len() != d {
            return Err(SimError::DimensionMismatch { expected: d, found: v.len() });
        }
        for (s, m) in sum.iter_mut().zip(mask(v, *id, &peers, seed, round)) {
            *s = s.wrapping_add(m);
        }
    }
    Ok(sum)
}

/// Wrapping sum without masks.
pub fn plain_fixed_sum(values: &[(u64, Vec<i64>)]) -> Vec<i64> {
    let d = values.first().map_or(0, |(_, v)| v.len());
    let mut sum = vec![0i64; d];
    for (_, v) in values {
        for (s, x) in sum.iter_mut().zip(v) {
            *s = s.wrapping_add(*x);
        }
    }
    sum
}

/// Adds `N(0, sigma^2)` per coordinate from the client's noise stream.
pub fn add_noise(weights: &mut [f64], sigma: f64, seed: u64, client_id: u64, round: u64) {
    if sigma > 0.0 {
        let mut s = Stream::new(seed, tag::DP_NOISE, client_id, round);
        for w in weights.iter_mut() {
            *w += sigma * s.normal();
        }
    }
}

/// Sample-weighted mean of the (noised) updates. With masking the server only
/// ever sees masked fixed-point vectors and recovers their exact sum.
pub fn secure_sum(updates: &[Update], masking: bool, dp_sigma: f64, seed: u64, round: u64) -> Result<Vec<f64>, SimError> {
    if updates.is_empty() {
        return Err(SimError::EmptyUpdate);
    }
    if masking && updates.len() < 2 {
        return Err(SimError::MaskingCardinality(updates.len()));
    }
    let mut sorted: Vec<&Update> = updates.iter().collect();
    sorted.sort_by_key(|u| u.client_id);
    let noised: Vec<Update> = sorted
        .iter()
        .map(|u| {
            let mut w = u.weights.clone();
            add_noise(&mut w, dp_sigma, seed, u.client_id as u64, round);
            Update { client_id: u.client_id, weights: w, n_samples: u.n_samples }
        })
        .collect();
    if !masking {
        return crate::sim::fedavg::fedavg_aggregate(&noised);
    }
    let total: usize = noised.iter().map(|u| u.n_samples).sum();
    let fixed: Vec<(u64, Vec<i64>)> = noised
        .iter()
        .map(|u| (u.client_id as u64, u.weights.iter().map(|w| to_fixed(u.n_samples as f64 * w)).collect()))
        .collect();
    let sum = masked_fixed_sum(&fixed, seed, round)?;
    Ok(sum.into_iter().map(|v| from_fixed(v) / total as f64).collect())
}
