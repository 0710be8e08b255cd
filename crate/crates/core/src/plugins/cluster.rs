//! Client grouping.

use alloc::vec;
use alloc::vec::Vec;

use crate::sim::rng::Stream;

const ITERATIONS: usize = 20;

fn distance2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (g, c) in centroids.iter().enumerate() {
        let d = distance2(point, c);
        if d < best_d {
            best = g;
            best_d = d;
        }
    }
    best
}

/// k-means over label histograms: `k` distinct points chosen by `stream` seed
/// the centroids, then 20 Lloyd iterations. Distance ties go to the lower
/// group id. An emptied group takes over the point farthest from its centroid,
/// so every group stays non-empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, stream: &mut Stream) -> Vec<usize> {
    let n = points.len();
    assert!(k >= 1 && k <= n, "k must lie in 1..=n");
    let mut order: Vec<usize> = (0..n).collect();
    stream.shuffle(&mut order);
    let mut seeds: Vec<usize> = order[..k].to_vec();
    seeds.sort_unstable();
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| points[i].clone()).collect();
    let mut assignment = vec![0; n];

    for _ in 0..ITERATIONS {
        for (i, p) in points.iter().enumerate() {
            assignment[i] = nearest(p, &centroids);
        }
        for g in 0..k {
            if assignment.iter().all(|&a| a != g) {
                let far = (0..n)
                    .filter(|&i| assignment.iter().filter(|&&a| a == assignment[i]).count() > 1)
                    .max_by(|&a, &b| {
                        distance2(&points[a], &centroids[assignment[a]])
                            .total_cmp(&distance2(&points[b], &centroids[assignment[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("k <= n leaves a group with two members");
                assignment[far] = g;
            }
        }
        let mut next = vec![vec![0.0; points[0].len()]; k];
        let mut sizes = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sizes[assignment[i]] += 1;
            for (c, v) in next[assignment[i]].iter_mut().zip(p) {
                *c += v;
            }
        }
        for (c, size) in next.iter_mut().zip(&sizes) {
            for v in c.iter_mut() {
                *v /= *size as f64;
            }
        }
        if next == centroids {
            break;
        }
        centroids = next;
    }
    assignment
}

/// Groups from precomputed labels, `label mod n_groups`.
pub fn by_group_label(labels: &[usize], n_groups: usize) -> Vec<usize> {
    labels.iter().map(|l| l % n_groups).collect()
}
