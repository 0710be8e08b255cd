//! Multinomial logistic regression.
//!
//! Weights are a `classes x (features + 1)` row-major matrix whose last column
//! is the bias.

use alloc::vec;
use alloc::vec::Vec;

use super::data::Dataset;
use super::rng::Stream;
use super::{BatchMode, SimError};
use crate::math;

pub fn dim(n_classes: usize, n_features: usize) -> usize {
    n_classes * (n_features + 1)
}

/// Class probabilities for one sample, written into `out`.
fn softmax_into(weights: &[f64], n_classes: usize, x: &[f64], out: &mut [f64]) {
    let stride = x.len() + 1;
    for (c, o) in out.iter_mut().enumerate().take(n_classes) {
        let row = &weights[c * stride..(c + 1) * stride];
        let mut z = row[x.len()];
        for (w, v) in row.iter().zip(x) {
            z += w * v;
        }
        *o = z;
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = math::exp(*o - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Mean cross-entropy and its gradient over the rows in `rows`.
pub fn loss_and_gradient(weights: &[f64], n_classes: usize, data: &Dataset, rows: &[usize]) -> (f64, Vec<f64>) {
    let f = data.n_features;
    let stride = f + 1;
    let mut grad = vec![0.0; weights.len()];
    let mut p = vec![0.0; n_classes];
    let mut loss = 0.0;
    for &i in rows {
        let x = data.row(i);
        let y = data.labels[i];
        softmax_into(weights, n_classes, x, &mut p);
        loss -= math::ln(p[y].max(f64::MIN_POSITIVE));
        for (c, pc) in p.iter().enumerate() {
            let err = pc - if c == y { 1.0 } else { 0.0 };
            let g = &mut grad[c * stride..(c + 1) * stride];
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += err * xj;
            }
            g[f] += err;
        }
    }
    let n = rows.len().max(1) as f64;
    for g in &mut grad {
        *g /= n;
    }
    (loss / n, grad)
}

pub fn loss(weights: &[f64], n_classes: usize, data: &Dataset) -> f64 {
    let rows: Vec<usize> = (0..data.len()).collect();
    loss_and_gradient(weights, n_classes, data, &rows).0
}

pub fn gradient(weights: &[f64], n_classes: usize, data: &Dataset) -> Vec<f64> {
    let rows: Vec<usize> = (0..data.len()).collect();
    loss_and_gradient(weights, n_classes, data, &rows).1
}

/// Most probable class; ties go to the lower class index.
pub fn predict(weights: &[f64], n_classes: usize, x: &[f64]) -> usize {
    let stride = x.len() + 1;
    let mut best = 0;
    let mut best_z = f64::NEG_INFINITY;
    for c in 0..n_classes {
        let row = &weights[c * stride..(c + 1) * stride];
        let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + row[x.len()];
        if z > best_z {
            best = c;
            best_z = z;
        }
    }
    best
}

pub fn accuracy(weights: &[f64], n_classes: usize, data: &Dataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct = (0..data.len()).filter(|&i| predict(weights, n_classes, data.row(i)) == data.labels[i]).count();
    correct as f64 / data.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub weights: Vec<f64>,
    /// `epochs * samples / device_speed` seconds.
    pub compute_time: f64,
}

/// Runs `epochs` passes of gradient descent from `weights`.
pub fn local_train(
    weights: &[f64],
    n_classes: usize,
    data: &Dataset,
    epochs: usize,
    learning_rate: f64,
    mode: BatchMode,
    device_speed: f64,
    shuffle: &mut Stream,
) -> Result<TrainOutcome, SimError> {
    let mut w = weights.to_vec();
    let mut rows: Vec<usize> = (0..data.len()).collect();
    for _ in 0..epochs {
        match mode {
            BatchMode::FullBatch => step(&mut w, n_classes, data, &rows, learning_rate)?,
            BatchMode::Minibatch { size } => {
                shuffle.shuffle(&mut rows);
                for batch in rows.chunks(size) {
                    step(&mut w, n_classes, data, batch, learning_rate)?;
                }
            }
        }
    }
    Ok(TrainOutcome { weights: w, compute_time: epochs as f64 * data.len() as f64 / device_speed })
}

fn step(w: &mut [f64], n_classes: usize, data: &Dataset, rows: &[usize], lr: f64) -> Result<(), SimError> {
    let (loss, grad) = loss_and_gradient(w, n_classes, data, rows);
    for (wi, gi) in w.iter_mut().zip(&grad) {
        *wi -= lr * gi;
    }
    if !loss.is_finite() || w.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite(alloc::format!("loss {loss} with learning rate {lr}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::tag;

    fn random_instance(seed: u64) -> (Vec<f64>, usize, Dataset) {
        let mut s = Stream::new(seed, 99, 0, 0);
        let c = 2 + s.below(4) as usize;
        let f = 1 + s.below(6) as usize;
        let n = 1 + s.below(20) as usize;
        let mut data = Dataset::empty(f);
        for _ in 0..n {
            let x: Vec<f64> = (0..f).map(|_| s.normal()).collect();
            data.push(&x, s.below(c as u64) as usize);
        }
        let w = (0..dim(c, f)).map(|_| s.normal()).collect();
        (w, c, data)
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..100 {
            let (w, c, data) = random_instance(seed);
            let analytic = gradient(&w, c, &data);
            let h = 1e-5;
            for i in 0..w.len() {
                let mut plus = w.clone();
                let mut minus = w.clone();
                plus[i] += h;
                minus[i] -= h;
                let numeric = (loss(&plus, c, &data) - loss(&minus, c, &data)) / (2.0 * h);
                let scale = analytic[i].abs().max(numeric.abs()).max(1e-3);
                assert!((analytic[i] - numeric).abs() / scale < 1e-5, "seed {seed}, coord {i}");
            }
        }
    }

    #[test]
    fn zero_epochs_and_zero_lr_leave_model_unchanged() {
        let (w, c, data) = random_instance(3);
        let mut s = Stream::new(0, tag::SHUFFLE, 0, 0);
        let out = local_train(&w, c, &data, 0, 0.1, BatchMode::FullBatch, 10.0, &mut s).unwrap();
        assert_eq!(out.weights, w);
        assert_eq!(out.compute_time, 0.0);
        let out = local_train(&w, c, &data, 3, 0.0, BatchMode::Minibatch { size: 4 }, 10.0, &mut s).unwrap();
        assert_eq!(out.weights, w);
    }

    #[test]
    fn one_full_batch_epoch_is_one_gradient_step() {
        let (w, c, data) = random_instance(8);
        let g = gradient(&w, c, &data);
        let mut s = Stream::new(0, tag::SHUFFLE, 0, 0);
        let out = local_train(&w, c, &data, 1, 0.3, BatchMode::FullBatch, 4.0, &mut s).unwrap();
        let expected: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - 0.3 * gi).collect();
        assert_eq!(out.weights, expected);
        assert_eq!(out.compute_time, data.len() as f64 / 4.0);
    }

    #[test]
    fn divergence_is_reported() {
        let mut data = Dataset::empty(2);
        data.push(&[1e10, -1e10], 0);
        data.push(&[-1e10, 1e10], 1);
        let mut s = Stream::new(0, tag::SHUFFLE, 0, 0);
        let r = local_train(&[0.0; 6], 2, &data, 50, 1e300, BatchMode::FullBatch, 1.0, &mut s);
        assert!(matches!(r, Err(SimError::NonFinite(_))));
    }
}
