//! Plain centralized softmax regression, written independently of the
//! simulator's model code, used as an oracle for federated runs.

#![allow(dead_code)]

use fedarch_core::sim::data::Dataset;

pub fn pool<'a>(sets: impl IntoIterator<Item = &'a Dataset>) -> Dataset {
    let mut out: Option<Dataset> = None;
    for s in sets {
        let o = out.get_or_insert_with(|| Dataset::empty(s.n_features));
        for i in 0..s.len() {
            o.push(s.row(i), s.labels[i]);
        }
    }
    out.expect("at least one dataset")
}

fn logits(w: &[f64], classes: usize, x: &[f64]) -> Vec<f64> {
    let f = x.len();
    (0..classes)
        .map(|c| {
            let mut z = w[c * (f + 1) + f];
            for j in 0..f {
                z += w[c * (f + 1) + j] * x[j];
            }
            z
        })
        .collect()
}

pub fn mean_gradient(w: &[f64], classes: usize, data: &Dataset) -> Vec<f64> {
    let f = data.n_features;
    let mut g = vec![0.0; w.len()];
    for i in 0..data.len() {
        let x = data.row(i);
        let z = logits(w, classes, x);
        let m = z.iter().cloned().fold(f64::MIN, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        for c in 0..classes {
            let r = e[c] / s - if data.labels[i] == c { 1.0 } else { 0.0 };
            for j in 0..f {
                g[c * (f + 1) + j] += r * x[j];
            }
            g[c * (f + 1) + f] += r;
        }
    }
    g.iter().map(|v| v / data.len() as f64).collect()
}

pub fn mean_loss(w: &[f64], classes: usize, data: &Dataset) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        let z = logits(w, classes, data.row(i));
        let y = data.labels[i];
        let m = z.iter().cloned().fold(f64::MIN, f64::max);
        total += if z[y] == m {
            // ln(1 + small) keeps its precision when the label dominates
            z.iter().enumerate().filter(|(c, _)| *c != y).map(|(_, v)| (v - z[y]).exp()).sum::<f64>().ln_1p()
        } else {
            m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - z[y]
        };
    }
    total / data.len() as f64
}

/// `steps` full-batch gradient steps from zero.
pub fn gradient_descent(data: &Dataset, classes: usize, lr: f64, steps: usize) -> Vec<f64> {
    let mut w = vec![0.0; classes * (data.n_features + 1)];
    for _ in 0..steps {
        let g = mean_gradient(&w, classes, data);
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= lr * gi;
        }
    }
    w
}

pub fn accuracy(w: &[f64], classes: usize, data: &Dataset) -> f64 {
    let hits = (0..data.len())
        .filter(|&i| {
            let z = logits(w, classes, data.row(i));
            let mut best = 0;
            for c in 1..classes {
                if z[c] > z[best] {
                    best = c;
                }
            }
            best == data.labels[i]
        })
        .count();
    hits as f64 / data.len() as f64
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
