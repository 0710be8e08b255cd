//! Synthetic class-conditional Gaussian data with Dirichlet label skew.

use alloc::vec;
use alloc::vec::Vec;

use super::rng::{tag, Stream};
use super::{SampleSizes, SimConfig};
use crate::math;

/// Row-major feature matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_features: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn empty(n_features: usize) -> Self {
        Dataset { n_features, features: Vec::new(), labels: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn push(&mut self, x: &[f64], y: usize) {
        debug_assert_eq!(x.len(), self.n_features);
        self.features.extend_from_slice(x);
        self.labels.push(y);
    }

    pub fn class_counts(&self, n_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Label frequencies; all zeros for an empty set.
    pub fn label_histogram(&self, n_classes: usize) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        self.class_counts(n_classes).into_iter().map(|c| c as f64 / n).collect()
    }

    pub fn shift_labels(&mut self, n_classes: usize) {
        for y in &mut self.labels {
            *y = (*y + 1) % n_classes;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientData {
    pub client_id: usize,
    pub group_label: Option<usize>,
    pub label_proportions: Vec<f64>,
    /// One training set per task.
    pub train: Vec<Dataset>,
    /// Held-out samples from the client's own label distribution, per task.
    pub test: Vec<Dataset>,
}

impl ClientData {
    pub fn n_samples(&self) -> usize {
        self.train[0].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    /// `[task][class]` mean vectors.
    pub class_means: Vec<Vec<Vec<f64>>>,
    pub clients: Vec<ClientData>,
    /// IID test set per task.
    pub test: Vec<Dataset>,
}

/// Splits `n` items proportionally to `p` by largest remainder; ties go to the
/// lower index.
pub fn apportion(p: &[f64], n: usize) -> Vec<usize> {
    let exact: Vec<f64> = p.iter().map(|q| q * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| math::floor(*e) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - math::floor(exact[a]);
        let fb = exact[b] - math::floor(exact[b]);
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn class_means(config: &SimConfig, n_tasks: usize, shared_dims: usize) -> Vec<Vec<Vec<f64>>> {
    let f = config.n_features;
    (0..n_tasks)
        .map(|task| {
            (0..config.n_classes)
                .map(|class| {
                    let mut common = Stream::new(config.seed, tag::CLASS_MEANS, class as u64, 0);
                    let mut own = Stream::new(config.seed, tag::TASK_MEANS, class as u64, task as u64);
                    let mut mean: Vec<f64> = (0..f)
                        .map(|j| {
                            let (a, b) = (common.normal(), own.normal());
                            if n_tasks == 1 || j < shared_dims {
                                a
                            } else {
                                b
                            }
                        })
                        .collect();
                    let norm = math::sqrt(mean.iter().map(|v| v * v).sum::<f64>());
                    for v in &mut mean {
                        *v *= config.class_separation / norm;
                    }
                    mean
                })
                .collect()
        })
        .collect()
}

/// Draws a sample of the given label counts around `means` with covariance
/// `0.5 I`, grouped by class.
fn draw(means: &[Vec<f64>], counts: &[usize], stream: &mut Stream) -> Dataset {
    let f = means[0].len();
    let sd = math::sqrt(0.5);
    let mut out = Dataset::empty(f);
    let mut x = vec![0.0; f];
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            for (xj, mj) in x.iter_mut().zip(&means[class]) {
                *xj = mj + sd * stream.normal();
            }
            out.push(&x, class);
        }
    }
    out
}

/// Generates every client's training and test data plus the IID test set.
pub fn generate_data(config: &SimConfig) -> SimData {
    let (n_tasks, shared_dims) = config
        .pattern_toggles
        .multi_task_model_trainer
        .as_ref()
        .map(|m| (m.n_tasks, m.shared_dims))
        .unwrap_or((1, 0));
    let means = class_means(config, n_tasks, shared_dims);
    let c = config.n_classes;
    let seed = config.seed;

    let group_props: Vec<Vec<f64>> = (0..config.n_data_groups.unwrap_or(0))
        .map(|g| Stream::new(seed, tag::GROUP_PROPORTIONS, g as u64, 0).dirichlet(config.label_skew_beta, c))
        .collect();

    let clients = (0..config.n_clients)
        .map(|k| {
            let n = match config.samples_per_client {
                SampleSizes::Fixed(n) => n,
                SampleSizes::Uniform { min, max } => {
                    min + Stream::new(seed, tag::SAMPLE_SIZE, k as u64, 0).below((max - min + 1) as u64) as usize
                }
            };
            let group_label = config.n_data_groups.map(|g| k % g);
            let label_proportions = match group_label {
                Some(g) => group_props[g].clone(),
                None => Stream::new(seed, tag::LABEL_PROPORTIONS, k as u64, 0).dirichlet(config.label_skew_beta, c),
            };
            let counts = apportion(&label_proportions, n);
            let test_counts = apportion(&label_proportions, config.client_test_samples);
            let train = (0..n_tasks)
                .map(|t| draw(&means[t], &counts, &mut Stream::new(seed, tag::TRAIN_FEATURES, k as u64, t as u64)))
                .collect();
            let test = (0..n_tasks)
                .map(|t| draw(&means[t], &test_counts, &mut Stream::new(seed, tag::CLIENT_TEST, k as u64, t as u64)))
                .collect();
            ClientData { client_id: k, group_label, label_proportions, train, test }
        })
        .collect();

    let test = (0..n_tasks)
        .map(|t| {
            let mut labels = Stream::new(seed, tag::TEST_SET, t as u64, 0);
            let mut features = Stream::new(seed, tag::TEST_SET, t as u64, 1);
            let sd = math::sqrt(0.5);
            let mut out = Dataset::empty(config.n_features);
            let mut x = vec![0.0; config.n_features];
            for _ in 0..config.test_samples {
                let y = labels.below(c as u64) as usize;
                for (xj, mj) in x.iter_mut().zip(&means[t][y]) {
                    *xj = mj + sd * features.normal();
                }
                out.push(&x, y);
            }
            out
        })
        .collect();

    SimData { class_means: means, clients, test }
}
