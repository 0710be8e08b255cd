//! Counter-based SplitMix64 streams.
//!
//! A stream is identified by a key derived from `(seed, tag, a, b)`; output `i`
//! of a stream is `mix(key + i * GAMMA)`, which is exactly SplitMix64 started
//! at state `key`. Every random quantity in a simulation draws from its own
//! stream (for example `(seed, DROPOUT, client, round)`), so consumers never
//! perturb each other and two runs that differ only in a plugin toggle still
//! see identical data and availability draws.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tags.
pub mod tag {
    pub const CLASS_MEANS: u64 = 1;
    pub const LABEL_PROPORTIONS: u64 = 2;
    pub const SAMPLE_SIZE: u64 = 3;
    pub const TRAIN_FEATURES: u64 = 4;
    pub const TEST_SET: u64 = 5;
    pub const CLIENT_TEST: u64 = 6;
    pub const DEVICE: u64 = 7;
    pub const DROPOUT: u64 = 8;
    pub const SHUFFLE: u64 = 9;
    pub const DP_NOISE: u64 = 10;
    pub const MASK: u64 = 11;
    pub const GOSSIP: u64 = 12;
    pub const KMEANS: u64 = 13;
    pub const OVERSAMPLE: u64 = 14;
    pub const GROUP_PROPORTIONS: u64 = 15;
    pub const TASK_MEANS: u64 = 16;
}

#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64, tag: u64, a: u64, b: u64) -> Self {
        let key = mix(mix(mix(mix(seed ^ GAMMA) ^ tag) ^ a.wrapping_mul(GAMMA)) ^ b.wrapping_add(GAMMA));
        Stream { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        // Lemire's multiply-shift; bias is below 2^-64 * n, irrelevant here
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller, one output per call.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        crate::math::sqrt(-2.0 * crate::math::ln(u1)) * crate::math::cos(core::f64::consts::TAU * u2)
    }

    /// Natural log of a Gamma(shape, 1) draw (Marsaglia–Tsang). Working in
    /// log space keeps tiny shapes from underflowing to zero.
    pub fn ln_gamma_draw(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            // G(a) = G(a + 1) * U^(1/a)
            let boost = crate::math::ln(self.uniform_open0()) / shape;
            return self.ln_gamma_draw(shape + 1.0) + boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / crate::math::sqrt(9.0 * d);
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open0();
            if crate::math::ln(u) < 0.5 * x * x + d - d * v + d * crate::math::ln(v) {
                return crate::math::ln(d * v);
            }
        }
    }

    /// Symmetric Dirichlet(concentration) over `k` categories.
    pub fn dirichlet(&mut self, concentration: f64, k: usize) -> alloc::vec::Vec<f64> {
        let logs: alloc::vec::Vec<f64> = (0..k).map(|_| self.ln_gamma_draw(concentration)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: alloc::vec::Vec<f64> = logs.iter().map(|l| crate::math::exp(l - max)).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
