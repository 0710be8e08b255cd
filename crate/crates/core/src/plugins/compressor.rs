//! Uniform per-vector quantization.
//!
//! Wire layout: `min: f64`, `max: f64`, `len: u32`, `bits: u8`, three
//! reserved bytes, then the codes packed little-endian, `bits` per weight.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

pub const HEADER_BYTES: usize = 24;

/// Payload size of `d` weights at `bits` per weight.
pub const fn payload_bytes(d: usize, bits: u8) -> u64 {
    ((d * bits as usize).div_ceil(8) + HEADER_BYTES) as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compressed {
    pub min: f64,
    pub max: f64,
    pub bits: u8,
    pub len: usize,
    pub packed: Vec<u8>,
}

impl Compressed {
    /// Quantization step `(max - min) / (2^bits - 1)`.
    pub fn step(&self) -> f64 {
        step(self.min, self.max, self.bits)
    }

    pub fn size_bytes(&self) -> u64 {
        (self.packed.len() + HEADER_BYTES) as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.packed.len() + HEADER_BYTES);
        out.extend_from_slice(&self.min.to_le_bytes());
        out.extend_from_slice(&self.max.to_le_bytes());
        out.extend_from_slice(&(self.len as u32).to_le_bytes());
        out.push(self.bits);
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&self.packed);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Compressed> {
        if bytes.len() < HEADER_BYTES {
            return None;
        }
        let min = f64::from_le_bytes(bytes[0..8].try_into().ok()?);
        let max = f64::from_le_bytes(bytes[8..16].try_into().ok()?);
        let len = u32::from_le_bytes(bytes[16..20].try_into().ok()?) as usize;
        let bits = bytes[20];
        let packed = bytes[HEADER_BYTES..].to_vec();
        (packed.len() == (len * bits as usize).div_ceil(8)).then_some(Compressed { min, max, bits, len, packed })
    }
}

fn step(min: f64, max: f64, bits: u8) -> f64 {
    (max - min) / ((1u32 << bits) - 1) as f64
}

/// Quantizes finite weights to `bits` in `[2, 16]`.
pub fn compress(weights: &[f64], bits: u8) -> Compressed {
    debug_assert!((2..=16).contains(&bits));
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (min, max) = if weights.is_empty() { (0.0, 0.0) } else { (min, max) };
    let s = step(min, max, bits);
    let top = (1u32 << bits) - 1;
    let mut packed = vec![0u8; (weights.len() * bits as usize).div_ceil(8)];
    for (i, w) in weights.iter().enumerate() {
        let code = if s > 0.0 { (math::round((w - min) / s) as u32).min(top) } else { 0 };
        let bit = i * bits as usize;
        for b in 0..bits as usize {
            if code >> b & 1 == 1 {
                packed[(bit + b) / 8] |= 1 << ((bit + b) % 8);
            }
        }
    }
    Compressed { min, max, bits, len: weights.len(), packed }
}

pub fn decompress(payload: &Compressed) -> Vec<f64> {
    let s = payload.step();
    let bits = payload.bits as usize;
    (0..payload.len)
        .map(|i| {
            let mut code = 0u32;
            for b in 0..bits {
                let pos = i * bits + b;
                code |= u32::from(payload.packed[pos / 8] >> (pos % 8) & 1) << b;
            }
            if code == 0 {
                payload.min
            } else {
                payload.min + code as f64 * s
            }
        })
        .collect()
}

/// Compress then decompress.
pub fn round_trip(weights: &[f64], bits: u8) -> Vec<f64> {
    decompress(&compress(weights, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::Stream;

    #[test]
    fn constant_vector_is_exact() {
        let w = vec![3.25; 17];
        for bits in 2..=16 {
            assert_eq!(round_trip(&w, bits), w);
        }
    }

    #[test]
    fn sizes_follow_the_formula() {
        assert_eq!(payload_bytes(1000, 16), 2024);
        assert_eq!(payload_bytes(1000, 4), 524);
        assert_eq!(payload_bytes(3, 3), 26);
        let c = compress(&vec![0.5; 1000], 16);
        assert_eq!(c.size_bytes(), 2024);
        assert_eq!(c.to_bytes().len(), 2024);
    }

    #[test]
    fn bytes_round_trip() {
        let mut s = Stream::new(1, 0, 0, 0);
        let w: Vec<f64> = (0..37).map(|_| s.normal()).collect();
        let c = compress(&w, 5);
        assert_eq!(Compressed::from_bytes(&c.to_bytes()), Some(c));
    }

    #[test]
    fn error_is_at_most_half_a_step() {
        let mut s = Stream::new(2, 0, 0, 0);
        for bits in [2u8, 3, 4, 8, 12, 16] {
            for _ in 0..200 {
                let d = 1 + s.below(64) as usize;
                let w: Vec<f64> = (0..d).map(|_| 10.0 * s.normal()).collect();
                let c = compress(&w, bits);
                let back = decompress(&c);
                let bound = c.step() / 2.0 + 4.0 * f64::EPSILON * c.max.abs().max(c.min.abs());
                for (a, b) in w.iter().zip(&back) {
                    assert!((a - b).abs() <= bound, "bits {bits}");
                }
            }
        }
    }
}
