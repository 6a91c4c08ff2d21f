//! Random Gaussian shell codebooks, nearest-neighbour decoding and the ideal
//! capacity-threshold link.
//!
//! Every codeword is rescaled to the exact empirical power requested, so a
//! transmitted block never violates the block-power constraint.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{ReceivedBlock, SignalBlock};
use crate::model::{seed, Bitstring};
use crate::{Error, Result};

/// Largest supported number of index bits per codebook.
pub const MAX_CODEBOOK_BITS: usize = 20;

/// `2^L` codewords of length `n_uses`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n_uses: usize,
    bits: usize,
    power: f64,
    words: Vec<f64>,
}

impl Codebook {
    pub fn n_uses(&self) -> usize {
        self.n_uses
    }

    /// Index bits `L`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn num_words(&self) -> usize {
        1 << self.bits
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn word(&self, index: usize) -> &[f64] {
        &self.words[index * self.n_uses..(index + 1) * self.n_uses]
    }

    /// Codeword for an `L`-bit message.
    pub fn encode(&self, msg: &Bitstring) -> Result<SignalBlock> {
        if msg.len() != self.bits {
            return Err(Error::LengthMismatch {
                left: msg.len(),
                right: self.bits,
            });
        }
        Ok(SignalBlock(self.word(msg.to_index()).to_vec()))
    }

    /// Rate in bits per channel use.
    pub fn rate(&self) -> f64 {
        self.bits as f64 / self.n_uses as f64
    }
}

/// Draws `2^bits` i.i.d. Gaussian directions, each scaled to empirical power
/// exactly `power`.
pub fn draw_codebook(n_uses: usize, bits: usize, power: f64, seed: u64) -> Result<Codebook> {
    if bits > MAX_CODEBOOK_BITS {
        return Err(Error::TooManyWords(bits));
    }
    if n_uses == 0 || bits == 0 {
        return Err(Error::BadCodebook(format!(
            "need n_uses >= 1 and bits >= 1, got n_uses={n_uses}, bits={bits}"
        )));
    }
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::BadCodebook(format!("power {power}")));
    }
    let mut rng = seed::rng(seed);
    let target = (power * n_uses as f64).sqrt();
    let mut words = Vec::with_capacity(n_uses << bits);
    let mut row = vec![0.0; n_uses];
    for _ in 0..(1usize << bits) {
        let norm = loop {
            for v in row.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break norm;
            }
        };
        words.extend(row.iter().map(|v| v * target / norm));
    }
    Ok(Codebook {
        n_uses,
        bits,
        power,
        words,
    })
}

/// `argmin_i ||y - gain * c_i||^2`, lowest index on ties.
pub fn nn_decode(y: &ReceivedBlock, cb: &Codebook, gain: f64) -> Result<usize> {
    if y.len() != cb.n_uses {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: cb.n_uses,
        });
    }
    let mut best = (0usize, f64::INFINITY);
    for (i, word) in cb.words.chunks_exact(cb.n_uses).enumerate() {
        let d: f64 = y
            .iter()
            .zip(word)
            .map(|(a, c)| {
                let e = a - gain * c;
                e * e
            })
            .sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best.0)
}

/// `(1/2) log2(1 + gain^2 * power)` bits per use, unit noise variance.
pub fn capacity(gain: f64, power: f64) -> f64 {
    0.5 * (1.0 + gain * gain * power).log2()
}

/// A point-to-point Gaussian link seen by one decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub gain: f64,
    pub rate: f64,
    pub power: f64,
    pub noise_var: f64,
}

impl LinkBudget {
    pub fn new(gain: f64, rate: f64, power: f64) -> Self {
        LinkBudget {
            gain,
            rate,
            power,
            noise_var: 1.0,
        }
    }

    pub fn capacity(&self) -> f64 {
        capacity(self.gain, self.power / self.noise_var)
    }
}

/// Asymptotic decoding outcome: success iff the rate is strictly below
/// capacity.
pub fn ideal_link(link: &LinkBudget) -> bool {
    link.rate < link.capacity()
}
