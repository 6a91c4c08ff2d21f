//! Signal-level propagation over Wyner's circular networks.
//!
//! Noise is real standard Gaussian, so the SNR is set by the transmit power
//! alone. Each receiver draws its noise from its own stream derived from the
//! call's `noise_seed`, which keeps outputs reproducible regardless of the
//! order in which receivers are evaluated.

use std::io::Write;
use std::ops::Deref;

use rand_distr::{Distribution, StandardNormal};

use crate::model::{seed, wrap_index, NetworkConfig, Variant};
use crate::{Error, Result};

/// Channel inputs of one transmitter over one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBlock(pub Vec<f64>);

/// Channel outputs at one receiver over one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock(pub Vec<f64>);

impl SignalBlock {
    pub fn zeros(n: usize) -> Self {
        SignalBlock(vec![0.0; n])
    }

    /// `(1/n) * sum x^2`.
    pub fn power(&self) -> f64 {
        empirical_power(&self.0)
    }
}

impl ReceivedBlock {
    pub fn zeros(n: usize) -> Self {
        ReceivedBlock(vec![0.0; n])
    }
}

impl Deref for SignalBlock {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for ReceivedBlock {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn empirical_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn common_len(inputs: &[SignalBlock]) -> Result<usize> {
    let n = inputs.first().map_or(0, |b| b.len());
    if let Some(b) = inputs.iter().find(|b| b.len() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: b.len(),
        });
    }
    Ok(n)
}

fn add_noise(out: &mut [ReceivedBlock], noise_seed: u64) {
    for (i, y) in out.iter_mut().enumerate() {
        let mut rng = seed::rng(seed::derive(noise_seed, &[i as u64 + 1]));
        for v in y.0.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += z;
        }
    }
}

/// `Y_k = X_k + alpha_k X_{k-1} + Z_k` with `X_0 = X_K`.
///
/// `inputs[i]` and `gains[i]` belong to Tx/Rx `i + 1`.
pub fn transmit_soft(
    inputs: &[SignalBlock],
    gains: &[f64],
    noise_seed: u64,
    noiseless: bool,
) -> Result<Vec<ReceivedBlock>> {
    let k = inputs.len();
    if gains.len() != k {
        return Err(Error::GainCountMismatch {
            expected: k,
            found: gains.len(),
        });
    }
    let n = common_len(inputs)?;
    let mut out: Vec<ReceivedBlock> = (1..=k)
        .map(|rx| {
            let own = &inputs[rx - 1];
            let prev = &inputs[wrap_index(rx as isize - 1, k) - 1];
            let a = gains[rx - 1];
            ReceivedBlock((0..n).map(|t| own[t] + a * prev[t]).collect())
        })
        .collect();
    if !noiseless {
        add_noise(&mut out, noise_seed);
    }
    Ok(out)
}

/// `Y_k = X_k + alpha X_{k-1} + alpha X_{k+1} + Z_k` with circular wrap.
pub fn transmit_full(
    inputs: &[SignalBlock],
    alpha: f64,
    noise_seed: u64,
    noiseless: bool,
) -> Result<Vec<ReceivedBlock>> {
    let k = inputs.len();
    let n = common_len(inputs)?;
    let mut out: Vec<ReceivedBlock> = (1..=k)
        .map(|rx| {
            let own = &inputs[rx - 1];
            let prev = &inputs[wrap_index(rx as isize - 1, k) - 1];
            let next = &inputs[wrap_index(rx as isize + 1, k) - 1];
            ReceivedBlock(
                (0..n)
                    .map(|t| own[t] + alpha * prev[t] + alpha * next[t])
                    .collect(),
            )
        })
        .collect();
    if !noiseless {
        add_noise(&mut out, noise_seed);
    }
    Ok(out)
}

/// Dispatches on the configured variant.
pub fn transmit(
    cfg: &NetworkConfig,
    inputs: &[SignalBlock],
    noise_seed: u64,
    noiseless: bool,
) -> Result<Vec<ReceivedBlock>> {
    if inputs.len() != cfg.k {
        return Err(Error::ConfigMismatch(format!(
            "{} input blocks for K={}",
            inputs.len(),
            cfg.k
        )));
    }
    match cfg.variant {
        Variant::SoftHandoff => transmit_soft(inputs, &cfg.gains, noise_seed, noiseless),
        Variant::Full => transmit_full(inputs, cfg.gains[0], noise_seed, noiseless),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerCheck {
    Ok,
    Violation(f64),
}

/// Block-power constraint `(1/n) sum x^2 <= P`.
pub fn check_power(block: &SignalBlock, power: f64) -> PowerCheck {
    let measured = block.power();
    if measured <= power {
        PowerCheck::Ok
    } else {
        PowerCheck::Violation(measured)
    }
}

/// `y - gain * known`, elementwise.
pub fn cancel_known(y: &ReceivedBlock, gain: f64, known: &[f64]) -> Result<ReceivedBlock> {
    if y.len() != known.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: known.len(),
        });
    }
    Ok(ReceivedBlock(
        y.iter().zip(known).map(|(a, b)| a - gain * b).collect(),
    ))
}

/// Which side of the channel a traced block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    Tx,
    Rx,
}

/// Appends blocks to a CSV trace with columns `slot,t,side,index,value`.
pub fn write_trace<W: Write>(
    out: &mut W,
    slot: usize,
    side: TraceSide,
    blocks: &[&[f64]],
    header: bool,
) -> Result<()> {
    if header {
        writeln!(out, "slot,t,side,index,value")?;
    }
    let tag = match side {
        TraceSide::Tx => "tx",
        TraceSide::Rx => "rx",
    };
    for (i, block) in blocks.iter().enumerate() {
        for (t, v) in block.iter().enumerate() {
            writeln!(out, "{slot},{t},{tag},{},{v:e}", i + 1)?;
        }
    }
    Ok(())
}
