//! Closed-form rates and cache sizes of the two schemes.

use crate::model::NetworkConfig;

/// ½·log2(1 + snr).
pub fn half_log(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

/// Per-user rate of the soft-handoff scheme:
/// (5/3)·½log2(1 + α_min²(P − ε)) − 5ε.
pub fn soft_rate(cfg: &NetworkConfig) -> f64 {
    soft_rate_formula(cfg.alpha_min(), cfg.power, cfg.epsilon)
}

pub fn soft_rate_formula(alpha_min: f64, power: f64, epsilon: f64) -> f64 {
    5.0 / 3.0 * half_log(alpha_min * alpha_min * (power - epsilon)) - 5.0 * epsilon
}

/// Rate carried by one link in one period of the soft scheme: three of the
/// five parts' worth, 3R/5.
pub fn soft_link_rate(cfg: &NetworkConfig) -> f64 {
    3.0 * soft_rate(cfg) / 5.0
}

/// Per-user rate of the full-model scheme: 2·(½log2(1 + P − ε) − ε).
pub fn full_rate(cfg: &NetworkConfig) -> f64 {
    full_rate_formula(cfg.power, cfg.epsilon)
}

pub fn full_rate_formula(power: f64, epsilon: f64) -> f64 {
    2.0 * (half_log(power - epsilon) - epsilon)
}

/// Each transmitter sends one half of a message: R/2.
pub fn full_link_rate(cfg: &NetworkConfig) -> f64 {
    full_rate(cfg) / 2.0
}

/// Normalized cache size of the soft scheme: two of five parts of each of
/// `d` files, 2D·R/5.
pub fn soft_memory(rate: f64, d: usize) -> f64 {
    2.0 * d as f64 * rate / 5.0
}

/// Normalized cache size of the full scheme: one half of each file, D·R/2.
pub fn full_memory(rate: f64, d: usize) -> f64 {
    d as f64 * rate / 2.0
}
