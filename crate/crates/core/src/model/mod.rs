//! Domain types shared by every other module: the network configuration,
//! the message library, demands and receiver caches.
//!
//! Transmitters, receivers and files are numbered from 1, matching the
//! circular indexing of the channel laws (`Tx 0` is `Tx K`, `Tx K+1` is
//! `Tx 1`).

mod bitstring;
pub mod seed;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use bitstring::{xor_all, Bitstring};

use crate::{Error, Result};

/// Default backoff used in the rate and power formulas.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Smallest library size accepted without [`LibraryPolicy::allow_small`].
pub const MIN_LIBRARY_FILES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Rx k hears Tx k and Tx k-1.
    #[serde(rename = "soft")]
    SoftHandoff,
    /// Rx k hears Tx k-1, Tx k and Tx k+1 with a common cross gain.
    #[serde(rename = "full")]
    Full,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::SoftHandoff => "soft",
            Variant::Full => "full",
        })
    }
}

/// Physical setting of one simulation: topology, gains, power and backoff.
///
/// For the soft-handoff variant `gains[k-1]` is the gain of Tx k-1 at Rx k.
/// The full variant stores its single cross gain in `gains[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub variant: Variant,
    pub k: usize,
    pub gains: Vec<f64>,
    pub power: f64,
    pub epsilon: f64,
}

impl NetworkConfig {
    pub fn soft(gains: Vec<f64>, power: f64, epsilon: f64) -> Self {
        NetworkConfig {
            variant: Variant::SoftHandoff,
            k: gains.len(),
            gains,
            power,
            epsilon,
        }
    }

    pub fn soft_uniform(k: usize, alpha: f64, power: f64, epsilon: f64) -> Self {
        Self::soft(vec![alpha; k], power, epsilon)
    }

    pub fn full(k: usize, alpha: f64, power: f64, epsilon: f64) -> Self {
        NetworkConfig {
            variant: Variant::Full,
            k,
            gains: vec![alpha],
            power,
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::KTooSmall { k: self.k, min: 3 });
        }
        let expected = match self.variant {
            Variant::SoftHandoff => self.k,
            Variant::Full => 1,
        };
        if self.gains.len() != expected {
            return Err(Error::GainCountMismatch {
                expected,
                found: self.gains.len(),
            });
        }
        if let Some(i) = self.gains.iter().position(|g| *g == 0.0) {
            return Err(Error::ZeroCrossGain { rx: i + 1 });
        }
        if self.gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::BadParameter("cross gains must be finite".into()));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::NonPositivePower(self.power));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.power && self.epsilon < 1.0) {
            return Err(Error::BadEpsilon {
                epsilon: self.epsilon,
                power: self.power,
            });
        }
        if self.variant == Variant::Full && self.k % 2 == 1 {
            return Err(Error::OddKForFullModel(self.k));
        }
        Ok(())
    }

    /// `min{1, |alpha_1|, ..., |alpha_K|}`.
    pub fn alpha_min(&self) -> f64 {
        self.gains.iter().fold(1.0f64, |m, g| m.min(g.abs()))
    }

    /// Power left after the backoff, used by every codebook.
    pub fn tx_power(&self) -> f64 {
        self.power - self.epsilon
    }

    /// Wraps any integer onto `1..=K`.
    pub fn wrap(&self, i: isize) -> usize {
        wrap_index(i, self.k)
    }

    /// Transmitters heard at `rx` with their gains, own transmitter first.
    pub fn heard_by(&self, rx: usize) -> Vec<(usize, f64)> {
        let prev = self.wrap(rx as isize - 1);
        match self.variant {
            Variant::SoftHandoff => vec![(rx, 1.0), (prev, self.gains[rx - 1])],
            Variant::Full => {
                let next = self.wrap(rx as isize + 1);
                vec![(rx, 1.0), (prev, self.gains[0]), (next, self.gains[0])]
            }
        }
    }

    /// Gain of `tx` at `rx`; zero when `rx` does not observe `tx`.
    pub fn gain(&self, rx: usize, tx: usize) -> f64 {
        self.heard_by(rx)
            .into_iter()
            .find(|(t, _)| *t == tx)
            .map_or(0.0, |(_, g)| g)
    }

    /// Files Tx `tx` downloads in the server phase, as receiver indices.
    pub fn knowledge_set(&self, tx: usize) -> Vec<usize> {
        knowledge_receivers(self.variant, self.k, tx)
    }
}

/// Wraps an integer index onto `1..=k`.
pub fn wrap_index(i: isize, k: usize) -> usize {
    (i - 1).rem_euclid(k as isize) as usize + 1
}

/// Receivers whose demanded file transmitter `tx` knows.
pub fn knowledge_receivers(variant: Variant, k: usize, tx: usize) -> Vec<usize> {
    let next = wrap_index(tx as isize + 1, k);
    match variant {
        Variant::SoftHandoff => vec![tx, next],
        Variant::Full => vec![wrap_index(tx as isize - 1, k), tx, next],
    }
}

/// Whether the library size requirement is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LibraryPolicy {
    pub allow_small: bool,
}

impl LibraryPolicy {
    pub fn check(&self, d: usize) -> Result<()> {
        if d < 2 || (!self.allow_small && d < MIN_LIBRARY_FILES) {
            return Err(Error::LibraryTooSmall(d));
        }
        Ok(())
    }
}

/// The `D` files, each a bitstring of the same length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageLibrary {
    payload_bits: usize,
    payloads: Vec<Bitstring>,
}

impl MessageLibrary {
    pub fn new(payloads: Vec<Bitstring>) -> Result<Self> {
        let payload_bits = payloads.first().map_or(0, Bitstring::len);
        if let Some(p) = payloads.iter().find(|p| p.len() != payload_bits) {
            return Err(Error::LengthMismatch {
                left: payload_bits,
                right: p.len(),
            });
        }
        Ok(MessageLibrary {
            payload_bits,
            payloads,
        })
    }

    pub fn files(&self) -> usize {
        self.payloads.len()
    }

    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    /// File `d`, numbered from 1.
    pub fn file(&self, d: usize) -> &Bitstring {
        &self.payloads[d - 1]
    }

    pub fn payloads(&self) -> &[Bitstring] {
        &self.payloads
    }
}

/// `D` files of `bits` i.i.d. uniform bits, reproducible from `seed`.
pub fn random_library(d: usize, bits: usize, seed: u64) -> Result<MessageLibrary> {
    if d < 2 || bits == 0 {
        return Err(Error::BadParameter(format!(
            "library needs D >= 2 and at least one bit per file, got D={d}, bits={bits}"
        )));
    }
    let mut rng = seed::rng(seed);
    MessageLibrary::new((0..d).map(|_| Bitstring::random(bits, &mut rng)).collect())
}

impl Serialize for MessageLibrary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LibraryRepr {
            d: self.files(),
            payload_bits: self.payload_bits,
            payloads: self.payloads.iter().map(Bitstring::to_hex).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MessageLibrary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = LibraryRepr::deserialize(d)?;
        let payloads = repr
            .payloads
            .iter()
            .map(|h| Bitstring::from_hex(h, repr.payload_bits))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        MessageLibrary::new(payloads).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct LibraryRepr {
    d: usize,
    payload_bits: usize,
    payloads: Vec<String>,
}

/// `d_k` for every receiver, files numbered from 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemandVector {
    pub demands: Vec<usize>,
}

impl DemandVector {
    pub fn new(demands: Vec<usize>, files: usize) -> Result<Self> {
        if let Some(bad) = demands.iter().find(|d| **d == 0 || **d > files) {
            return Err(Error::BadDemand(format!(
                "demand {bad} outside 1..={files}"
            )));
        }
        Ok(DemandVector { demands })
    }

    pub fn all_equal(k: usize) -> Self {
        DemandVector {
            demands: vec![1; k],
        }
    }

    /// `d_k = ((k-1) mod D) + 1`; pairwise distinct whenever `D >= K`.
    pub fn cyclic(k: usize, files: usize) -> Self {
        DemandVector {
            demands: (0..k).map(|i| i % files + 1).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(k: usize, files: usize, rng: &mut R) -> Self {
        DemandVector {
            demands: (0..k).map(|_| rng.random_range(1..=files)).collect(),
        }
    }

    /// The `index`-th vector of `{1..D}^K` in lexicographic order.
    pub fn nth_of_all(index: u64, k: usize, files: usize) -> Self {
        let mut rest = index;
        let mut demands = vec![0; k];
        for slot in demands.iter_mut().rev() {
            *slot = (rest % files as u64) as usize + 1;
            rest /= files as u64;
        }
        DemandVector { demands }
    }

    /// Parses `3,1,4,1,5,2`.
    pub fn parse(s: &str, files: usize) -> Result<Self> {
        let demands = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::BadDemand(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(demands, files)
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    /// `d_k` for receiver `k` (from 1).
    pub fn of(&self, k: usize) -> usize {
        self.demands[k - 1]
    }

    pub fn check_len(&self, k: usize) -> Result<()> {
        if self.demands.len() != k {
            return Err(Error::BadDemand(format!(
                "demand vector has {} entries, network has K={k}",
                self.demands.len()
            )));
        }
        Ok(())
    }
}

/// Identifies one submessage: file, chunk (round-robin coded part, 0 for the
/// plain schemes) and part label within the chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartKey {
    pub file: usize,
    pub chunk: usize,
    pub part: u8,
}

impl PartKey {
    pub const fn new(file: usize, part: u8) -> Self {
        PartKey {
            file,
            chunk: 0,
            part,
        }
    }

    pub const fn in_chunk(file: usize, chunk: usize, part: u8) -> Self {
        PartKey { file, chunk, part }
    }
}

impl std::fmt::Display for PartKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.chunk == 0 {
            write!(f, "W{}({})", self.file, self.part)
        } else {
            write!(f, "W{}[{}]({})", self.file, self.chunk, self.part)
        }
    }
}

/// Every submessage of every file, as held by the central server.
pub type PartStore = BTreeMap<PartKey, Bitstring>;

/// Cache contents `V_k` of every receiver.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CachePlacement {
    receivers: Vec<BTreeMap<PartKey, Bitstring>>,
}

impl CachePlacement {
    /// Fills receiver caches from `store` following `rule(rx) -> keys`.
    pub fn from_rule<F>(k: usize, store: &PartStore, mut rule: F) -> Result<Self>
    where
        F: FnMut(usize) -> Vec<PartKey>,
    {
        let mut receivers = Vec::with_capacity(k);
        for rx in 1..=k {
            let mut cache = BTreeMap::new();
            for key in rule(rx) {
                let bits = store.get(&key).ok_or_else(|| {
                    Error::ConfigMismatch(format!("placement references missing part {key}"))
                })?;
                if cache.insert(key, bits.clone()).is_some() {
                    return Err(Error::ConfigMismatch(format!(
                        "receiver {rx} stores {key} twice"
                    )));
                }
            }
            receivers.push(cache);
        }
        Ok(CachePlacement { receivers })
    }

    pub fn receivers(&self) -> usize {
        self.receivers.len()
    }

    /// Cache of receiver `rx` (from 1).
    pub fn cache(&self, rx: usize) -> &BTreeMap<PartKey, Bitstring> {
        &self.receivers[rx - 1]
    }

    pub fn get(&self, rx: usize, key: &PartKey) -> Option<&Bitstring> {
        self.receivers[rx - 1].get(key)
    }

    pub fn contains(&self, rx: usize, key: &PartKey) -> bool {
        self.receivers[rx - 1].contains_key(key)
    }

    pub fn bits_at(&self, rx: usize) -> usize {
        self.receivers[rx - 1].values().map(Bitstring::len).sum()
    }

    /// Common cache size in bits, `None` when receivers differ.
    pub fn bits_per_receiver(&self) -> Option<usize> {
        let first = self.bits_at(1);
        (2..=self.receivers())
            .all(|rx| self.bits_at(rx) == first)
            .then_some(first)
    }

    /// Adds `keys` from `store` to every receiver.
    pub fn extend_all(&mut self, store: &PartStore, keys: &[PartKey]) -> Result<()> {
        for cache in &mut self.receivers {
            for key in keys {
                let bits = store.get(key).ok_or_else(|| {
                    Error::ConfigMismatch(format!("placement references missing part {key}"))
                })?;
                cache.insert(*key, bits.clone());
            }
        }
        Ok(())
    }

    /// Checks that stored bits match `store` bit-exactly.
    pub fn consistent_with(&self, store: &PartStore) -> bool {
        self.receivers
            .iter()
            .all(|c| c.iter().all(|(k, v)| store.get(k) == Some(v)))
    }
}

impl Serialize for CachePlacement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            file: usize,
            chunk: usize,
            part: u8,
            bits: usize,
            hex: String,
        }
        #[derive(Serialize)]
        struct Rx {
            rx: usize,
            total_bits: usize,
            cache_entries: Vec<Entry>,
        }
        let rows: Vec<Rx> = self
            .receivers
            .iter()
            .enumerate()
            .map(|(i, c)| Rx {
                rx: i + 1,
                total_bits: c.values().map(Bitstring::len).sum(),
                cache_entries: c
                    .iter()
                    .map(|(k, v)| Entry {
                        file: k.file,
                        chunk: k.chunk,
                        part: k.part,
                        bits: v.len(),
                        hex: v.to_hex(),
                    })
                    .collect(),
            })
            .collect();
        rows.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft6() -> NetworkConfig {
        NetworkConfig::soft_uniform(6, 1.0, 100.0, 0.05)
    }

    #[test]
    fn valid_soft_config() {
        assert_eq!(soft6().validate(), Ok(()));
    }

    #[test]
    fn zero_cross_gain_rejected() {
        let mut cfg = soft6();
        cfg.gains[2] = 0.0;
        assert_eq!(cfg.validate(), Err(Error::ZeroCrossGain { rx: 3 }));
        let full = NetworkConfig::full(6, 0.0, 100.0, 0.05);
        assert_eq!(full.validate(), Err(Error::ZeroCrossGain { rx: 1 }));
    }

    #[test]
    fn odd_k_full_rejected() {
        let cfg = NetworkConfig::full(7, 0.5, 100.0, 0.05);
        assert_eq!(cfg.validate(), Err(Error::OddKForFullModel(7)));
    }

    #[test]
    fn power_and_epsilon_checks() {
        let mut cfg = soft6();
        cfg.power = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::NonPositivePower(_))));
        let mut cfg = soft6();
        cfg.epsilon = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::BadEpsilon { .. })));
        let cfg = NetworkConfig::soft_uniform(6, 1.0, 0.5, 0.6);
        assert!(matches!(cfg.validate(), Err(Error::BadEpsilon { .. })));
        let mut cfg = soft6();
        cfg.epsilon = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::BadEpsilon { .. })));
    }

    #[test]
    fn topology_wraps() {
        let cfg = NetworkConfig::soft(vec![2.0, 1.0, 1.0], 10.0, 0.05);
        assert_eq!(cfg.heard_by(1), vec![(1, 1.0), (3, 2.0)]);
        let full = NetworkConfig::full(4, 0.5, 10.0, 0.05);
        assert_eq!(full.heard_by(4), vec![(4, 1.0), (3, 0.5), (1, 0.5)]);
        assert_eq!(full.gain(2, 4), 0.0);
        assert_eq!(knowledge_receivers(Variant::SoftHandoff, 6, 6), vec![6, 1]);
        assert_eq!(knowledge_receivers(Variant::Full, 6, 1), vec![6, 1, 2]);
    }

    #[test]
    fn alpha_min_caps_at_one() {
        let cfg = NetworkConfig::soft(vec![2.0, -0.5, 3.0], 10.0, 0.05);
        assert_eq!(cfg.alpha_min(), 0.5);
        assert_eq!(
            NetworkConfig::soft_uniform(5, 4.0, 10.0, 0.05).alpha_min(),
            1.0
        );
    }

    #[test]
    fn library_is_reproducible() {
        let a = random_library(6, 40, 1).unwrap();
        let b = random_library(6, 40, 1).unwrap();
        let c = random_library(6, 40, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let small = random_library(2, 5 * 8, 7).unwrap();
        assert_eq!(small.files(), 2);
        assert!(small.payloads().iter().all(|p| p.len() == 40));
    }

    #[test]
    fn library_policy_gates_small_d() {
        assert!(LibraryPolicy::default().check(5).is_err());
        assert!(LibraryPolicy::default().check(6).is_ok());
        assert!(LibraryPolicy { allow_small: true }.check(2).is_ok());
        assert!(LibraryPolicy { allow_small: true }.check(1).is_err());
    }

    #[test]
    fn library_json_roundtrip() {
        let lib = random_library(3, 13, 9).unwrap();
        let json = serde_json::to_string(&lib).unwrap();
        assert!(json.contains("\"payloads\""));
        let back: MessageLibrary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, lib);
    }

    #[test]
    fn demands() {
        assert!(DemandVector::new(vec![1, 7], 6).is_err());
        let d = DemandVector::parse("3,1,4,1,5,2", 6).unwrap();
        assert_eq!(d.of(3), 4);
        assert_eq!(DemandVector::nth_of_all(0, 3, 2).demands, vec![1, 1, 1]);
        assert_eq!(DemandVector::nth_of_all(5, 3, 2).demands, vec![2, 1, 2]);
    }

    #[test]
    fn placement_accounting() {
        let mut store = PartStore::new();
        for f in 1..=2 {
            for p in 1..=3u8 {
                store.insert(PartKey::new(f, p), Bitstring::zeros(4 + p as usize));
            }
        }
        let pl = CachePlacement::from_rule(3, &store, |rx| {
            vec![
                PartKey::new(1, (rx % 3 + 1) as u8),
                PartKey::new(2, (rx % 3 + 1) as u8),
            ]
        })
        .unwrap();
        for rx in 1..=3 {
            let sum: usize = pl.cache(rx).values().map(Bitstring::len).sum();
            assert_eq!(pl.bits_at(rx), sum);
        }
        assert_eq!(pl.bits_per_receiver(), None);
        assert!(pl.consistent_with(&store));
        let dup =
            CachePlacement::from_rule(1, &store, |_| vec![PartKey::new(1, 1), PartKey::new(1, 1)]);
        assert!(dup.is_err());
    }
}
