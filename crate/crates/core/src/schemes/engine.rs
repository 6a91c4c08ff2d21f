//! End-to-end execution of a delivery schedule.
//!
//! Transmitters only see the files they downloaded; receivers only see their
//! channel outputs and their own cache. The ideal backend replaces each
//! point-to-point decoder by the capacity test, but still requires that all
//! interference was cancelled exactly with cached content. The Monte-Carlo
//! backend sends real codewords through the noisy channel.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::channel::{self, cancel_known, check_power, PowerCheck, SignalBlock};
use crate::codec::{draw_codebook, ideal_link, nn_decode, Codebook, LinkBudget};
use crate::model::{
    seed, xor_all, Bitstring, CachePlacement, DemandVector, MessageLibrary, NetworkConfig, PartKey,
    PartStore, Variant,
};
use crate::schemes::mds::MdsCode;
use crate::schemes::partition::reconstruct_five;
use crate::schemes::placement::{
    augment_placement, cache_placement_full, cache_placement_round_robin, cache_placement_soft,
    full_store, round_robin_store, soft_store, EXTRA_PART,
};
use crate::schemes::rates::{full_rate, soft_rate};
use crate::schemes::schedule::{
    delivery_schedule_full, delivery_schedule_round_robin, delivery_schedule_soft,
    guaranteed_receivers, DecodePlan, DeliverySchedule, ScheduleKind, TxAction,
};
use crate::{Error, Result};

/// How point-to-point links are decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Backend {
    /// Success iff the link rate is strictly below its capacity.
    Ideal,
    /// Shell codebooks, Gaussian noise, nearest-neighbour decoding. `n` is
    /// the block length of one run of the base scheme; the soft scheme uses
    /// `n / 3` channel uses per period.
    MonteCarlo { n: usize, seed: u64 },
}

/// Options shared by the pipelines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Bits at the end of each payload carried by a part cached everywhere.
    pub extra_bits: usize,
}

/// Outcome of one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub kind: ScheduleKind,
    #[serde(skip)]
    pub decoded: Vec<Option<Bitstring>>,
    /// `success[rx - 1]`: decoded payload equals the demanded file.
    pub success: Vec<bool>,
    /// Receivers the scheme promises to serve.
    pub guaranteed: Vec<bool>,
    pub links: usize,
    pub link_failures: usize,
    /// Per-user rate in bits per channel use.
    pub rate: f64,
    /// Cache size per receiver in bits.
    pub memory_bits: usize,
    /// Cache size per receiver in bits per channel use.
    pub memory: f64,
    pub payload_bits: usize,
}

impl SimResult {
    pub fn guaranteed_success(&self) -> bool {
        self.success
            .iter()
            .zip(&self.guaranteed)
            .all(|(s, g)| *s || !*g)
    }

    pub fn all_success(&self) -> bool {
        self.success.iter().all(|s| *s)
    }
}

/// Transmitter-side view restricted to the downloaded files.
fn tx_content(
    cfg: &NetworkConfig,
    demands: &DemandVector,
    store: &PartStore,
    tx: usize,
    action: &TxAction,
) -> Result<Option<Bitstring>> {
    let keys = action.keys();
    if keys.is_empty() {
        return Ok(None);
    }
    let known: Vec<usize> = cfg
        .knowledge_set(tx)
        .into_iter()
        .map(|r| demands.of(r))
        .collect();
    let mut bits = Vec::with_capacity(keys.len());
    for key in &keys {
        if !known.contains(&key.file) {
            return Err(Error::KnowledgeViolation { tx, file: key.file });
        }
        bits.push(
            store
                .get(key)
                .ok_or_else(|| Error::ConfigMismatch(format!("server holds no part {key}")))?,
        );
    }
    xor_all(bits).map(Some)
}

fn cached_xor(placement: &CachePlacement, rx: usize, keys: &[PartKey]) -> Option<Bitstring> {
    let parts: Option<Vec<&Bitstring>> = keys.iter().map(|k| placement.get(rx, k)).collect();
    xor_all(parts?).ok()
}

struct Outcome {
    /// Parts each receiver obtained over the air.
    decoded: Vec<BTreeMap<PartKey, Bitstring>>,
    links: usize,
    link_failures: usize,
}

/// Per-link rate used by the ideal backend.
fn ideal_link_rate(cfg: &NetworkConfig) -> Result<f64> {
    let (rate, share) = match cfg.variant {
        Variant::SoftHandoff => (soft_rate(cfg), 3.0 / 5.0),
        Variant::Full => (full_rate(cfg), 1.0 / 2.0),
    };
    if rate <= 0.0 {
        return Err(Error::BadParameter(format!(
            "rate formula is not positive ({rate}) at P={}, epsilon={}",
            cfg.power, cfg.epsilon
        )));
    }
    Ok(rate * share)
}

fn slot_len(cfg: &NetworkConfig, n: usize) -> usize {
    match cfg.variant {
        Variant::SoftHandoff => n / 3,
        Variant::Full => n,
    }
}

fn execute(
    cfg: &NetworkConfig,
    sched: &DeliverySchedule,
    store: &PartStore,
    placement: &CachePlacement,
    backend: Backend,
) -> Result<Outcome> {
    let k = cfg.k;
    let mut out = Outcome {
        decoded: vec![BTreeMap::new(); k],
        links: 0,
        link_failures: 0,
    };
    let link_rate = match backend {
        Backend::Ideal => ideal_link_rate(cfg)?,
        Backend::MonteCarlo { .. } => 0.0,
    };
    for period in &sched.periods {
        let contents: Vec<Option<Bitstring>> = (1..=k)
            .map(|tx| tx_content(cfg, &sched.demands, store, tx, period.action(tx)))
            .collect::<Result<_>>()?;
        let received = match backend {
            Backend::Ideal => None,
            Backend::MonteCarlo { n, seed: master } => {
                Some(transmit_period(cfg, &contents, period.index, n, master)?)
            }
        };
        for rx in 1..=k {
            let DecodePlan::Decode {
                listen,
                cancel,
                strip,
                target,
            } = period.plan(rx)
            else {
                continue;
            };
            out.links += 1;
            let message = match &received {
                None => ideal_receive(cfg, placement, &contents, rx, *listen, cancel, link_rate),
                Some((codebooks, ys)) => {
                    mc_receive(cfg, placement, codebooks, &ys[rx - 1], rx, *listen, cancel)?
                }
            };
            let truth = contents[*listen - 1].as_ref();
            if message.is_none() || message.as_ref() != truth {
                out.link_failures += 1;
            }
            let Some(message) = message else { continue };
            let mut pieces = vec![&message];
            let Some(sides) = strip
                .iter()
                .map(|s| placement.get(rx, s))
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            pieces.extend(sides);
            out.decoded[rx - 1].insert(*target, xor_all(pieces)?);
        }
    }
    Ok(out)
}

/// Ideal decoding: the listened message is recovered iff every other heard
/// transmitter is cancelled exactly from cache and the link rate is below
/// capacity.
fn ideal_receive(
    cfg: &NetworkConfig,
    placement: &CachePlacement,
    contents: &[Option<Bitstring>],
    rx: usize,
    listen: usize,
    cancel: &[crate::schemes::schedule::Cancel],
    link_rate: f64,
) -> Option<Bitstring> {
    let heard = cfg.heard_by(rx);
    let gain = heard.iter().find(|(t, _)| *t == listen)?.1;
    let wanted = contents[listen - 1].clone()?;
    for (tx, _) in heard.iter().filter(|(t, _)| *t != listen) {
        let Some(actual) = &contents[tx - 1] else {
            continue;
        };
        let entry = cancel.iter().find(|c| c.tx == *tx)?;
        if cached_xor(placement, rx, &entry.keys).as_ref() != Some(actual) {
            return None;
        }
    }
    ideal_link(&LinkBudget::new(gain, link_rate, cfg.tx_power())).then_some(wanted)
}

type Transmission = (Vec<Option<Codebook>>, Vec<channel::ReceivedBlock>);

fn transmit_period(
    cfg: &NetworkConfig,
    contents: &[Option<Bitstring>],
    period: usize,
    n: usize,
    master: u64,
) -> Result<Transmission> {
    let n_slot = slot_len(cfg, n);
    let mut codebooks = Vec::with_capacity(cfg.k);
    let mut blocks = Vec::with_capacity(cfg.k);
    for (i, content) in contents.iter().enumerate() {
        let tx = i + 1;
        match content {
            None => {
                codebooks.push(None);
                blocks.push(SignalBlock::zeros(n_slot));
            }
            Some(bits) => {
                let cb_seed =
                    seed::derive(master, &[seed::ROLE_CODEBOOK, period as u64, tx as u64]);
                let cb = draw_codebook(n_slot, bits.len(), cfg.tx_power(), cb_seed)?;
                let block = cb.encode(bits)?;
                if let PowerCheck::Violation(measured) = check_power(&block, cfg.power) {
                    return Err(Error::PowerViolation {
                        tx,
                        measured,
                        limit: cfg.power,
                    });
                }
                codebooks.push(Some(cb));
                blocks.push(block);
            }
        }
    }
    let noise_seed = seed::derive(master, &[seed::ROLE_NOISE, period as u64]);
    let ys = channel::transmit(cfg, &blocks, noise_seed, false)?;
    Ok((codebooks, ys))
}

fn mc_receive(
    cfg: &NetworkConfig,
    placement: &CachePlacement,
    codebooks: &[Option<Codebook>],
    y: &channel::ReceivedBlock,
    rx: usize,
    listen: usize,
    cancel: &[crate::schemes::schedule::Cancel],
) -> Result<Option<Bitstring>> {
    let mut y = y.clone();
    for c in cancel {
        // a missing key or a silent neighbour leaves the observation untouched
        let (Some(bits), Some(cb)) = (cached_xor(placement, rx, &c.keys), &codebooks[c.tx - 1])
        else {
            continue;
        };
        let word = cb.encode(&bits)?;
        y = cancel_known(&y, cfg.gain(rx, c.tx), &word)?;
    }
    let Some(cb) = &codebooks[listen - 1] else {
        return Ok(None);
    };
    let gain = cfg.gain(rx, listen);
    if gain == 0.0 {
        return Ok(None);
    }
    let index = nn_decode(&y, cb, gain)?;
    Ok(Some(Bitstring::from_index(index, cb.bits())))
}

/// Everything a run needs besides the channel.
struct Prepared {
    schedule: DeliverySchedule,
    store: PartStore,
    placement: CachePlacement,
    /// Payload bits carried per run of the base scheme.
    base_bits: usize,
    /// Runs of the base scheme (1, or `K` with round-robin).
    runs: usize,
}

fn check_inputs(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    demands: &DemandVector,
) -> Result<()> {
    cfg.validate()?;
    demands.check_len(cfg.k)?;
    if let Some(bad) = demands.demands.iter().find(|d| **d > library.files()) {
        return Err(Error::BadDemand(format!(
            "demand {bad} exceeds library size {}",
            library.files()
        )));
    }
    Ok(())
}

fn check_mc_part_bits(backend: Backend, cfg: &NetworkConfig, part_bits: usize) -> Result<()> {
    if let Backend::MonteCarlo { n, .. } = backend {
        if slot_len(cfg, n) == 0 {
            return Err(Error::BadParameter(format!(
                "block length {n} leaves empty slots"
            )));
        }
        if part_bits > crate::codec::MAX_CODEBOOK_BITS {
            return Err(Error::TooManyWords(part_bits));
        }
    }
    Ok(())
}

fn finish(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    prep: &Prepared,
    outcome: Outcome,
    backend: Backend,
    rebuild: impl Fn(usize, &BTreeMap<PartKey, Bitstring>) -> Option<Bitstring>,
) -> Result<SimResult> {
    let k = cfg.k;
    let demands = &prep.schedule.demands;
    let decoded: Vec<Option<Bitstring>> = (1..=k)
        .map(|rx| {
            let mut held = outcome.decoded[rx - 1].clone();
            for (key, bits) in prep.placement.cache(rx) {
                if key.file == demands.of(rx) {
                    held.entry(*key).or_insert_with(|| bits.clone());
                }
            }
            rebuild(demands.of(rx), &held)
        })
        .collect();
    let success = (1..=k)
        .map(|rx| decoded[rx - 1].as_ref() == Some(library.file(demands.of(rx))))
        .collect();
    let guaranteed_set = guaranteed_receivers(prep.schedule.kind, k);
    let guaranteed = (1..=k).map(|rx| guaranteed_set.contains(&rx)).collect();
    let memory_bits = prep
        .placement
        .bits_per_receiver()
        .ok_or_else(|| Error::ConfigMismatch("cache sizes differ between receivers".into()))?;
    let payload_bits = library.payload_bits();
    // channel uses of the whole run
    let uses = match backend {
        Backend::Ideal => {
            let rate = match cfg.variant {
                Variant::SoftHandoff => soft_rate(cfg),
                Variant::Full => full_rate(cfg),
            };
            prep.runs as f64 * prep.base_bits as f64 / rate
        }
        Backend::MonteCarlo { n, .. } => (prep.runs * n) as f64,
    };
    Ok(SimResult {
        kind: prep.schedule.kind,
        decoded,
        success,
        guaranteed,
        links: outcome.links,
        link_failures: outcome.link_failures,
        rate: payload_bits as f64 / uses,
        memory_bits,
        memory: memory_bits as f64 / uses,
        payload_bits,
    })
}

fn with_extra(
    base: Option<Bitstring>,
    held: &BTreeMap<PartKey, Bitstring>,
    file: usize,
    extra_bits: usize,
) -> Option<Bitstring> {
    let base = base?;
    if extra_bits == 0 {
        return Some(base);
    }
    let extra = held.get(&PartKey::new(file, EXTRA_PART))?;
    Some(Bitstring::concat([&base, extra]))
}

/// Builds the soft-handoff pipeline without running it.
fn prepare_soft(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    demands: &DemandVector,
    opts: RunOptions,
) -> Result<Prepared> {
    let store = soft_store(library, opts.extra_bits)?;
    let mut placement = cache_placement_soft(cfg.k, library.files(), &store)?;
    if opts.extra_bits > 0 {
        augment_placement(&mut placement, library.files(), &store)?;
    }
    Ok(Prepared {
        schedule: delivery_schedule_soft(cfg.k, demands)?,
        store,
        placement,
        base_bits: library.payload_bits() - opts.extra_bits,
        runs: 1,
    })
}

/// Soft-handoff scheme: three periods, XOR parity, mod-3 caches.
pub fn run_soft(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    demands: &DemandVector,
    backend: Backend,
) -> Result<SimResult> {
    run_soft_with(cfg, library, demands, backend, RunOptions::default())
}

pub fn run_soft_with(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    demands: &DemandVector,
    backend: Backend,
    opts: RunOptions,
) -> Result<SimResult> {
    check_inputs(cfg, library, demands)?;
    if cfg.variant != Variant::SoftHandoff {
        return Err(Error::ConfigMismatch(
            "soft scheme on a full-model network".into(),
        ));
    }
    let prep = prepare_soft(cfg, library, demands, opts)?;
    check_mc_part_bits(backend, cfg, prep.base_bits / 5)?;
    let outcome = execute(cfg, &prep.schedule, &prep.store, &prep.placement, backend)?;
    finish(cfg, library, &prep, outcome, backend, |file, held| {
        let parts: Vec<(u8, Bitstring)> = held
            .iter()
            .filter(|(k, _)| k.file == file && k.chunk == 0 && (1..=6).contains(&k.part))
            .take(5)
            .map(|(k, v)| (k.part, v.clone()))
            .collect();
        let base = reconstruct_five(&parts).ok();
        with_extra(base, held, file, opts.extra_bits)
    })
}

/// Full-model scheme: odd transmitters send half 2, even ones half 1, and
/// every receiver cancels both neighbours from its cache.
pub fn run_full(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    demands: &DemandVector,
    backend: Backend,
) -> Result<SimResult> {
    run_full_with(cfg, library, demands, backend, RunOptions::default())
}

pub fn run_full_with(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    demands: &DemandVector,
    backend: Backend,
    opts: RunOptions,
) -> Result<SimResult> {
    check_inputs(cfg, library, demands)?;
    if cfg.variant != Variant::Full {
        return Err(Error::ConfigMismatch(
            "full scheme on a soft-handoff network".into(),
        ));
    }
    let store = full_store(library, opts.extra_bits)?;
    let mut placement = cache_placement_full(cfg.k, library.files(), &store)?;
    if opts.extra_bits > 0 {
        augment_placement(&mut placement, library.files(), &store)?;
    }
    let prep = Prepared {
        schedule: delivery_schedule_full(cfg.k, demands)?,
        store,
        placement,
        base_bits: library.payload_bits() - opts.extra_bits,
        runs: 1,
    };
    check_mc_part_bits(backend, cfg, prep.base_bits / 2)?;
    let outcome = execute(cfg, &prep.schedule, &prep.store, &prep.placement, backend)?;
    finish(cfg, library, &prep, outcome, backend, |file, held| {
        let a = held.get(&PartKey::new(file, 1))?;
        let b = held.get(&PartKey::new(file, 2))?;
        with_extra(Some(Bitstring::concat([a, b])), held, file, opts.extra_bits)
    })
}

/// Soft-handoff scheme with round-robin relabeling over `K` super-periods.
/// Each receiver completes `K - 2` of the `K` MDS-coded chunks.
pub fn round_robin_soft(
    cfg: &NetworkConfig,
    library: &MessageLibrary,
    demands: &DemandVector,
    backend: Backend,
) -> Result<SimResult> {
    check_inputs(cfg, library, demands)?;
    if cfg.variant != Variant::SoftHandoff {
        return Err(Error::ConfigMismatch(
            "soft scheme on a full-model network".into(),
        ));
    }
    let k = cfg.k;
    let store = round_robin_store(library, k)?;
    let placement = cache_placement_round_robin(k, library.files(), &store)?;
    let prep = Prepared {
        schedule: delivery_schedule_round_robin(k, demands)?,
        store,
        placement,
        base_bits: library.payload_bits() / (k - 2),
        runs: k,
    };
    check_mc_part_bits(backend, cfg, prep.base_bits / 5)?;
    let code = MdsCode::new(k)?;
    let outcome = execute(cfg, &prep.schedule, &prep.store, &prep.placement, backend)?;
    finish(cfg, library, &prep, outcome, backend, |file, held| {
        let chunks: Vec<Option<Bitstring>> = (1..=k)
            .map(|chunk| {
                let parts: Vec<(u8, Bitstring)> = held
                    .iter()
                    .filter(|(key, _)| key.file == file && key.chunk == chunk)
                    .take(5)
                    .map(|(key, v)| (key.part, v.clone()))
                    .collect();
                reconstruct_five(&parts).ok()
            })
            .collect();
        let data = code.decode(&chunks).ok()?;
        Some(Bitstring::concat(&data))
    })
}

/// Payload length each pipeline expects for `part_bits` bits per submessage.
pub fn payload_bits_for(kind: ScheduleKind, k: usize, part_bits: usize) -> usize {
    match kind {
        ScheduleKind::Soft => 5 * part_bits,
        ScheduleKind::Full => 2 * part_bits,
        ScheduleKind::SoftRoundRobin => 5 * part_bits * (k - 2),
    }
}
