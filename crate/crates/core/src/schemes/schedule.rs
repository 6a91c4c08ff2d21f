//! Delivery schedules: what every transmitter sends in every period and how
//! every receiver turns its observation into a part of its demanded file.
//!
//! # Soft-handoff schedule
//!
//! Period `p` silences the transmitters whose label is `p - 1 (mod 3)`, plus
//! Tx K in every period. Each remaining pair of adjacent transmitters forms a
//! subnet with three receivers: the first transmitter (the *leader*) sends a
//! plain part, the second (the *follower*) sends the XOR of a part of its own
//! receiver's file and a part of the next receiver's file.
//!
//! | period | silent class | leader sends | follower sends |
//! |--------|--------------|--------------|----------------|
//! | 1      | 0            | `W_{d_k}^(3)`  | `W_{d_k}^(6) ^ W_{d_{k+1}}^(3)` |
//! | 2      | 1            | `W_{d_k}^(5)`  | `W_{d_k}^(1) ^ W_{d_{k+1}}^(5)` |
//! | 3      | 2            | `W_{d_k}^(2)`  | `W_{d_k}^(4) ^ W_{d_{k+1}}^(1)` |
//!
//! Receivers of class 1 cache parts {1,2}, class 2 parts {3,4} and class 0
//! parts {5,6}, so every interfering codeword and every XOR side can be
//! rebuilt from the local cache. Receiver classes then decode
//! {3,4,5}, {6,5,1} and {3,1,2} respectively, completing five labels.
//!
//! Labels here are *roles*. The round-robin extension rotates roles against
//! physical indices; `Period::role_offset` records the rotation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{
    knowledge_receivers, wrap_index, CachePlacement, DemandVector, PartKey, Variant,
};
use crate::{Error, Result};

/// Part sent by the leader in periods 1..=3.
const LEADER_PART: [u8; 3] = [3, 5, 2];
/// `(own part, next receiver's part)` sent by the follower in periods 1..=3.
const FOLLOWER_PARTS: [(u8, u8); 3] = [(6, 3), (1, 5), (4, 1)];

/// Smallest network the soft schedule supports.
pub const MIN_SOFT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "action")]
pub enum TxAction {
    Silent,
    Direct { key: PartKey },
    XorPair { a: PartKey, b: PartKey },
}

impl TxAction {
    /// Parts combined (by XOR) into the transmitted message.
    pub fn keys(&self) -> Vec<PartKey> {
        match self {
            TxAction::Silent => vec![],
            TxAction::Direct { key } => vec![*key],
            TxAction::XorPair { a, b } => vec![*a, *b],
        }
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, TxAction::Silent)
    }
}

/// A neighbour's codeword rebuilt from cached parts and subtracted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cancel {
    pub tx: usize,
    pub keys: Vec<PartKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "plan")]
pub enum DecodePlan {
    Idle,
    Decode {
        /// Transmitter whose codeword is decoded.
        listen: usize,
        cancel: Vec<Cancel>,
        /// Cached parts XORed out of the decoded message.
        strip: Vec<PartKey>,
        /// Part of the receiver's own file left over.
        target: PartKey,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScheduleKind {
    Soft,
    Full,
    SoftRoundRobin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Period {
    /// Position in the whole schedule, from 1.
    pub index: usize,
    /// Period within the base scheme, from 1.
    pub phase: usize,
    /// Round-robin chunk carried in this period (0 for plain schemes).
    pub chunk: usize,
    /// Physical index of role 0; role `r` sits at physical `r + role_offset`.
    pub role_offset: usize,
    /// `actions[tx - 1]`.
    pub actions: Vec<TxAction>,
    /// `plans[rx - 1]`.
    pub plans: Vec<DecodePlan>,
}

impl Period {
    pub fn action(&self, tx: usize) -> &TxAction {
        &self.actions[tx - 1]
    }

    pub fn plan(&self, rx: usize) -> &DecodePlan {
        &self.plans[rx - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliverySchedule {
    pub variant: Variant,
    pub kind: ScheduleKind,
    pub k: usize,
    pub demands: DemandVector,
    pub periods: Vec<Period>,
}

impl DeliverySchedule {
    /// JSON view: period -> tx index -> action, rx index -> decode plan.
    pub fn to_json(&self) -> serde_json::Value {
        let periods: Vec<serde_json::Value> = self
            .periods
            .iter()
            .map(|p| {
                let tx: BTreeMap<String, &TxAction> = p
                    .actions
                    .iter()
                    .enumerate()
                    .map(|(i, a)| ((i + 1).to_string(), a))
                    .collect();
                let rx: BTreeMap<String, &DecodePlan> = p
                    .plans
                    .iter()
                    .enumerate()
                    .map(|(i, a)| ((i + 1).to_string(), a))
                    .collect();
                serde_json::json!({
                    "period": p.index,
                    "phase": p.phase,
                    "chunk": p.chunk,
                    "role_offset": p.role_offset,
                    "tx": tx,
                    "rx": rx,
                })
            })
            .collect();
        serde_json::json!({
            "variant": self.variant,
            "kind": self.kind,
            "k": self.k,
            "demands": self.demands.demands,
            "periods": periods,
        })
    }
}

/// The three-period soft-handoff schedule for one demand vector.
pub fn delivery_schedule_soft(k: usize, demands: &DemandVector) -> Result<DeliverySchedule> {
    check_soft_args(k, demands)?;
    let periods = (1..=3)
        .map(|phase| soft_period(k, demands, phase, phase, 0, 0))
        .collect();
    Ok(DeliverySchedule {
        variant: Variant::SoftHandoff,
        kind: ScheduleKind::Soft,
        k,
        demands: demands.clone(),
        periods,
    })
}

/// `K` rotated copies of the soft schedule, copy `l` carrying chunk `l`
/// with Tx/Rx `k` playing role `k - l`.
pub fn delivery_schedule_round_robin(k: usize, demands: &DemandVector) -> Result<DeliverySchedule> {
    check_soft_args(k, demands)?;
    let mut periods = Vec::with_capacity(3 * k);
    for chunk in 1..=k {
        for phase in 1..=3 {
            periods.push(soft_period(
                k,
                demands,
                phase,
                periods.len() + 1,
                chunk,
                chunk,
            ));
        }
    }
    Ok(DeliverySchedule {
        variant: Variant::SoftHandoff,
        kind: ScheduleKind::SoftRoundRobin,
        k,
        demands: demands.clone(),
        periods,
    })
}

fn check_soft_args(k: usize, demands: &DemandVector) -> Result<()> {
    if k < MIN_SOFT_K {
        return Err(Error::KTooSmall { k, min: MIN_SOFT_K });
    }
    demands.check_len(k)
}

/// Role class of a role label, `None` when the role is silent in `phase`.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Silent,
    Leader,
    Follower,
}

fn soft_role(k: usize, phase: usize, role: usize) -> Role {
    let silent = (phase - 1) % 3;
    if role == k || role % 3 == silent {
        Role::Silent
    } else if role % 3 == (silent + 1) % 3 {
        Role::Leader
    } else {
        Role::Follower
    }
}

/// Physical index of role `role` under rotation `offset`.
pub fn physical(k: usize, role: usize, offset: usize) -> usize {
    wrap_index((role + offset) as isize, k)
}

/// Role of physical index `phys` under rotation `offset`.
pub fn role_of(k: usize, phys: usize, offset: usize) -> usize {
    wrap_index(phys as isize - offset as isize, k)
}

fn soft_period(
    k: usize,
    demands: &DemandVector,
    phase: usize,
    index: usize,
    chunk: usize,
    offset: usize,
) -> Period {
    let lead = LEADER_PART[phase - 1];
    let (own, next) = FOLLOWER_PARTS[phase - 1];
    let phys = |role: usize| physical(k, role, offset);
    let file = |role: usize| demands.of(phys(role));
    let key = |role: usize, part: u8| PartKey::in_chunk(file(role), chunk, part);

    let mut actions = vec![TxAction::Silent; k];
    let mut plans = vec![DecodePlan::Idle; k];
    for role in 1..=k {
        actions[phys(role) - 1] = match soft_role(k, phase, role) {
            Role::Silent => TxAction::Silent,
            Role::Leader => TxAction::Direct {
                key: key(role, lead),
            },
            Role::Follower => TxAction::XorPair {
                a: key(role, own),
                b: key(role + 1, next),
            },
        };
    }
    for role in 1..=k {
        let prev = wrap_index(role as isize - 1, k);
        let plan = match (soft_role(k, phase, role), soft_role(k, phase, prev)) {
            (Role::Leader, _) => DecodePlan::Decode {
                listen: phys(role),
                cancel: vec![],
                strip: vec![],
                target: key(role, lead),
            },
            (Role::Follower, prev_role) => DecodePlan::Decode {
                listen: phys(role),
                cancel: if prev_role == Role::Silent {
                    vec![]
                } else {
                    vec![Cancel {
                        tx: phys(prev),
                        keys: vec![key(prev, lead)],
                    }]
                },
                strip: vec![key(role + 1, next)],
                target: key(role, own),
            },
            (Role::Silent, Role::Follower) => DecodePlan::Decode {
                listen: phys(prev),
                cancel: vec![],
                strip: vec![key(prev, own)],
                target: key(role, next),
            },
            (Role::Silent, _) => DecodePlan::Idle,
        };
        plans[phys(role) - 1] = plan;
    }
    Period {
        index,
        phase,
        chunk,
        role_offset: offset,
        actions,
        plans,
    }
}

/// Part of its own file that Tx/Rx `k` sends in the full-model scheme; the
/// receiver caches the other one.
pub fn full_sent_part(k: usize) -> u8 {
    if k % 2 == 1 {
        2
    } else {
        1
    }
}

/// One-period full-model schedule: every receiver cancels both neighbours.
pub fn delivery_schedule_full(k: usize, demands: &DemandVector) -> Result<DeliverySchedule> {
    if k % 2 == 1 {
        return Err(Error::OddKForFullModel(k));
    }
    if k < 4 {
        return Err(Error::KTooSmall { k, min: 4 });
    }
    demands.check_len(k)?;
    let key = |tx: usize| PartKey::new(demands.of(tx), full_sent_part(tx));
    let actions = (1..=k)
        .map(|tx| TxAction::Direct { key: key(tx) })
        .collect();
    let plans = (1..=k)
        .map(|rx| {
            let prev = wrap_index(rx as isize - 1, k);
            let next = wrap_index(rx as isize + 1, k);
            DecodePlan::Decode {
                listen: rx,
                cancel: [prev, next]
                    .into_iter()
                    .map(|tx| Cancel {
                        tx,
                        keys: vec![key(tx)],
                    })
                    .collect(),
                strip: vec![],
                target: key(rx),
            }
        })
        .collect();
    Ok(DeliverySchedule {
        variant: Variant::Full,
        kind: ScheduleKind::Full,
        k,
        demands: demands.clone(),
        periods: vec![Period {
            index: 1,
            phase: 1,
            chunk: 0,
            role_offset: 0,
            actions,
            plans,
        }],
    })
}

/// A broken rule found by [`verify_schedule`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation")]
pub enum Violation {
    /// A transmitter uses a file it did not download.
    Knowledge {
        period: usize,
        tx: usize,
        file: usize,
    },
    /// A transmitter of the period's silent class (or Tx K) is active.
    SilentClass { period: usize, tx: usize },
    /// A cancellation or stripping key is missing from the receiver's cache.
    CacheKey {
        period: usize,
        rx: usize,
        key: PartKey,
    },
    /// Cancelled keys do not rebuild what the neighbour actually sends.
    CancelMismatch { period: usize, rx: usize, tx: usize },
    /// An active transmitter heard by the receiver is neither decoded nor cancelled.
    Interference { period: usize, rx: usize, tx: usize },
    /// The decoded transmitter is silent or not heard at this receiver.
    BadListen { period: usize, rx: usize, tx: usize },
    /// Stripping the listed keys does not leave the promised target part.
    WrongTarget { period: usize, rx: usize },
    /// A guaranteed receiver cannot rebuild its file.
    Incomplete { rx: usize, have: usize, need: usize },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Knowledge { .. } => "Knowledge",
            Violation::SilentClass { .. } => "SilentClass",
            Violation::CacheKey { .. } => "CacheKey",
            Violation::CancelMismatch { .. } => "CancelMismatch",
            Violation::Interference { .. } => "Interference",
            Violation::BadListen { .. } => "BadListen",
            Violation::WrongTarget { .. } => "WrongTarget",
            Violation::Incomplete { .. } => "Incomplete",
        }
    }
}

/// Receivers the scheme promises to serve.
pub fn guaranteed_receivers(kind: ScheduleKind, k: usize) -> Vec<usize> {
    match kind {
        ScheduleKind::Soft => (2..k).collect(),
        ScheduleKind::Full | ScheduleKind::SoftRoundRobin => (1..=k).collect(),
    }
}

/// Symbolically executes `sched` against `placement` and reports every rule
/// it breaks. An empty list means the schedule is valid.
pub fn verify_schedule(
    sched: &DeliverySchedule,
    placement: &CachePlacement,
    demands: &DemandVector,
) -> Vec<Violation> {
    let k = sched.k;
    let mut out = Vec::new();
    if placement.receivers() != k || demands.len() != k {
        // nothing sensible to check against
        out.push(Violation::Incomplete {
            rx: 0,
            have: 0,
            need: k,
        });
        return out;
    }
    let heard = |rx: usize| -> Vec<usize> {
        let prev = wrap_index(rx as isize - 1, k);
        match sched.variant {
            Variant::SoftHandoff => vec![rx, prev],
            Variant::Full => vec![rx, prev, wrap_index(rx as isize + 1, k)],
        }
    };
    // parts obtained per receiver: (chunk -> labels)
    let mut obtained: Vec<BTreeMap<usize, BTreeSet<u8>>> = vec![BTreeMap::new(); k];

    for period in &sched.periods {
        let pi = period.index;
        for tx in 1..=k {
            let action = period.action(tx);
            if action.is_silent() {
                continue;
            }
            let known: Vec<usize> = knowledge_receivers(sched.variant, k, tx)
                .into_iter()
                .map(|r| demands.of(r))
                .collect();
            for key in action.keys() {
                if !known.contains(&key.file) {
                    out.push(Violation::Knowledge {
                        period: pi,
                        tx,
                        file: key.file,
                    });
                }
            }
            if sched.variant == Variant::SoftHandoff {
                let role = role_of(k, tx, period.role_offset);
                if soft_role(k, period.phase, role) == Role::Silent {
                    out.push(Violation::SilentClass { period: pi, tx });
                }
            }
        }
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
            let hears = heard(rx);
            let mut ok = true;
            if !hears.contains(listen) || period.action(*listen).is_silent() {
                out.push(Violation::BadListen {
                    period: pi,
                    rx,
                    tx: *listen,
                });
                ok = false;
            }
            for tx in &hears {
                if tx == listen || period.action(*tx).is_silent() {
                    continue;
                }
                match cancel.iter().find(|c| c.tx == *tx) {
                    None => {
                        out.push(Violation::Interference {
                            period: pi,
                            rx,
                            tx: *tx,
                        });
                        ok = false;
                    }
                    Some(c) => {
                        for key in &c.keys {
                            if !placement.contains(rx, key) {
                                out.push(Violation::CacheKey {
                                    period: pi,
                                    rx,
                                    key: *key,
                                });
                                ok = false;
                            }
                        }
                        let sent: BTreeSet<PartKey> =
                            period.action(*tx).keys().into_iter().collect();
                        let rebuilt: BTreeSet<PartKey> = c.keys.iter().copied().collect();
                        if sent != rebuilt {
                            out.push(Violation::CancelMismatch {
                                period: pi,
                                rx,
                                tx: *tx,
                            });
                            ok = false;
                        }
                    }
                }
            }
            for key in strip {
                if !placement.contains(rx, key) {
                    out.push(Violation::CacheKey {
                        period: pi,
                        rx,
                        key: *key,
                    });
                    ok = false;
                }
            }
            let mut left: BTreeSet<PartKey> = period.action(*listen).keys().into_iter().collect();
            let stripped_all = strip.iter().all(|s| left.remove(s));
            let target_ok = stripped_all
                && left.len() == 1
                && left.contains(target)
                && target.file == demands.of(rx)
                && target.chunk == period.chunk;
            if !target_ok {
                out.push(Violation::WrongTarget { period: pi, rx });
                ok = false;
            }
            if ok {
                obtained[rx - 1]
                    .entry(target.chunk)
                    .or_default()
                    .insert(target.part);
            }
        }
    }

    for rx in guaranteed_receivers(sched.kind, k) {
        let file = demands.of(rx);
        let mut labels = obtained[rx - 1].clone();
        for key in placement
            .cache(rx)
            .keys()
            .filter(|key| key.file == file && key.part != 0)
        {
            labels.entry(key.chunk).or_default().insert(key.part);
        }
        let (have, need) = match sched.kind {
            ScheduleKind::Soft => (labels.get(&0).map_or(0, BTreeSet::len), 5),
            ScheduleKind::Full => (labels.get(&0).map_or(0, BTreeSet::len), 2),
            ScheduleKind::SoftRoundRobin => (
                (1..=k)
                    .filter(|c| labels.get(c).is_some_and(|s| s.len() >= 5))
                    .count(),
                k - 2,
            ),
        };
        if have < need {
            out.push(Violation::Incomplete { rx, have, need });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d6() -> DemandVector {
        DemandVector::new(vec![1, 2, 3, 4, 5, 6], 6).unwrap()
    }

    fn direct(file: usize, part: u8) -> TxAction {
        TxAction::Direct {
            key: PartKey::new(file, part),
        }
    }

    fn xor(fa: usize, pa: u8, fb: usize, pb: u8) -> TxAction {
        TxAction::XorPair {
            a: PartKey::new(fa, pa),
            b: PartKey::new(fb, pb),
        }
    }

    #[test]
    fn period_one_matches_first_subnet() {
        let s = delivery_schedule_soft(6, &d6()).unwrap();
        let p = &s.periods[0];
        assert_eq!(p.action(1), &direct(1, 3));
        assert_eq!(p.action(2), &xor(2, 6, 3, 3));
        assert!(p.action(3).is_silent());
        assert!(p.action(6).is_silent());
        assert_eq!(p.action(4), &direct(4, 3));
        assert_eq!(p.action(5), &xor(5, 6, 6, 3));
    }

    #[test]
    fn later_periods() {
        let s = delivery_schedule_soft(6, &d6()).unwrap();
        assert_eq!(s.periods[1].action(2), &direct(2, 5));
        assert_eq!(s.periods[1].action(3), &xor(3, 1, 4, 5));
        assert!(s.periods[1].action(1).is_silent());
        assert_eq!(s.periods[2].action(1), &xor(1, 4, 2, 1));
        assert_eq!(s.periods[2].action(3), &direct(3, 2));
        assert!(s.periods[2].action(2).is_silent());
    }

    #[test]
    fn receiver_two_decodes_six_five_one() {
        let s = delivery_schedule_soft(6, &d6()).unwrap();
        let targets: Vec<u8> = s
            .periods
            .iter()
            .map(|p| match p.plan(2) {
                DecodePlan::Decode { target, .. } => target.part,
                DecodePlan::Idle => 0,
            })
            .collect();
        assert_eq!(targets, vec![6, 5, 1]);
    }

    #[test]
    fn edge_receivers_are_short() {
        let s = delivery_schedule_soft(7, &DemandVector::cyclic(7, 6)).unwrap();
        let count = |rx: usize| {
            s.periods
                .iter()
                .filter(|p| !matches!(p.plan(rx), DecodePlan::Idle))
                .count()
        };
        assert_eq!(count(1), 2);
        assert_eq!(count(7), 1);
        for rx in 2..7 {
            assert_eq!(count(rx), 3, "rx {rx}");
        }
    }

    #[test]
    fn partial_last_subnet() {
        // K = 5: period 1 leaves Tx 4 alone in its subnet
        let s = delivery_schedule_soft(5, &DemandVector::cyclic(5, 6)).unwrap();
        let p = &s.periods[0];
        assert_eq!(p.action(4), &direct(4, 3));
        assert!(p.action(5).is_silent());
        assert!(matches!(p.plan(4), DecodePlan::Decode { listen: 4, .. }));
        assert_eq!(p.plan(5), &DecodePlan::Idle);
    }

    #[test]
    fn too_small() {
        assert_eq!(
            delivery_schedule_soft(4, &DemandVector::all_equal(4)).unwrap_err(),
            Error::KTooSmall { k: 4, min: 5 }
        );
        assert!(delivery_schedule_full(7, &DemandVector::all_equal(7)).is_err());
    }

    #[test]
    fn round_robin_rotates_roles() {
        let k = 7;
        let s = delivery_schedule_round_robin(k, &DemandVector::cyclic(k, 6)).unwrap();
        assert_eq!(s.periods.len(), 3 * k);
        // each physical receiver is idle-heavy (role 1 or role K) in exactly two chunks
        for rx in 1..=k {
            let bad = (1..=k)
                .filter(|chunk| {
                    let role = role_of(k, rx, *chunk);
                    role == 1 || role == k
                })
                .count();
            assert_eq!(bad, 2);
        }
        // Tx K of the base scheme is Tx l + K = Tx l in chunk l: always silent
        for p in &s.periods {
            assert!(p.action(physical(k, k, p.chunk)).is_silent());
        }
    }

    #[test]
    fn json_view() {
        let s = delivery_schedule_soft(6, &d6()).unwrap();
        let v = s.to_json();
        assert_eq!(v["periods"][0]["tx"]["1"]["action"], "Direct");
        assert_eq!(v["periods"][0]["tx"]["1"]["key"]["part"], 3);
        assert_eq!(v["periods"][0]["rx"]["3"]["plan"], "Decode");
    }
}
