//! Caching and delivery schemes, their building blocks and combinators.

pub mod engine;
pub mod mds;
pub mod partition;
pub mod placement;
pub mod rates;
pub mod schedule;

use num_traits::Num;
use serde::Serialize;

pub use engine::{
    round_robin_soft, run_full, run_full_with, run_soft, run_soft_with, Backend, RunOptions,
    SimResult,
};
pub use mds::{mds_decode, mds_encode, MdsCode};
pub use partition::{reconstruct_five, split_full, split_soft, PartitionedMessage};
pub use placement::{
    augment_placement, cache_placement_full, cache_placement_round_robin, cache_placement_soft,
};
pub use rates::{full_rate, soft_rate};
pub use schedule::{
    delivery_schedule_full, delivery_schedule_round_robin, delivery_schedule_soft, verify_schedule,
    DeliverySchedule, TxAction, Violation,
};

/// A rate-memory pair. `T` is `f64` for bits per channel use or an exact
/// rational for multiplexing-gain arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemePoint<T = f64> {
    pub rate: T,
    pub memory: T,
}

impl<T> SchemePoint<T> {
    pub const fn new(rate: T, memory: T) -> Self {
        SchemePoint { rate, memory }
    }
}

/// Runs `a` for a fraction `lambda` of the time and `b` for the rest.
pub fn time_share<T: Num + Copy>(
    a: SchemePoint<T>,
    b: SchemePoint<T>,
    lambda: T,
) -> SchemePoint<T> {
    let rest = T::one() - lambda;
    SchemePoint {
        rate: lambda * a.rate + rest * b.rate,
        memory: lambda * a.memory + rest * b.memory,
    }
}

/// Caches `d` extra submessages of rate `delta / d` at every receiver:
/// `(R + delta/d, M + delta)`.
pub fn augment_prop1<T: Num + Copy>(base: SchemePoint<T>, delta: T, d: T) -> SchemePoint<T> {
    SchemePoint {
        rate: base.rate + delta / d,
        memory: base.memory + delta,
    }
}
