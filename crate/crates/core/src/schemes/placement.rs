//! Server-side part stores and the demand-oblivious cache placements.

use crate::model::{CachePlacement, MessageLibrary, PartKey, PartStore};
use crate::schemes::mds::MdsCode;
use crate::schemes::partition::{split_full, split_soft, SOFT_DATA_PARTS};
use crate::schemes::schedule::{full_sent_part, role_of};
use crate::{Error, Result};

/// Label of the universally cached extra part added by the memory-for-rate
/// augmentation.
pub const EXTRA_PART: u8 = 0;

/// Parts of chunk `chunk` that the receiver playing `role` caches.
pub fn soft_cached_labels(role: usize) -> [u8; 2] {
    match role % 3 {
        1 => [1, 2],
        2 => [3, 4],
        _ => [5, 6],
    }
}

/// Cuts `payload` into its base and extra sections.
fn split_extra(
    payload: &crate::model::Bitstring,
    extra_bits: usize,
) -> Result<(crate::model::Bitstring, Option<crate::model::Bitstring>)> {
    let len = payload.len();
    if extra_bits >= len {
        return Err(Error::BadParameter(format!(
            "extra part of {extra_bits} bits leaves nothing of a {len}-bit payload"
        )));
    }
    let base = payload.slice(0..len - extra_bits);
    let extra = (extra_bits > 0).then(|| payload.slice(len - extra_bits..len));
    Ok((base, extra))
}

/// Six soft-handoff parts of every file; the last `extra_bits` of each
/// payload go into the extra part instead.
pub fn soft_store(library: &MessageLibrary, extra_bits: usize) -> Result<PartStore> {
    let mut store = PartStore::new();
    for file in 1..=library.files() {
        let (base, extra) = split_extra(library.file(file), extra_bits)?;
        for (i, part) in split_soft(&base)?.parts.into_iter().enumerate() {
            store.insert(PartKey::new(file, i as u8 + 1), part);
        }
        if let Some(extra) = extra {
            store.insert(PartKey::new(file, EXTRA_PART), extra);
        }
    }
    Ok(store)
}

/// The two halves of every file.
pub fn full_store(library: &MessageLibrary, extra_bits: usize) -> Result<PartStore> {
    let mut store = PartStore::new();
    for file in 1..=library.files() {
        let (base, extra) = split_extra(library.file(file), extra_bits)?;
        for (i, part) in split_full(&base)?.parts.into_iter().enumerate() {
            store.insert(PartKey::new(file, i as u8 + 1), part);
        }
        if let Some(extra) = extra {
            store.insert(PartKey::new(file, EXTRA_PART), extra);
        }
    }
    Ok(store)
}

/// Round-robin store: each payload is cut into `K-2` data chunks, MDS-coded
/// into `K` chunks, and chunk `l` is split into the six soft parts.
pub fn round_robin_store(library: &MessageLibrary, k: usize) -> Result<PartStore> {
    let code = MdsCode::new(k)?;
    let bits = library.payload_bits();
    let divisor = SOFT_DATA_PARTS * code.data_parts();
    if bits == 0 || !bits.is_multiple_of(divisor) {
        return Err(Error::BadLength { len: bits, divisor });
    }
    let mut store = PartStore::new();
    for file in 1..=library.files() {
        let data = library.file(file).split_equal(code.data_parts())?;
        for (i, chunk) in code.encode(&data)?.iter().enumerate() {
            for (j, part) in split_soft(chunk)?.parts.into_iter().enumerate() {
                store.insert(PartKey::in_chunk(file, i + 1, j as u8 + 1), part);
            }
        }
    }
    Ok(store)
}

fn all_files(files: usize, f: impl Fn(usize) -> Vec<PartKey>) -> Vec<PartKey> {
    (1..=files).flat_map(f).collect()
}

/// Receiver `k` stores parts {1,2}, {3,4} or {5,6} of every file according
/// to `k mod 3` = 1, 2, 0.
pub fn cache_placement_soft(k: usize, files: usize, store: &PartStore) -> Result<CachePlacement> {
    CachePlacement::from_rule(k, store, |rx| {
        all_files(files, |f| {
            soft_cached_labels(rx)
                .iter()
                .map(|p| PartKey::new(f, *p))
                .collect()
        })
    })
}

/// Odd receivers store part 1 of every file, even receivers part 2.
pub fn cache_placement_full(k: usize, files: usize, store: &PartStore) -> Result<CachePlacement> {
    if k % 2 == 1 {
        return Err(Error::OddKForFullModel(k));
    }
    full_placement_rule(k, files, store)
}

/// The odd/even rule without the parity check on `K`.
pub(crate) fn full_placement_rule(
    k: usize,
    files: usize,
    store: &PartStore,
) -> Result<CachePlacement> {
    CachePlacement::from_rule(k, store, |rx| {
        // the receiver keeps the half its own transmitter never sends
        let cached = 3 - full_sent_part(rx);
        all_files(files, |f| vec![PartKey::new(f, cached)])
    })
}

/// For every chunk `l`, receiver `k` caches what role `k - l` caches in the
/// soft placement.
pub fn cache_placement_round_robin(
    k: usize,
    files: usize,
    store: &PartStore,
) -> Result<CachePlacement> {
    CachePlacement::from_rule(k, store, |rx| {
        (1..=k)
            .flat_map(|chunk| {
                let labels = soft_cached_labels(role_of(k, rx, chunk));
                all_files(files, move |f| {
                    labels
                        .iter()
                        .map(|p| PartKey::in_chunk(f, chunk, *p))
                        .collect()
                })
            })
            .collect()
    })
}

/// Adds the extra part of every file to every receiver.
pub fn augment_placement(
    placement: &mut CachePlacement,
    files: usize,
    store: &PartStore,
) -> Result<()> {
    let keys: Vec<PartKey> = (1..=files).map(|f| PartKey::new(f, EXTRA_PART)).collect();
    placement.extend_all(store, &keys)
}
