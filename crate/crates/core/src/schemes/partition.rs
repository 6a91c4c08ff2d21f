//! Submessage splitting.
//!
//! The soft-handoff scheme cuts every message into five data parts and adds a
//! sixth parity part, their XOR, so that any five labels determine the
//! message. The full-model scheme simply halves each message.

use crate::model::{xor_all, Bitstring};
use crate::{Error, Result};

/// Data parts of the soft-handoff split.
pub const SOFT_DATA_PARTS: usize = 5;
/// Parity label of the soft-handoff split.
pub const PARITY_PART: u8 = 6;
/// Parts of the full-model split.
pub const FULL_PARTS: usize = 2;

/// One message cut into labelled parts; `parts[i]` carries label `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedMessage {
    pub parts: Vec<Bitstring>,
}

impl PartitionedMessage {
    /// Part with label `label` (from 1).
    pub fn part(&self, label: u8) -> &Bitstring {
        &self.parts[label as usize - 1]
    }

    pub fn part_len(&self) -> usize {
        self.parts.first().map_or(0, Bitstring::len)
    }
}

/// Five equal data parts plus their XOR as part 6.
pub fn split_soft(msg: &Bitstring) -> Result<PartitionedMessage> {
    if msg.is_empty() {
        return Err(Error::BadLength {
            len: 0,
            divisor: SOFT_DATA_PARTS,
        });
    }
    let mut parts = msg.split_equal(SOFT_DATA_PARTS)?;
    let parity = xor_all(&parts)?;
    parts.push(parity);
    Ok(PartitionedMessage { parts })
}

/// Two equal halves.
pub fn split_full(msg: &Bitstring) -> Result<PartitionedMessage> {
    if msg.is_empty() {
        return Err(Error::BadLength {
            len: 0,
            divisor: FULL_PARTS,
        });
    }
    Ok(PartitionedMessage {
        parts: msg.split_equal(FULL_PARTS)?,
    })
}

/// Rebuilds the message from exactly five distinct labels of the six-part
/// split.
pub fn reconstruct_five(parts: &[(u8, Bitstring)]) -> Result<Bitstring> {
    if parts.len() != SOFT_DATA_PARTS {
        return Err(Error::WrongPartCount {
            expected: SOFT_DATA_PARTS,
            found: parts.len(),
        });
    }
    let mut slots: [Option<&Bitstring>; 6] = Default::default();
    for (label, bits) in parts {
        if !(1..=PARITY_PART).contains(label) {
            return Err(Error::BadParameter(format!(
                "part label {label} outside 1..=6"
            )));
        }
        let slot = &mut slots[*label as usize - 1];
        if slot.is_some() {
            return Err(Error::DuplicateLabel(*label));
        }
        *slot = Some(bits);
    }
    let missing = slots
        .iter()
        .position(Option::is_none)
        .expect("five of six slots filled");
    let mut data: Vec<Bitstring> = Vec::with_capacity(SOFT_DATA_PARTS);
    for (i, slot) in slots.iter().take(SOFT_DATA_PARTS).enumerate() {
        match slot {
            Some(b) => data.push((*b).clone()),
            None => {
                debug_assert_eq!(i, missing);
                data.push(xor_all(slots.iter().flatten().copied())?);
            }
        }
    }
    Ok(Bitstring::concat(&data))
}
