//! Slot grid geometry, burst placement and interference accounting.
//!
//! A frame is `num_slots` consecutive slots, each exactly one burst long.
//! Every user transmits one block per frame as `n_b` bursts on distinct
//! slots; the burst size (preamble + signaling + payload symbols) is the
//! same for all users. Slot indices are 0-based and frames are independent
//! across trials.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Users are identified by a dense index into the trial's plan list.
pub type UserId = usize;

/// Slot grid geometry shared by all users of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Number of slots per frame.
    pub num_slots: usize,
    /// QPSK symbols in the data field of one burst.
    pub slot_payload_symbols: usize,
    /// Symbols in the signaling field of one burst.
    pub signaling_symbols: usize,
    /// Symbols in the (known, unused) preamble of one burst.
    pub preamble_symbols: usize,
}

impl FrameConfig {
    pub fn new(
        num_slots: usize,
        slot_payload_symbols: usize,
        signaling_symbols: usize,
        preamble_symbols: usize,
    ) -> Result<Self> {
        if num_slots == 0 {
            return Err(Error::config("frame must have at least one slot"));
        }
        if slot_payload_symbols == 0 || signaling_symbols == 0 {
            return Err(Error::config(
                "payload and signaling fields must be at least one symbol",
            ));
        }
        Ok(FrameConfig {
            num_slots,
            slot_payload_symbols,
            signaling_symbols,
            preamble_symbols,
        })
    }

    /// Total burst length in symbols; identical for every user.
    pub fn burst_symbols(&self) -> usize {
        self.preamble_symbols + self.signaling_symbols + self.slot_payload_symbols
    }

    /// Geometry used in the experiments: 100..500 slots, 460-symbol
    /// payload, 64-symbol signaling field, 32-symbol preamble.
    pub fn with_slots(num_slots: usize) -> Result<Self> {
        FrameConfig::new(num_slots, 460, 64, 32)
    }
}

/// The slots chosen by one user, in draw order (burst `j` occupies
/// `slots[j]`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstPlacement {
    pub user_id: UserId,
    pub slots: Vec<usize>,
}

impl BurstPlacement {
    pub fn new(user_id: UserId, slots: Vec<usize>, num_slots: usize) -> Result<Self> {
        let mut seen = HashSet::with_capacity(slots.len());
        for &s in &slots {
            if s >= num_slots {
                return Err(Error::input(format!(
                    "slot {s} out of range for {num_slots}-slot frame"
                )));
            }
            if !seen.insert(s) {
                return Err(Error::input(format!("duplicate slot {s} in placement")));
            }
        }
        Ok(BurstPlacement { user_id, slots })
    }

    pub fn burst_count(&self) -> usize {
        self.slots.len()
    }
}

/// Draws `n_b` distinct slot indices uniformly without replacement.
pub fn place_bursts<R: Rng + ?Sized>(
    rng: &mut R,
    num_slots: usize,
    n_b: usize,
) -> Result<Vec<usize>> {
    if n_b == 0 {
        return Err(Error::config("a user must transmit at least one burst"));
    }
    if n_b > num_slots {
        return Err(Error::config(format!(
            "cannot place {n_b} bursts on {num_slots} distinct slots"
        )));
    }
    Ok(rand::seq::index::sample(rng, num_slots, n_b).into_vec())
}

/// Per-slot occupant sets, materialized from a collection of placements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameOccupancy {
    slots: Vec<Vec<UserId>>,
}

impl FrameOccupancy {
    pub fn from_placements(placements: &[BurstPlacement], config: &FrameConfig) -> Result<Self> {
        let mut seen = HashSet::with_capacity(placements.len());
        let mut slots = vec![Vec::new(); config.num_slots];
        for p in placements {
            if !seen.insert(p.user_id) {
                return Err(Error::input(format!(
                    "user {} appears in more than one placement",
                    p.user_id
                )));
            }
            for &s in &p.slots {
                if s >= config.num_slots {
                    return Err(Error::input(format!(
                        "slot {s} out of range for {}-slot frame",
                        config.num_slots
                    )));
                }
                slots[s].push(p.user_id);
            }
        }
        Ok(FrameOccupancy { slots })
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    /// Users with a burst on `slot`, in placement order.
    pub fn occupants(&self, slot: usize) -> &[UserId] {
        &self.slots[slot]
    }

    /// Number of *other* active users sharing `slot`, clamped at zero.
    ///
    /// "Active" is the caller's current interference bookkeeping; users
    /// already cancelled are simply left out of the set.
    pub fn interference_degree(&self, slot: usize, active: &HashSet<UserId>) -> usize {
        let n = self.slots[slot]
            .iter()
            .filter(|u| active.contains(u))
            .count();
        n.saturating_sub(1)
    }
}

/// One sample of the load/throughput relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint<F> {
    pub num_users: usize,
    pub normalized_load: F,
    pub plr: F,
    pub throughput: F,
}

impl<F: Real> LoadPoint<F> {
    pub fn new(num_users: usize, num_slots: usize, plr: F) -> Result<Self> {
        let load = normalized_load(num_users, num_slots)?;
        Ok(LoadPoint {
            num_users,
            normalized_load: load,
            plr,
            throughput: throughput(load, plr)?,
        })
    }
}

/// Offered load G: average block transmissions per slot.
pub fn normalized_load<F: Real>(num_users: usize, num_slots: usize) -> Result<F> {
    if num_slots == 0 {
        return Err(Error::config("load is undefined for an empty frame"));
    }
    Ok(F::from_usize(num_users).unwrap() / F::from_usize(num_slots).unwrap())
}

/// Throughput T = G·(1 − PLR): successfully decoded blocks per slot.
pub fn throughput<F: Real>(load: F, plr: F) -> Result<F> {
    if !(F::zero()..=F::one()).contains(&plr) {
        return Err(Error::input(format!("PLR {plr:?} outside [0,1]")));
    }
    Ok(load * (F::one() - plr))
}

/// The slotted ALOHA reference curve T = G·e^(−G).
pub fn sa_reference_throughput<F: Real>(load: F) -> F {
    load * (-load).exp()
}
