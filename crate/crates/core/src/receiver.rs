//! The two-phase successive interference cancellation receiver.
//!
//! Phase one reads signaling fields: a user's pointer block decodes when
//! one of its bursts sees at most `d_sig` other still-unread signaling
//! fields; once a user is *located*, its signaling fields are
//! re-encoded and subtracted everywhere. Phase two decodes payloads:
//! among located, undecoded users the one with the most clean bursts is
//! attempted; a success removes the whole transmission from the frame
//! and the pass repeats until nothing moves.
//!
//! SA and DSA bypass all of this: every user is judged once against the
//! frame as received.
//!
//! Slot occupancy is tracked incrementally (per-slot active counts) and
//! can be cross-checked against a from-scratch recount with
//! [`DecoderState::verify_consistency`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::phy::{canonical_pattern, PhyModel};
use crate::protocols::TransmissionPlan;
use crate::rng::RngKey;
use crate::scalar::Real;

/// Receiver tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicParams {
    /// Largest number of interfering signaling fields the pointer code
    /// still reads through.
    pub d_sig: usize,
    /// False for the SA/DSA one-shot baselines.
    pub sic_enabled: bool,
    /// Cap on outer locate/decode passes; `None` means one more than the
    /// user count, which the algorithm cannot exceed anyway.
    pub max_outer_iterations: Option<usize>,
    /// Record per-event trace for export.
    pub record_trace: bool,
}

impl Default for SicParams {
    fn default() -> Self {
        SicParams {
            d_sig: 1,
            sic_enabled: true,
            max_outer_iterations: None,
            record_trace: false,
        }
    }
}

/// One receiver decision, exportable as JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    /// Signaling decoded; the user's burst positions are now known.
    Located { iteration: usize, user_id: usize },
    /// Payload decode attempt with the canonical interference pattern it
    /// faced.
    DataAttempt {
        iteration: usize,
        user_id: usize,
        pattern: Vec<usize>,
        success: bool,
    },
    /// A decoded user's bursts were subtracted from the frame.
    Cancelled { iteration: usize, user_id: usize },
    /// No progress with these users still undecoded.
    Deadlock {
        iteration: usize,
        remaining: Vec<usize>,
    },
}

/// Writes one JSON object per line.
pub fn write_trace_jsonl<W: Write>(events: &[TraceEvent], mut out: W) -> Result<()> {
    for event in events {
        let line = serde_json::to_string(event)
            .map_err(|e| Error::input(format!("trace serialization: {e}")))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<trace>", e))?;
    }
    Ok(())
}

/// Result of running the receiver over one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SicSummary {
    pub located: Vec<bool>,
    pub decoded: Vec<bool>,
    /// Outer locate/decode passes executed.
    pub iterations: usize,
    /// True when undecoded users remained and a full pass made no
    /// progress.
    pub deadlock: bool,
}

impl SicSummary {
    pub fn decoded_count(&self) -> usize {
        self.decoded.iter().filter(|&&d| d).count()
    }

    pub fn lost_count(&self) -> usize {
        self.decoded.len() - self.decoded_count()
    }
}

/// Incremental receiver state over one frame.
pub struct DecoderState<'a, F: Real> {
    config: &'a FrameConfig,
    plans: &'a [TransmissionPlan],
    phy: &'a PhyModel<F>,
    esn0_db: F,
    params: SicParams,
    /// Plan indices occupying each slot (never mutated).
    slot_users: Vec<Vec<usize>>,
    /// Per slot: payloads not yet cancelled.
    data_active: Vec<u32>,
    /// Per slot: signaling fields not yet subtracted (i.e. occupants not
    /// yet located).
    sig_active: Vec<u32>,
    located: Vec<bool>,
    decoded: Vec<bool>,
    cancelled: Vec<bool>,
    /// Canonical pattern at the last failed attempt; a user is retried
    /// only once the pattern has changed.
    memo: Vec<Option<Vec<usize>>>,
    /// Re-examination flag, set when a cancellation touches the user's
    /// slots.
    retry: Vec<bool>,
    attempts: Vec<u64>,
    /// Set by a successful attempt; the owner must be cancelled before
    /// anything else happens.
    pending_cancel: Option<usize>,
    iteration: usize,
    trace: Vec<TraceEvent>,
}

impl<'a, F: Real> DecoderState<'a, F> {
    pub fn new(
        config: &'a FrameConfig,
        plans: &'a [TransmissionPlan],
        phy: &'a PhyModel<F>,
        esn0_db: F,
        params: SicParams,
    ) -> Result<Self> {
        let n = plans.len();
        let mut slot_users = vec![Vec::new(); config.num_slots];
        for (idx, plan) in plans.iter().enumerate() {
            if plan.user_id != idx {
                return Err(Error::input(format!(
                    "plan {idx} carries user id {}; plans must be ordered by user id",
                    plan.user_id
                )));
            }
            for &s in &plan.placement.slots {
                if s >= config.num_slots {
                    return Err(Error::input(format!(
                        "user {idx} uses slot {s} of a {}-slot frame",
                        config.num_slots
                    )));
                }
                slot_users[s].push(idx);
            }
        }
        let counts: Vec<u32> = slot_users.iter().map(|v| v.len() as u32).collect();
        Ok(DecoderState {
            config,
            plans,
            phy,
            esn0_db,
            params,
            slot_users,
            data_active: counts.clone(),
            sig_active: counts,
            located: vec![false; n],
            decoded: vec![false; n],
            cancelled: vec![false; n],
            memo: vec![None; n],
            retry: vec![true; n],
            attempts: vec![0; n],
            pending_cancel: None,
            iteration: 0,
            trace: Vec::new(),
        })
    }

    pub fn num_users(&self) -> usize {
        self.plans.len()
    }

    pub fn is_located(&self, user: usize) -> bool {
        self.located[user]
    }

    pub fn is_decoded(&self, user: usize) -> bool {
        self.decoded[user]
    }

    pub fn iterations(&self) -> usize {
        self.iteration
    }

    /// Interferers currently seen by burst `j` of `user`'s payload.
    pub fn data_degree(&self, user: usize, burst: usize) -> usize {
        let slot = self.plans[user].placement.slots[burst];
        let own = !self.cancelled[user] as u32;
        (self.data_active[slot] - own) as usize
    }

    /// Interferers currently seen by burst `j` of `user`'s signaling
    /// field.
    pub fn sig_degree(&self, user: usize, burst: usize) -> usize {
        let slot = self.plans[user].placement.slots[burst];
        let own = !self.located[user] as u32;
        (self.sig_active[slot] - own) as usize
    }

    /// Payload interference degrees of all bursts, in burst order.
    pub fn raw_degrees(&self, user: usize) -> Vec<usize> {
        (0..self.plans[user].burst_count())
            .map(|j| self.data_degree(user, j))
            .collect()
    }

    /// Degrees as the decoder will treat them: under the collision-
    /// erasure working assumption any collided burst counts as erased.
    pub fn effective_degrees(&self, user: usize) -> Vec<usize> {
        let plan = &self.plans[user];
        let mut degrees = self.raw_degrees(user);
        if plan.erase_collided {
            let erased = plan.code.erasure_degree_threshold + 1;
            for d in &mut degrees {
                if *d > 0 {
                    *d = erased;
                }
            }
        }
        degrees
    }

    fn locate(&mut self, user: usize) {
        debug_assert!(!self.located[user]);
        self.located[user] = true;
        for &s in &self.plans[user].placement.slots {
            self.sig_active[s] -= 1;
        }
        if self.params.record_trace {
            self.trace.push(TraceEvent::Located {
                iteration: self.iteration,
                user_id: user,
            });
        }
    }

    /// Reads signaling fields to a fixpoint; returns how many users were
    /// newly located.
    pub fn signaling_pass(&mut self) -> usize {
        let mut newly = 0;
        loop {
            let mut changed = false;
            for u in 0..self.plans.len() {
                if self.located[u] {
                    continue;
                }
                let readable = (0..self.plans[u].burst_count())
                    .any(|j| self.sig_degree(u, j) <= self.params.d_sig);
                if readable {
                    self.locate(u);
                    changed = true;
                    newly += 1;
                }
            }
            if !changed {
                break;
            }
        }
        newly
    }

    /// Decides one decode attempt: computes the interference pattern,
    /// asks the decode model, draws a Bernoulli when the model is
    /// probabilistic. Draws are keyed by (user, attempt index) so the
    /// outcome does not depend on scheduling order.
    fn judge_decode(&mut self, user: usize, key: &RngKey) -> (Vec<usize>, bool) {
        let plan = &self.plans[user];
        let degrees = self.effective_degrees(user);
        let p = self.phy.decode_prob(
            plan.kind,
            &plan.code,
            plan.geometry.symbols_per_burst,
            &degrees,
            self.esn0_db,
        );
        let attempt = self.attempts[user];
        self.attempts[user] += 1;
        let success = if p >= F::one() {
            true
        } else if p <= F::zero() {
            false
        } else {
            let u = key
                .tagged("decode")
                .index(user as u64)
                .index(attempt)
                .unit_f64();
            u < p.to_f64()
        };
        let canon = canonical_pattern(&degrees, plan.code.erasure_degree_threshold);
        if self.params.record_trace {
            self.trace.push(TraceEvent::DataAttempt {
                iteration: self.iteration,
                user_id: user,
                pattern: canon.clone(),
                success,
            });
        }
        (canon, success)
    }

    /// One SIC decode attempt on a located user. A success leaves the
    /// user pending cancellation.
    pub fn attempt_data_decode(&mut self, user: usize, key: &RngKey) -> Result<bool> {
        if let Some(p) = self.pending_cancel {
            return Err(Error::contract(format!(
                "attempt on user {user} while user {p} awaits cancellation"
            )));
        }
        if !self.located[user] {
            return Err(Error::contract(format!("user {user} is not located")));
        }
        if self.decoded[user] {
            return Err(Error::contract(format!("user {user} already decoded")));
        }
        let (canon, success) = self.judge_decode(user, key);
        if success {
            self.decoded[user] = true;
            self.pending_cancel = Some(user);
        } else {
            self.memo[user] = Some(canon);
            self.retry[user] = false;
        }
        Ok(success)
    }

    /// Subtracts a decoded user's bursts from the frame.
    pub fn cancel_user(&mut self, user: usize) -> Result<()> {
        if self.pending_cancel != Some(user) {
            return Err(Error::contract(format!(
                "cancel of user {user} but pending is {:?}",
                self.pending_cancel
            )));
        }
        self.pending_cancel = None;
        self.cancelled[user] = true;
        for &s in &self.plans[user].placement.slots {
            self.data_active[s] = self.data_active[s].checked_sub(1).ok_or_else(|| {
                Error::contract(format!("slot {s} active count underflow"))
            })?;
            for &other in &self.slot_users[s] {
                if other != user && !self.decoded[other] {
                    self.retry[other] = true;
                }
            }
        }
        if self.params.record_trace {
            self.trace.push(TraceEvent::Cancelled {
                iteration: self.iteration,
                user_id: user,
            });
        }
        Ok(())
    }

    /// Next user worth attempting: located, undecoded, and facing a
    /// pattern not already known to fail; of those, the one with the most
    /// clean bursts, lowest user id on ties.
    pub fn select_next_user(&mut self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for u in 0..self.plans.len() {
            if !self.located[u] || self.decoded[u] || !self.retry[u] {
                continue;
            }
            if let Some(failed) = &self.memo[u] {
                let plan = &self.plans[u];
                let canon = canonical_pattern(
                    &self.effective_degrees(u),
                    plan.code.erasure_degree_threshold,
                );
                if canon == *failed {
                    // nothing changed where it matters; wait for another
                    // cancellation
                    self.retry[u] = false;
                    continue;
                }
            }
            let clean = (0..self.plans[u].burst_count())
                .filter(|&j| self.data_degree(u, j) == 0)
                .count();
            match best {
                Some((c, _)) if c >= clean => {}
                _ => best = Some((clean, u)),
            }
        }
        best.map(|(_, u)| u)
    }

    fn remaining(&self) -> Vec<usize> {
        (0..self.plans.len()).filter(|&u| !self.decoded[u]).collect()
    }

    /// Runs the receiver to completion.
    pub fn run(&mut self, key: &RngKey) -> Result<SicSummary> {
        if self.plans.is_empty() {
            return Ok(self.summary(false));
        }
        if !self.params.sic_enabled {
            self.iteration = 1;
            for u in 0..self.plans.len() {
                let (_, success) = self.judge_decode(u, key);
                if success {
                    self.decoded[u] = true;
                }
            }
            return Ok(self.summary(false));
        }
        let cap = self
            .params
            .max_outer_iterations
            .unwrap_or(self.plans.len() + 1);
        loop {
            self.iteration += 1;
            self.signaling_pass();
            let mut progress = false;
            while let Some(u) = self.select_next_user() {
                if self.attempt_data_decode(u, key)? {
                    self.cancel_user(u)?;
                    progress = true;
                }
            }
            if self.decoded.iter().all(|&d| d) {
                return Ok(self.summary(false));
            }
            if !progress || self.iteration >= cap {
                if self.params.record_trace {
                    let remaining = self.remaining();
                    self.trace.push(TraceEvent::Deadlock {
                        iteration: self.iteration,
                        remaining,
                    });
                }
                return Ok(self.summary(true));
            }
        }
    }

    fn summary(&self, deadlock: bool) -> SicSummary {
        SicSummary {
            located: self.located.clone(),
            decoded: self.decoded.clone(),
            iterations: self.iteration,
            deadlock,
        }
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.trace)
    }

    /// Recomputes every incremental counter from scratch and compares.
    pub fn verify_consistency(&self) -> Result<()> {
        for s in 0..self.config.num_slots {
            let data: u32 = self
                .slot_users[s]
                .iter()
                .filter(|&&u| !self.cancelled[u])
                .count() as u32;
            if data != self.data_active[s] {
                return Err(Error::contract(format!(
                    "slot {s}: data_active {} but recount {data}",
                    self.data_active[s]
                )));
            }
            let sig: u32 = self
                .slot_users[s]
                .iter()
                .filter(|&&u| !self.located[u])
                .count() as u32;
            if sig != self.sig_active[s] {
                return Err(Error::contract(format!(
                    "slot {s}: sig_active {} but recount {sig}",
                    self.sig_active[s]
                )));
            }
        }
        for u in 0..self.plans.len() {
            if self.cancelled[u] && !self.decoded[u] {
                return Err(Error::contract(format!("user {u} cancelled but not decoded")));
            }
            let pending_here = self.pending_cancel == Some(u);
            if self.decoded[u] && !self.cancelled[u] && !pending_here && self.params.sic_enabled {
                return Err(Error::contract(format!(
                    "user {u} decoded but neither cancelled nor pending"
                )));
            }
            if self.params.sic_enabled && self.decoded[u] && !self.located[u] {
                return Err(Error::contract(format!("user {u} decoded but never located")));
            }
        }
        Ok(())
    }
}

/// Convenience wrapper: builds the state, runs it, returns the summary.
pub fn run_sic<F: Real>(
    config: &FrameConfig,
    plans: &[TransmissionPlan],
    phy: &PhyModel<F>,
    esn0_db: F,
    params: &SicParams,
    key: &RngKey,
) -> Result<SicSummary> {
    let mut state = DecoderState::new(config, plans, phy, esn0_db, params.clone())?;
    state.run(key)
}
