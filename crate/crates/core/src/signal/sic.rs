//! Waveform-domain two-phase SIC over complete baseband frames.
//!
//! Idealizations, stated up front: carrier, timing and amplitude are
//! perfect; the receiver knows the per-burst interference count when
//! scaling LLRs (perfect noise-variance estimation) and only attempts a
//! signaling read at its design operating point (at most `d_sig`
//! interfering fields). A signaling read succeeds when the decoded bits
//! verify exactly — a stand-in for the short CRC such fields carry.
//! Payload success, by contrast, is decided by the payload CRC alone,
//! and cancellation re-encodes the *decoded* bits, so a lucky wrong
//! decode would visibly pollute the residual.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::protocols::{
    interleave_indices, interleaver_seed, make_transmission_with_slots, payload_partition,
    CodeSpec, Scheme, TransmissionPlan,
};
use crate::rng::RngKey;
use crate::scalar::Real;
use crate::signal::convcode::SoftCodec;
use crate::signal::qpsk::{add_awgn, bit_llrs, map_qpsk};
use crate::signal::rm::{rm_decode, rm_encode};
use crate::signal::{SlotLayout, SlotSignal};

/// Domain seed for user-bound system sequences (preambles, scramblers);
/// transmitter and receiver derive them from the user id alone.
const SEQUENCE_DOMAIN: u64 = 0x00a1_c0de_5eed_0001;

/// Reed-Muller order of the signaling code: RM(1,6), 7 bits per 64-bit
/// codeword.
const RM_ORDER: usize = 6;
const RM_INFO_BITS: usize = RM_ORDER + 1;
const RM_CODE_BITS: usize = 1 << RM_ORDER;
/// Fragment index width in the signaling field. Four bits keep two
/// RM(1,6) codewords (128 coded bits, 64 QPSK symbols) sufficient for
/// small frames, which is exactly the default signaling field.
const FRAGMENT_INDEX_BITS: usize = 4;

fn ceil_log2(n: usize) -> usize {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Static description of a waveform experiment.
pub struct SignalSystem<F: Real> {
    pub config: FrameConfig,
    pub code: Arc<CodeSpec>,
    pub codec: SoftCodec,
    pub fragments: usize,
    pub d_sig: usize,
    pub esn0_db: F,
    pub noiseless: bool,
    layout: SlotLayout,
    interleaver: Vec<usize>,
}

impl<F: Real> SignalSystem<F> {
    pub fn new(
        config: FrameConfig,
        code: Arc<CodeSpec>,
        codec: SoftCodec,
        fragments: usize,
        d_sig: usize,
        esn0_db: F,
        noiseless: bool,
    ) -> Result<Self> {
        if fragments > 1 << FRAGMENT_INDEX_BITS {
            return Err(Error::config(format!(
                "fragment index field holds at most {} fragments",
                1 << FRAGMENT_INDEX_BITS
            )));
        }
        let coded_bits = code.coded_bits()?;
        if codec.coded_len() != coded_bits {
            return Err(Error::config(format!(
                "codec emits {} bits but the code declares {coded_bits}",
                codec.coded_len()
            )));
        }
        if codec.info_bits != code.info_bits {
            return Err(Error::config("codec and code disagree on info bits"));
        }
        let geometry = payload_partition(&code, fragments)?;
        if geometry.symbols_per_burst > config.slot_payload_symbols {
            return Err(Error::config(format!(
                "fragments of {} symbols exceed the {}-symbol payload field",
                geometry.symbols_per_burst, config.slot_payload_symbols
            )));
        }
        let layout = SlotLayout::of(&config);
        let sys = SignalSystem {
            interleaver: interleave_indices(coded_bits, interleaver_seed(&code.code_id)),
            layout,
            config,
            code,
            codec,
            fragments,
            d_sig,
            esn0_db,
            noiseless,
        };
        if sys.sig_symbols_used() > sys.config.signaling_symbols {
            return Err(Error::config(format!(
                "signaling needs {} symbols but the field has {}",
                sys.sig_symbols_used(),
                sys.config.signaling_symbols
            )));
        }
        Ok(sys)
    }

    pub fn pointer_bits(&self) -> usize {
        ceil_log2(self.config.num_slots)
    }

    /// Raw bits of one signaling field: pointers to the sibling bursts
    /// plus the fragment index.
    pub fn field_bits(&self) -> usize {
        (self.fragments - 1) * self.pointer_bits() + FRAGMENT_INDEX_BITS
    }

    pub fn rm_codewords(&self) -> usize {
        self.field_bits().div_ceil(RM_INFO_BITS)
    }

    pub fn sig_symbols_used(&self) -> usize {
        self.rm_codewords() * RM_CODE_BITS / 2
    }

    /// Complex noise variance at the operating point (unit symbol
    /// energy).
    pub fn n0(&self) -> F {
        if self.noiseless {
            F::zero()
        } else {
            F::one() / crate::phy::SnrPoint::from_db(self.esn0_db).esn0_linear()
        }
    }

    fn noise_var(&self, interferers: usize) -> F {
        let v = self.n0() + F::from_f64_lossy(interferers as f64);
        v.max(F::from_f64_lossy(1e-12))
    }

    fn preamble(&self, user: usize) -> Vec<Complex<F>> {
        let mut rng = RngKey::new(SEQUENCE_DOMAIN)
            .tagged("preamble")
            .index(user as u64)
            .rng();
        let bits: Vec<u8> = (0..2 * self.config.preamble_symbols)
            .map(|_| rng.gen_range(0..2) as u8)
            .collect();
        map_qpsk(&bits)
    }

    fn payload_scramble(&self, user: usize) -> Vec<u8> {
        let mut rng = RngKey::new(SEQUENCE_DOMAIN)
            .tagged("scramble-payload")
            .index(user as u64)
            .rng();
        (0..2 * self.config.slot_payload_symbols * self.fragments)
            .map(|_| rng.gen_range(0..2) as u8)
            .collect()
    }

    fn sig_scramble(&self, user: usize) -> Vec<u8> {
        let mut rng = RngKey::new(SEQUENCE_DOMAIN)
            .tagged("scramble-sig")
            .index(user as u64)
            .rng();
        (0..self.fragments * self.rm_codewords() * RM_CODE_BITS)
            .map(|_| rng.gen_range(0..2) as u8)
            .collect()
    }

    /// Raw signaling field content for burst `j` of a plan.
    fn field_content(&self, plan: &TransmissionPlan, j: usize) -> Vec<u8> {
        let pb = self.pointer_bits();
        let mut bits = Vec::with_capacity(self.field_bits());
        for &slot in &plan.signaling[j].sibling_slots {
            for i in (0..pb).rev() {
                bits.push(((slot >> i) & 1) as u8);
            }
        }
        for i in (0..FRAGMENT_INDEX_BITS).rev() {
            bits.push(((j >> i) & 1) as u8);
        }
        debug_assert_eq!(bits.len(), self.field_bits());
        bits
    }

    /// RM-encoded, scrambled signaling symbols for burst `j`.
    fn sig_symbols(&self, user: usize, plan: &TransmissionPlan, j: usize) -> Vec<Complex<F>> {
        let mut bits = self.field_content(plan, j);
        bits.resize(self.rm_codewords() * RM_INFO_BITS, 0);
        let mut coded = Vec::with_capacity(self.rm_codewords() * RM_CODE_BITS);
        for chunk in bits.chunks(RM_INFO_BITS) {
            coded.extend(rm_encode(RM_ORDER, chunk));
        }
        let scramble = self.sig_scramble(user);
        let offset = j * self.rm_codewords() * RM_CODE_BITS;
        for (i, b) in coded.iter_mut().enumerate() {
            *b ^= scramble[offset + i];
        }
        map_qpsk(&coded)
    }

    /// Interleaved, scrambled payload symbols for the whole block, in
    /// fragment order.
    fn payload_symbols(&self, user: usize, info: &[u8]) -> Vec<Complex<F>> {
        let coded = self.codec.encode(info);
        let scramble = self.payload_scramble(user);
        let spb = 2 * self.spb();
        let mut tx = vec![0u8; spb * self.fragments];
        for (i, &src) in self.interleaver.iter().enumerate() {
            tx[i] = coded[src] ^ scramble[i];
        }
        map_qpsk(&tx)
    }

    fn spb(&self) -> usize {
        // geometry was validated in new()
        payload_partition(&self.code, self.fragments)
            .unwrap()
            .symbols_per_burst
    }

    /// Builds one frame of waveforms for the given burst placements.
    pub fn generate_frame(&self, placements: &[Vec<usize>], key: &RngKey) -> Result<SignalFrame<F>> {
        let scheme = Scheme::Musca {
            fragments: self.fragments,
        };
        let slot_len = self.layout.slot_symbols();
        let mut plans = Vec::with_capacity(placements.len());
        let mut payload_bits = Vec::with_capacity(placements.len());
        let mut sig_bits = Vec::with_capacity(placements.len());
        let mut clean: Vec<SlotSignal<F>> =
            vec![vec![Complex::new(F::zero(), F::zero()); slot_len]; self.config.num_slots];
        for (u, slots) in placements.iter().enumerate() {
            let plan =
                make_transmission_with_slots(&scheme, &self.code, u, &self.config, slots.clone())?;
            let mut info_rng = key.tagged("info").index(u as u64).rng();
            let info: Vec<u8> = (0..self.code.info_bits)
                .map(|_| info_rng.gen_range(0..2) as u8)
                .collect();
            let payload = self.payload_symbols(u, &info);
            let preamble = self.preamble(u);
            let spb = self.spb();
            let mut fields = Vec::with_capacity(self.fragments);
            for j in 0..self.fragments {
                let slot = plan.slot_of(j);
                let target = &mut clean[slot];
                for (i, &s) in preamble.iter().enumerate() {
                    target[self.layout.preamble.start + i] += s;
                }
                for (i, &s) in self.sig_symbols(u, &plan, j).iter().enumerate() {
                    target[self.layout.signaling.start + i] += s;
                }
                for (i, &s) in payload[j * spb..(j + 1) * spb].iter().enumerate() {
                    target[self.layout.payload.start + i] += s;
                }
                fields.push(self.field_content(&plan, j));
            }
            plans.push(plan);
            payload_bits.push(info);
            sig_bits.push(fields);
        }
        let mut received = clean.clone();
        if !self.noiseless {
            let mut rng = key.tagged("noise").rng();
            let n0 = self.n0();
            for slot in &mut received {
                add_awgn(slot, n0, &mut rng);
            }
        }
        Ok(SignalFrame {
            plans,
            payload_bits,
            sig_bits,
            clean,
            received,
        })
    }
}

/// One generated frame: transmitted truth plus the received waveform.
pub struct SignalFrame<F: Real> {
    pub plans: Vec<TransmissionPlan>,
    pub payload_bits: Vec<Vec<u8>>,
    /// Raw signaling field bits per user per burst.
    pub sig_bits: Vec<Vec<Vec<u8>>>,
    pub clean: Vec<SlotSignal<F>>,
    pub received: Vec<SlotSignal<F>>,
}

/// Outcome of a waveform run.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalOutcome {
    pub located: Vec<bool>,
    pub decoded: Vec<bool>,
    pub iterations: usize,
    pub deadlock: bool,
}

impl SignalOutcome {
    pub fn decoded_count(&self) -> usize {
        self.decoded.iter().filter(|&&d| d).count()
    }
}

/// Mutable receiver state over one frame's residual.
pub struct SignalReceiver<'a, F: Real> {
    sys: &'a SignalSystem<F>,
    frame: &'a SignalFrame<F>,
    residual: Vec<SlotSignal<F>>,
    slot_users: Vec<Vec<usize>>,
    located: Vec<bool>,
    decoded: Vec<bool>,
    cancelled: Vec<bool>,
    memo: Vec<Option<Vec<usize>>>,
    iterations: usize,
}

impl<'a, F: Real> SignalReceiver<'a, F> {
    pub fn new(sys: &'a SignalSystem<F>, frame: &'a SignalFrame<F>) -> Self {
        let n = frame.plans.len();
        let mut slot_users = vec![Vec::new(); sys.config.num_slots];
        for (u, plan) in frame.plans.iter().enumerate() {
            for &s in &plan.placement.slots {
                slot_users[s].push(u);
            }
        }
        SignalReceiver {
            sys,
            frame,
            residual: frame.received.clone(),
            slot_users,
            located: vec![false; n],
            decoded: vec![false; n],
            cancelled: vec![false; n],
            memo: vec![None; n],
            iterations: 0,
        }
    }

    fn sig_degree(&self, user: usize, burst: usize) -> usize {
        let slot = self.frame.plans[user].placement.slots[burst];
        self.slot_users[slot]
            .iter()
            .filter(|&&v| v != user && !self.located[v])
            .count()
    }

    fn data_degree(&self, user: usize, burst: usize) -> usize {
        let slot = self.frame.plans[user].placement.slots[burst];
        self.slot_users[slot]
            .iter()
            .filter(|&&v| v != user && !self.cancelled[v])
            .count()
    }

    fn degrees(&self, user: usize) -> Vec<usize> {
        (0..self.sys.fragments)
            .map(|j| self.data_degree(user, j))
            .collect()
    }

    fn subtract(&mut self, slot: usize, start: usize, symbols: &[Complex<F>]) {
        for (i, &s) in symbols.iter().enumerate() {
            self.residual[slot][start + i] -= s;
        }
    }

    /// Attempts to read burst `j`'s signaling field from the residual.
    fn read_signaling(&self, user: usize, burst: usize) -> Vec<u8> {
        let sys = self.sys;
        let plan = &self.frame.plans[user];
        let slot = plan.slot_of(burst);
        let var = sys.noise_var(self.sig_degree(user, burst));
        let start = sys.layout.signaling.start;
        let symbols = &self.residual[slot][start..start + sys.sig_symbols_used()];
        let mut llrs = bit_llrs(symbols, var);
        let scramble = sys.sig_scramble(user);
        let offset = burst * sys.rm_codewords() * RM_CODE_BITS;
        for (i, l) in llrs.iter_mut().enumerate() {
            if scramble[offset + i] == 1 {
                *l = -*l;
            }
        }
        let mut bits = Vec::with_capacity(sys.rm_codewords() * RM_INFO_BITS);
        for chunk in llrs.chunks(RM_CODE_BITS) {
            bits.extend(rm_decode(RM_ORDER, chunk).0);
        }
        bits.truncate(sys.field_bits());
        bits
    }

    fn locate(&mut self, user: usize) {
        self.located[user] = true;
        let plan = &self.frame.plans[user];
        for j in 0..self.sys.fragments {
            let symbols = self.sys.sig_symbols(user, plan, j);
            self.subtract(plan.slot_of(j), self.sys.layout.signaling.start, &symbols);
        }
    }

    /// Signaling phase to fixpoint.
    fn locate_pass(&mut self) {
        loop {
            let mut changed = false;
            for u in 0..self.frame.plans.len() {
                if self.located[u] {
                    continue;
                }
                let readable = (0..self.sys.fragments)
                    .find(|&j| self.sig_degree(u, j) <= self.sys.d_sig)
                    .map(|j| self.read_signaling(u, j) == self.frame.sig_bits[u][j])
                    .unwrap_or(false);
                if readable {
                    self.locate(u);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Full payload decode from the residual; success is the CRC's call.
    fn attempt(&mut self, user: usize) -> bool {
        let sys = self.sys;
        let plan = &self.frame.plans[user];
        let spb = sys.spb();
        let degrees = self.degrees(user);
        let scramble = sys.payload_scramble(user);
        let mut rx = vec![F::zero(); 2 * spb * sys.fragments];
        for (j, &d) in degrees.iter().enumerate() {
            if d > sys.code.erasure_degree_threshold {
                continue; // beyond the design point: discard the burst
            }
            let slot = plan.slot_of(j);
            let start = sys.layout.payload.start;
            let symbols = &self.residual[slot][start..start + spb];
            let llrs = bit_llrs(symbols, sys.noise_var(d));
            for (i, &l) in llrs.iter().enumerate() {
                let pos = j * 2 * spb + i;
                rx[pos] = if scramble[pos] == 1 { -l } else { l };
            }
        }
        let mut coded = vec![F::zero(); sys.codec.coded_len()];
        for (i, &src) in sys.interleaver.iter().enumerate() {
            coded[src] = rx[i];
        }
        match sys.codec.decode(&coded) {
            Some(bits) => {
                self.decoded[user] = true;
                self.cancelled[user] = true;
                let payload = sys.payload_symbols(user, &bits);
                let preamble = sys.preamble(user);
                for j in 0..sys.fragments {
                    let slot = plan.slot_of(j);
                    self.subtract(slot, sys.layout.preamble.start, &preamble);
                    let frag = &payload[j * spb..(j + 1) * spb];
                    self.subtract(slot, sys.layout.payload.start, frag);
                }
                true
            }
            None => {
                self.memo[user] = Some(degrees);
                false
            }
        }
    }

    fn select_user(&self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for u in 0..self.frame.plans.len() {
            if !self.located[u] || self.decoded[u] {
                continue;
            }
            let degrees = self.degrees(u);
            if self.memo[u].as_ref() == Some(&degrees) {
                continue;
            }
            let clean = degrees.iter().filter(|&&d| d == 0).count();
            match best {
                Some((c, _)) if c >= clean => {}
                _ => best = Some((clean, u)),
            }
        }
        best.map(|(_, u)| u)
    }

    pub fn run(&mut self) -> SignalOutcome {
        let n = self.frame.plans.len();
        if n == 0 {
            return self.outcome(false);
        }
        loop {
            self.iterations += 1;
            self.locate_pass();
            let mut progress = false;
            while let Some(u) = self.select_user() {
                if self.attempt(u) {
                    progress = true;
                }
            }
            if self.decoded.iter().all(|&d| d) {
                return self.outcome(false);
            }
            if !progress || self.iterations > n {
                return self.outcome(true);
            }
        }
    }

    fn outcome(&self, deadlock: bool) -> SignalOutcome {
        SignalOutcome {
            located: self.located.clone(),
            decoded: self.decoded.clone(),
            iterations: self.iterations,
            deadlock,
        }
    }

    /// Total energy left in the residual frame.
    pub fn residual_energy(&self) -> F {
        self.residual
            .iter()
            .flat_map(|slot| slot.iter())
            .map(|s| s.norm_sqr())
            .sum()
    }

    pub fn residual(&self) -> &[SlotSignal<F>] {
        &self.residual
    }
}
