//! Reference payload codec: memory-6 rate-1/2 convolutional code
//! (generators 133, 171 octal), zero-terminated, behind a CRC-16 for
//! block success detection, extended to lower rates by repetition with
//! LLR accumulation. Decoding is exact soft maximum-likelihood over the
//! trellis (Viterbi).

use crate::scalar::Real;

const MEMORY: usize = 6;
const STATES: usize = 1 << MEMORY;
const G0: u32 = 0o133;
const G1: u32 = 0o171;
/// CRC-16/CCITT polynomial.
const CRC_POLY: u16 = 0x1021;
const CRC_INIT: u16 = 0xFFFF;
const CRC_BITS: usize = 16;

fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Encodes `bits` plus six zero tail bits; output length is
/// `2·(bits.len() + 6)`.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * (bits.len() + MEMORY));
    let mut state: u32 = 0;
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, MEMORY)) {
        let w = ((b as u32) << MEMORY) | state;
        out.push(parity(w & G0));
        out.push(parity(w & G1));
        state = w >> 1;
    }
    out
}

/// Exact soft ML sequence decoding of `num_inputs` bits (tail included)
/// from `2·num_inputs` LLRs, positive favouring bit 0. The path is
/// constrained to start and end in the zero state.
pub fn viterbi_ml<F: Real>(llrs: &[F], num_inputs: usize) -> Vec<u8> {
    assert_eq!(llrs.len(), 2 * num_inputs, "rate-1/2 trellis");
    let neg_inf = F::from_f64_lossy(f64::NEG_INFINITY);
    let mut metric = vec![neg_inf; STATES];
    metric[0] = F::zero();
    // decisions[t][state] = (previous state, input bit)
    let mut decisions = vec![[(0u8, 0u8); STATES]; num_inputs];
    let mut next = vec![neg_inf; STATES];
    for t in 0..num_inputs {
        let l0 = llrs[2 * t];
        let l1 = llrs[2 * t + 1];
        next.fill(neg_inf);
        for (s, &pm) in metric.iter().enumerate() {
            if pm == neg_inf {
                continue;
            }
            for b in 0..2u32 {
                let w = (b << MEMORY) | s as u32;
                let ns = (w >> 1) as usize;
                // correlation metric: +llr for an emitted 0, −llr for 1
                let c0 = if parity(w & G0) == 0 { l0 } else { -l0 };
                let c1 = if parity(w & G1) == 0 { l1 } else { -l1 };
                let m = pm + c0 + c1;
                if m > next[ns] {
                    next[ns] = m;
                    decisions[t][ns] = (s as u8, b as u8);
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }
    let mut bits = vec![0u8; num_inputs];
    let mut state = 0usize; // termination
    for t in (0..num_inputs).rev() {
        let (prev, b) = decisions[t][state];
        bits[t] = b;
        state = prev as usize;
    }
    bits
}

fn crc16(bits: &[u8]) -> Vec<u8> {
    let mut reg = CRC_INIT;
    for &b in bits {
        let top = ((reg >> 15) as u8 ^ b) & 1;
        reg <<= 1;
        if top == 1 {
            reg ^= CRC_POLY;
        }
    }
    (0..CRC_BITS).rev().map(|i| ((reg >> i) & 1) as u8).collect()
}

/// Block codec: CRC-16, zero-terminated convolutional encoding, and
/// `repetition`-fold repetition of the coded bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftCodec {
    pub info_bits: usize,
    pub repetition: usize,
}

impl SoftCodec {
    pub fn new(info_bits: usize, repetition: usize) -> Self {
        assert!(info_bits > 0 && repetition > 0);
        SoftCodec {
            info_bits,
            repetition,
        }
    }

    /// Coded bits of one repetition copy.
    pub fn base_len(&self) -> usize {
        2 * (self.info_bits + CRC_BITS + MEMORY)
    }

    pub fn coded_len(&self) -> usize {
        self.base_len() * self.repetition
    }

    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        assert_eq!(info.len(), self.info_bits);
        let mut protected = info.to_vec();
        protected.extend(crc16(info));
        let base = conv_encode(&protected);
        let mut out = Vec::with_capacity(self.coded_len());
        for _ in 0..self.repetition {
            out.extend_from_slice(&base);
        }
        out
    }

    /// Accumulates repetition LLRs, runs the trellis, verifies the CRC.
    pub fn decode<F: Real>(&self, llrs: &[F]) -> Option<Vec<u8>> {
        assert_eq!(llrs.len(), self.coded_len());
        let base = self.base_len();
        let mut acc = vec![F::zero(); base];
        for r in 0..self.repetition {
            for i in 0..base {
                acc[i] += llrs[r * base + i];
            }
        }
        let decoded = viterbi_ml(&acc, self.info_bits + CRC_BITS + MEMORY);
        let info = &decoded[..self.info_bits];
        let crc = &decoded[self.info_bits..self.info_bits + CRC_BITS];
        if crc16(info) == crc {
            Some(info.to_vec())
        } else {
            None
        }
    }
}
