//! First-order Reed-Muller codes RM(1, m) for the signaling field.
//!
//! RM(1, m) carries `m + 1` bits in a length `2^m` codeword:
//! `c_x = a_0 ⊕ ⟨a, x⟩`. Soft maximum-likelihood decoding is one fast
//! Hadamard transform: the codewords are the ±rows of a Hadamard matrix,
//! so the transform computes every codeword correlation at once.

use crate::scalar::Real;

/// Encodes `m + 1` bits `[a0, a1, ..., am]` into `2^m` bits.
pub fn rm_encode(m: usize, bits: &[u8]) -> Vec<u8> {
    assert_eq!(bits.len(), m + 1, "RM(1,{m}) takes {} bits", m + 1);
    let n = 1usize << m;
    (0..n)
        .map(|x| {
            let mut c = bits[0];
            for i in 0..m {
                c ^= bits[i + 1] & ((x >> i) & 1) as u8;
            }
            c & 1
        })
        .collect()
}

/// In-place fast Hadamard transform: `v[w] ← Σ_x v[x]·(−1)^⟨w,x⟩`.
pub fn fht<F: Real>(v: &mut [F]) {
    let n = v.len();
    assert!(n.is_power_of_two(), "FHT needs a power-of-two length");
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                let x = v[j];
                let y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
            i += h * 2;
        }
        h *= 2;
    }
}

/// Soft ML decoding from per-bit LLRs (positive favours bit 0). Returns
/// the `m + 1` decoded bits and the winning correlation magnitude.
pub fn rm_decode<F: Real>(m: usize, llrs: &[F]) -> (Vec<u8>, F) {
    let n = 1usize << m;
    assert_eq!(llrs.len(), n, "RM(1,{m}) decodes {n} LLRs");
    let mut v = llrs.to_vec();
    fht(&mut v);
    let mut best = 0usize;
    for w in 1..n {
        if v[w].abs() > v[best].abs() {
            best = w;
        }
    }
    let mut bits = Vec::with_capacity(m + 1);
    bits.push((v[best] < F::zero()) as u8);
    for i in 0..m {
        bits.push(((best >> i) & 1) as u8);
    }
    (bits, v[best].abs())
}
