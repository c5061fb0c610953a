//! Gray-mapped QPSK with unit symbol energy.
//!
//! Bit pair `(b_I, b_Q)` maps to `((1−2b_I) + j(1−2b_Q))/√2`. Over AWGN
//! with complex noise variance `N0` the exact per-bit LLR (bit 0
//! positive) is `2·√2·y/N0` on the matching dimension.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Real;

/// Maps bits to symbols, two bits per symbol; an odd tail bit is padded
/// with a zero.
pub fn map_qpsk<F: Real>(bits: &[u8]) -> Vec<Complex<F>> {
    let a = F::from_f64_lossy(std::f64::consts::FRAC_1_SQRT_2);
    let level = |b: u8| if b == 0 { a } else { -a };
    bits.chunks(2)
        .map(|pair| {
            let i = pair[0];
            let q = if pair.len() > 1 { pair[1] } else { 0 };
            Complex::new(level(i), level(q))
        })
        .collect()
}

/// Per-bit LLRs, two per symbol (I then Q), for complex noise variance
/// `noise_var`.
pub fn bit_llrs<F: Real>(symbols: &[Complex<F>], noise_var: F) -> Vec<F> {
    let scale = F::from_f64_lossy(2.0 * std::f64::consts::SQRT_2) / noise_var;
    let mut out = Vec::with_capacity(symbols.len() * 2);
    for s in symbols {
        out.push(scale * s.re);
        out.push(scale * s.im);
    }
    out
}

/// Adds circular AWGN of complex variance `noise_var` in place.
pub fn add_awgn<F: Real, R: Rng + ?Sized>(samples: &mut [Complex<F>], noise_var: F, rng: &mut R) {
    let sigma = (noise_var / F::from_f64_lossy(2.0)).sqrt();
    for s in samples.iter_mut() {
        let nr: f64 = StandardNormal.sample(rng);
        let ni: f64 = StandardNormal.sample(rng);
        s.re += sigma * F::from_f64_lossy(nr);
        s.im += sigma * F::from_f64_lossy(ni);
    }
}
