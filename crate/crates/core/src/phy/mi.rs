//! Mutual information and tail-probability helpers.
//!
//! The per-symbol information carried by a Gray-mapped QPSK symbol over
//! AWGN factors into two independent BPSK channels, so everything reduces
//! to the BPSK constrained capacity
//!
//! ```text
//! C(s) = 1 − E_Z[ log2(1 + exp(−2s − 2·sqrt(s)·Z)) ],   Z ~ N(0,1)
//! ```
//!
//! evaluated with 40-point Gauss-Hermite quadrature.

use crate::scalar::Real;

const GH_NODES: [f64; 40] = [
    -8.09876113925085, -7.411582531485469, -6.840237305249356, -6.328255351220082,
    -5.8540950560304, -5.406654247970128, -4.9792609785452555, -4.567502072844395,
    -4.1682570668325, -3.7792067534352234, -3.398558265859628, -3.0248798839012845,
    -2.6569959984428957, -2.2939171418750837, -1.9347914722822959, -1.5788698949316138,
    -1.225480109046289, -0.874006612357088, -0.5238747138322772, -0.17453721459758237,
    0.17453721459758237, 0.5238747138322772, 0.874006612357088, 1.225480109046289,
    1.5788698949316138, 1.9347914722822959, 2.2939171418750837, 2.6569959984428957,
    3.0248798839012845, 3.398558265859628, 3.7792067534352234, 4.1682570668325,
    4.567502072844395, 4.9792609785452555, 5.406654247970128, 5.8540950560304,
    6.328255351220082, 6.840237305249356, 7.411582531485469, 8.09876113925085,
];

const GH_WEIGHTS: [f64; 40] = [
    2.591043713847034e-29, 8.544056963775431e-25, 2.5675933654116484e-21, 1.9891810121165004e-18,
    6.008358789490817e-16, 8.805707645216108e-14, 7.156528052690361e-12, 3.5256207913654217e-10,
    1.1212360832275837e-08, 2.4111441636705304e-07, 3.6315761506930358e-06, 3.93693398109249e-05,
    0.00031385359454133164, 0.0018714968295979507, 0.008460888008258132, 0.0293125655361724,
    0.0784746058654044, 0.16337873271327147, 0.26572825187737725, 0.338643277425589,
    0.338643277425589, 0.26572825187737725, 0.16337873271327147, 0.0784746058654044,
    0.0293125655361724, 0.008460888008258132, 0.0018714968295979507, 0.00031385359454133164,
    3.93693398109249e-05, 3.6315761506930358e-06, 2.4111441636705304e-07, 1.1212360832275837e-08,
    3.5256207913654217e-10, 7.156528052690361e-12, 8.805707645216108e-14, 6.008358789490817e-16,
    1.9891810121165004e-18, 2.5675933654116484e-21, 8.544056963775431e-25, 2.591043713847034e-29,
];

/// log2(1 + e^u) without overflow for large |u|.
fn softplus2<F: Real>(u: F) -> F {
    let ln2 = F::from_f64_lossy(std::f64::consts::LN_2);
    let nat = if u > F::zero() {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    };
    nat / ln2
}

/// Constrained capacity of BPSK over real AWGN at SNR `s` (linear), in
/// bits per channel use.
pub fn bpsk_capacity<F: Real>(s: F) -> F {
    if s <= F::zero() {
        return F::zero();
    }
    let sqrt2 = F::from_f64_lossy(std::f64::consts::SQRT_2);
    let inv_sqrt_pi = F::from_f64_lossy(1.0 / std::f64::consts::PI.sqrt());
    let two = F::from_f64_lossy(2.0);
    let two_s = two * s;
    let two_sqrt_s = two * s.sqrt();
    let mut acc = F::zero();
    for i in 0..GH_NODES.len() {
        let z = sqrt2 * F::from_f64_lossy(GH_NODES[i]);
        let w = F::from_f64_lossy(GH_WEIGHTS[i]);
        acc += w * softplus2(-(two_s + two_sqrt_s * z));
    }
    let c = F::one() - inv_sqrt_pi * acc;
    c.max(F::zero()).min(F::one())
}

/// Mutual information per Gray-mapped QPSK symbol at Es/N0 = `rho`
/// (linear), in bits per symbol. Each I/Q rail is BPSK at per-dimension
/// SNR equal to Es/N0, so the symbol carries `2·C(rho)`.
pub fn mi_per_symbol_qpsk<F: Real>(rho: F) -> F {
    let two = F::from_f64_lossy(2.0);
    two * bpsk_capacity(rho)
}

/// Post-despreading SINR of a burst observed under `degree` equal-power
/// interferers: rho / (1 + degree·rho).
pub fn burst_sinr<F: Real>(esn0_linear: F, degree: usize) -> F {
    let d = F::from_f64_lossy(degree as f64);
    esn0_linear / (F::one() + d * esn0_linear)
}

/// Total mutual information a decoder can draw from a set of bursts with
/// the given interference degrees: bursts above `threshold` are erased,
/// the rest contribute `symbols_per_burst` QPSK symbols at their SINR.
pub fn pattern_sum_mi<F: Real>(
    degrees: &[usize],
    threshold: usize,
    symbols_per_burst: usize,
    esn0_linear: F,
) -> F {
    let spb = F::from_f64_lossy(symbols_per_burst as f64);
    degrees
        .iter()
        .filter(|&&d| d <= threshold)
        .map(|&d| spb * mi_per_symbol_qpsk(burst_sinr(esn0_linear, d)))
        .sum()
}

/// Complementary error function, accurate to about 1e-7 relative
/// everywhere (rational Chebyshev fit).
pub fn erfc<F: Real>(x: F) -> F {
    let c = |v: f64| F::from_f64_lossy(v);
    let z = x.abs();
    let t = F::one() / (F::one() + c(0.5) * z);
    let poly = -z * z - c(1.26551223)
        + t * (c(1.00002368)
            + t * (c(0.37409196)
                + t * (c(0.09678418)
                    + t * (c(-0.18628806)
                        + t * (c(0.27886807)
                            + t * (c(-1.13520398)
                                + t * (c(1.48851587)
                                    + t * (c(-0.82215223) + t * c(0.17087277)))))))));
    let ans = t * poly.exp();
    if x >= F::zero() {
        ans
    } else {
        c(2.0) - ans
    }
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
pub fn q_function<F: Real>(x: F) -> F {
    let half = F::from_f64_lossy(0.5);
    let inv_sqrt2 = F::from_f64_lossy(std::f64::consts::FRAC_1_SQRT_2);
    half * erfc(x * inv_sqrt2)
}
