//! Monte Carlo simulator for slot-synchronous random access on a shared
//! AWGN channel.
//!
//! The library models a frame of `N_s` slots onto which `N_u` users each
//! transmit one block as `N_b` bursts, and a receiver that recovers blocks
//! with a two-phase successive interference cancellation (SIC) process:
//! burst location via short signaling fields, then data decoding that keeps
//! lightly interfered bursts in the decoding instead of erasing them.
//!
//! Supported access schemes:
//!
//! * `SA` / `DSA` — classic slotted ALOHA and its two-copy variant,
//! * `CRDSA` / `CRDSA++` — replica schemes with pointer-based cancellation,
//! * `IRSA` — replica count drawn from a degree distribution,
//! * `CSA` — codeword fragments under the collision-erasure assumption,
//! * `MuSCA` — codeword fragments where collided bursts still contribute
//!   soft information up to a per-code interference threshold.
//!
//! Module map:
//!
//! * [`frame`] — slot grid, burst placement, interference accounting and
//!   the scalar load/throughput metrics,
//! * [`protocols`] — per-scheme transmission plans, code registry, burst
//!   geometry and signaling payloads,
//! * [`receiver`] — the two-phase SIC decoder over the abstract model,
//! * [`phy`] — decode-outcome oracles (collision erasure, FER tables,
//!   SINR/mutual-information threshold),
//! * [`signal`] — small-scale complex-baseband validation path with real
//!   modulation, codecs and literal signal subtraction,
//! * [`harness`] — experiment configuration, Monte Carlo sweeps,
//!   statistics and result emission.
//!
//! Numeric code is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); code rates are exact rationals. The aliases below fix
//! the common double-precision instantiations.

pub mod error;
pub mod frame;
pub mod harness;
pub mod phy;
pub mod protocols;
pub mod receiver;
pub mod rng;
pub mod scalar;
pub mod signal;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision SNR point.
pub type Snr = phy::SnrPoint<f64>;
/// Double-precision decode-outcome model.
pub type Phy = phy::PhyModel<f64>;
/// Double-precision FER table.
pub type FerTable = phy::FerTable<f64>;
/// Double-precision slot signal (one complex sample per symbol).
pub type SlotSignal = signal::SlotSignal<f64>;
/// Double-precision load/throughput sample.
pub type LoadPoint = frame::LoadPoint<f64>;
