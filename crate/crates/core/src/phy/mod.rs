//! Physical-layer abstractions: SNR bookkeeping, mutual information, and
//! the decode models that turn interference patterns into block success
//! probabilities.

pub mod fer;
pub mod mi;

pub use fer::{
    canonical_pattern, default_esn0_grid, default_table_patterns, fit_margin, parse_pattern,
    pattern_to_string, synth_block_fer, FerTable, PhyModel, DEFAULT_MARGIN, DEFAULT_SLOPE,
    FER_FLOOR,
};
pub use mi::{bpsk_capacity, burst_sinr, erfc, mi_per_symbol_qpsk, pattern_sum_mi, q_function};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// One operating point of the channel, stored as Es/N0 in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint<F> {
    pub esn0_db: F,
}

impl<F: Real> SnrPoint<F> {
    pub fn from_db(esn0_db: F) -> Self {
        SnrPoint { esn0_db }
    }

    pub fn esn0_linear(&self) -> F {
        crate::scalar::db_to_linear(self.esn0_db)
    }

    /// Converts an Eb/N0 operating point: Es/N0 = Eb/N0 · R · bits per
    /// symbol, where R is the overall code rate.
    pub fn from_ebn0_db(ebn0_db: F, rate: F, bits_per_symbol: usize) -> Self {
        let spectral = rate * F::from_f64_lossy(bits_per_symbol as f64);
        SnrPoint {
            esn0_db: ebn0_db + crate::scalar::linear_to_db(spectral),
        }
    }
}
