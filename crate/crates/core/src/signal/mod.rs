//! Sample-level reference implementation of the fragment receiver.
//!
//! The abstract receiver in [`crate::receiver`] works on interference
//! counts. This module builds actual complex baseband frames — preamble,
//! Reed-Muller-coded signaling field and convolutionally coded payload
//! fragments per burst — and runs the same two-phase cancellation on the
//! waveform: signaling fields are re-encoded and subtracted once read,
//! whole bursts once the payload's CRC checks. It exists to validate the
//! abstract model, not to be fast.

pub mod convcode;
pub mod qpsk;
pub mod rm;
pub mod sic;

pub use convcode::{conv_encode, viterbi_ml, SoftCodec};
pub use qpsk::{add_awgn, bit_llrs, map_qpsk};
pub use rm::{fht, rm_decode, rm_encode};
pub use sic::{SignalFrame, SignalOutcome, SignalReceiver, SignalSystem};

use std::io::Write;
use std::ops::Range;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::scalar::Real;

/// One slot's worth of received samples.
pub type SlotSignal<F> = Vec<Complex<F>>;

/// Symbol index ranges of the three burst regions inside a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayout {
    pub preamble: Range<usize>,
    pub signaling: Range<usize>,
    pub payload: Range<usize>,
}

impl SlotLayout {
    pub fn of(config: &FrameConfig) -> Self {
        let p = config.preamble_symbols;
        let s = config.signaling_symbols;
        let d = config.slot_payload_symbols;
        SlotLayout {
            preamble: 0..p,
            signaling: p..p + s,
            payload: p + s..p + s + d,
        }
    }

    pub fn slot_symbols(&self) -> usize {
        self.payload.end
    }
}

/// Serializes a frame of slots as little-endian `f32` I/Q pairs,
/// slot-major: all samples of slot 0, then slot 1, and so on.
pub fn write_waveform<F: Real, W: Write>(slots: &[SlotSignal<F>], mut out: W) -> Result<()> {
    for slot in slots {
        for sample in slot {
            out.write_all(&(sample.re.to_f64() as f32).to_le_bytes())
                .and_then(|_| out.write_all(&(sample.im.to_f64() as f32).to_le_bytes()))
                .map_err(|e| Error::io("<waveform>", e))?;
        }
    }
    Ok(())
}
