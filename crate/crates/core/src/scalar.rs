//! Scalar abstraction for the numeric parts of the simulator.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
///
/// Everything that carries physical quantities (SNR, LLRs, mutual
/// information, error rates, complex samples) is generic over this trait;
/// discrete protocol state (slots, users, degrees) stays integer.
pub trait Real:
    Float + FromPrimitive + NumAssign + std::iter::Sum + std::fmt::Debug + Send + Sync + 'static
{
    /// Lossless widening to `f64` for statistics and output formatting.
    fn to_f64(self) -> f64;

    fn from_f64_lossy(v: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}

/// `10^(db/10)`.
#[inline]
pub fn db_to_linear<F: Real>(db: F) -> F {
    let ten = F::from_f64_lossy(10.0);
    ten.powf(db / ten)
}

/// `10·log10(x)`.
#[inline]
pub fn linear_to_db<F: Real>(x: F) -> F {
    let ten = F::from_f64_lossy(10.0);
    ten * x.log10()
}
