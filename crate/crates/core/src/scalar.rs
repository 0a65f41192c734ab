//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point element type for HRRs, weights and traces: `f32` or `f64`.
///
/// `rustfft::FftNum` pulls in `Signed`, which shadows a few `Float` methods
/// (`abs`, `signum`), so call those through `Float::` explicitly.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + rustfft::FftNum + Debug + Display + Default
{
    /// Lossy conversion from an `f64` literal or config value.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
