//! Scalar abstraction shared by the metric and statistics kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumCast + Debug + Display + Sum + Send + Sync + 'static
{
    /// Lossy conversion from any primitive number.
    fn of<N: ToPrimitive>(n: N) -> Self {
        <Self as NumCast>::from(n).expect("value representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
