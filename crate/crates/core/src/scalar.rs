//! Scalar abstraction: every geometric routine is generic over the float width.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometry kernel works over.
///
/// `f64` is the precision all stated tolerances are calibrated for; `f32`
/// satisfies the same contracts at correspondingly looser accuracy.
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {
    /// Machine epsilon of the concrete type.
    const EPS: Self;

    /// Conversion from `f64`, used for literals and tolerances.
    fn of(x: f64) -> Self;

    /// Widening (or identity) conversion to `f64` for reporting.
    fn to64(self) -> f64;

    /// Positive infinity, used for quantities that are unbounded
    /// (injectivity radius of non-compact spaces and the like).
    fn inf() -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            const EPS: Self = <$t>::EPSILON;

            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn inf() -> Self {
                <$t>::INFINITY
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
