//! Scalar abstraction: everything numeric in this crate is generic over a
//! floating-point type implementing [`Real`]. The CLI and the default type
//! aliases at the crate root instantiate `f64`.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the geometry and solver kernels.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + core::iter::Sum
    + core::fmt::Debug
    + core::fmt::Display
    + core::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    /// Round-trip to `f64` (used for reporting only).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for `T::lit` in expression position.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_convert() {
        let a: f32 = lit(0.5);
        let b: f64 = lit(0.5);
        assert_eq!(a, 0.5f32);
        assert_eq!(b, 0.5f64);
    }
}
