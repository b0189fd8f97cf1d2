//! Ambient operations in the product H²×ℝ, in frame components with respect
//! to the orthonormal frame (E₁, E₂, ∂t), E_i = λ⁻¹∂_i.

use super::{h2_exp, h2_log, h2_transport_rotation, hyp_distance, DiskPoint, SpacePoint, C};
use crate::scalar::Real;
use num_complex::Complex;

/// Tangent vector in frame components: horizontal complex + vertical real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVec<T> {
    pub h: C<T>,
    pub v: T,
}

impl<T: Real> FrameVec<T> {
    pub fn new(h: C<T>, v: T) -> Self {
        Self { h, v }
    }

    pub fn zero() -> Self {
        Self {
            h: Complex::new(T::zero(), T::zero()),
            v: T::zero(),
        }
    }

    pub fn from_xyz(x: T, y: T, z: T) -> Self {
        Self {
            h: Complex::new(x, y),
            v: z,
        }
    }

    pub fn xyz(&self) -> [T; 3] {
        [self.h.re, self.h.im, self.v]
    }

    pub fn dot(&self, o: &Self) -> T {
        self.h.re * o.h.re + self.h.im * o.h.im + self.v * o.v
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            h: self.h * s,
            v: self.v * s,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            h: self.h + o.h,
            v: self.v + o.v,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            h: self.h - o.h,
            v: self.v - o.v,
        }
    }

    pub fn cross(&self, o: &Self) -> Self {
        let a = self.xyz();
        let b = o.xyz();
        Self::from_xyz(
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(T::one() / n)
    }
}

/// Geodesic distance in the product metric.
pub fn product_distance<T: Real>(a: SpacePoint<T>, b: SpacePoint<T>) -> T {
    let dh = hyp_distance(a.p, b.p);
    let dv = a.t - b.t;
    (dh * dh + dv * dv).sqrt()
}

/// Log map of the product: frame components at `a` of the vector to `b`.
pub fn product_log<T: Real>(a: SpacePoint<T>, b: SpacePoint<T>) -> FrameVec<T> {
    FrameVec {
        h: h2_log(a.p, b.p),
        v: b.t - a.t,
    }
}

/// Exp map of the product.
pub fn product_exp<T: Real>(a: SpacePoint<T>, v: FrameVec<T>) -> SpacePoint<T> {
    SpacePoint {
        p: h2_exp(a.p, v.h),
        t: a.t + v.v,
    }
}

/// Parallel transport of a frame-component vector from `a` to `b` along the
/// product geodesic: rotate the horizontal part, keep the vertical part.
pub fn product_transport<T: Real>(a: DiskPoint<T>, b: DiskPoint<T>, v: FrameVec<T>) -> FrameVec<T> {
    let rot = h2_transport_rotation(a, b);
    FrameVec {
        h: rot * v.h,
        v: v.v,
    }
}

/// Transport rotation (unit complex acting on horizontal components).
pub fn transport_rotation<T: Real>(a: DiskPoint<T>, b: DiskPoint<T>) -> C<T> {
    h2_transport_rotation(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type P = DiskPoint<f64>;

    #[test]
    fn product_log_exp_roundtrip() {
        let a = SpacePoint::new(P::new(0.2, -0.1), 0.7);
        let b = SpacePoint::new(P::new(-0.4, 0.3), -1.2);
        let v = product_log(a, b);
        assert_relative_eq!(v.norm(), product_distance(a, b), epsilon = 1e-13);
        let b2 = product_exp(a, v);
        assert!(product_distance(b, b2) < 1e-13);
    }

    #[test]
    fn transport_is_isometric_and_preserves_geodesic_tangent() {
        let a = P::new(0.1, 0.4);
        let b = P::new(-0.3, -0.2);
        let va = FrameVec::new(num_complex::Complex::new(0.3, -0.8), 0.5);
        let vb = product_transport(a, b, va);
        assert_relative_eq!(va.norm(), vb.norm(), epsilon = 1e-14);
        // the geodesic's own tangent transports to the far-side tangent
        let u = h2_log(a, b);
        let d = u.norm();
        let ta = FrameVec::new(u / d, 0.0);
        let tb = product_transport(a, b, ta);
        let expect = -h2_log(b, a);
        let eb = expect / expect.norm();
        assert_relative_eq!(tb.h.re, eb.re, epsilon = 1e-13);
        assert_relative_eq!(tb.h.im, eb.im, epsilon = 1e-13);
    }
}
