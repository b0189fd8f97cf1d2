//! Poincaré disk-model primitives: metric, distances, geodesics, angles, and
//! the isometries of H²×ℝ used for reflections and assemblies.
//!
//! Conventions used throughout the crate:
//!
//! * Disk metric `ds² = λ²(dx²+dy²)` with `λ = 2/(1−x²−y²)`; curvature −1.
//! * Tangent vectors at a point are stored in *frame components*, i.e. with
//!   respect to the orthonormal frame `E_i = λ⁻¹ ∂_i`, so Euclidean norms of
//!   component vectors are metric norms.
//! * Geodesics are explicit: either diameters, or circular arcs orthogonal to
//!   the unit circle (`|center|² = radius² + 1`).

pub mod isometry;
pub mod product;

pub use isometry::{Generator, MobiusMap, SpaceIsometry};

use crate::scalar::{lit, Real};
use num_complex::Complex;
use thiserror::Error;

/// Complex shorthand for disk coordinates.
pub type C<T> = Complex<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypError {
    #[error("point lies on or outside the unit circle: ({0}, {1})")]
    OutsideDisk(f64, f64),
    #[error("degenerate input: the two model points coincide")]
    DegenerateInput,
    #[error("point does not lie on the geodesic (residual {0:.3e})")]
    NotOnGeodesic(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> DiskPoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// Validating constructor: rejects points on or outside the unit circle.
    pub fn checked(x: T, y: T) -> Result<Self, HypError> {
        let p = Self { x, y };
        if p.norm_sq() >= T::one() {
            return Err(HypError::OutsideDisk(x.as_f64(), y.as_f64()));
        }
        Ok(p)
    }

    pub fn origin() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
        }
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn to_complex(&self) -> C<T> {
        Complex::new(self.x, self.y)
    }

    #[inline]
    pub fn from_complex(z: C<T>) -> Self {
        Self { x: z.re, y: z.im }
    }
}

/// A point of the ideal boundary circle, stored by its angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealPoint<T> {
    theta: T,
}

impl<T: Real> IdealPoint<T> {
    /// Normalizes the angle into `[0, 2π)`.
    pub fn new(theta: T) -> Self {
        let tau = T::PI() + T::PI();
        let mut t = theta % tau;
        if t < T::zero() {
            t += tau;
        }
        Self { theta: t }
    }

    #[inline]
    pub fn theta(&self) -> T {
        self.theta
    }

    #[inline]
    pub fn to_complex(&self) -> C<T> {
        Complex::new(self.theta.cos(), self.theta.sin())
    }
}

/// A point of H²×ℝ: disk coordinates plus height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacePoint<T> {
    pub p: DiskPoint<T>,
    pub t: T,
}

impl<T: Real> SpacePoint<T> {
    pub fn new(p: DiskPoint<T>, t: T) -> Self {
        Self { p, t }
    }
}

/// Either an interior disk point or an ideal boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelPoint<T> {
    Interior(DiskPoint<T>),
    Ideal(IdealPoint<T>),
}

impl<T: Real> ModelPoint<T> {
    /// Euclidean position in the closed disk.
    pub fn position(&self) -> C<T> {
        match self {
            ModelPoint::Interior(p) => p.to_complex(),
            ModelPoint::Ideal(q) => q.to_complex(),
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, ModelPoint::Ideal(_))
    }
}

impl<T: Real> From<DiskPoint<T>> for ModelPoint<T> {
    fn from(p: DiskPoint<T>) -> Self {
        ModelPoint::Interior(p)
    }
}

impl<T: Real> From<IdealPoint<T>> for ModelPoint<T> {
    fn from(p: IdealPoint<T>) -> Self {
        ModelPoint::Ideal(p)
    }
}

/// Conformal factor `λ(p) = 2/(1−x²−y²)` of the disk metric.
pub fn conformal_factor<T: Real>(p: DiskPoint<T>) -> Result<T, HypError> {
    let n = p.norm_sq();
    if n >= T::one() {
        return Err(HypError::OutsideDisk(p.x.as_f64(), p.y.as_f64()));
    }
    Ok(lit::<T>(2.0) / (T::one() - n))
}

/// `D(p) = 1/λ(p) = (1−x²−y²)/2`, the reciprocal conformal factor.
pub fn metric_recip<T: Real>(p: DiskPoint<T>) -> Result<T, HypError> {
    let n = p.norm_sq();
    if n >= T::one() {
        return Err(HypError::OutsideDisk(p.x.as_f64(), p.y.as_f64()));
    }
    Ok((T::one() - n) * lit::<T>(0.5))
}

#[inline]
fn artanh<T: Real>(x: T) -> T {
    lit::<T>(0.5) * (x.ln_1p() - (-x).ln_1p())
}

/// Geodesic distance between two interior points.
pub fn hyp_distance<T: Real>(p: DiskPoint<T>, q: DiskPoint<T>) -> T {
    let zp = p.to_complex();
    let zq = q.to_complex();
    let num = (zq - zp).norm();
    let den = (Complex::new(T::one(), T::zero()) - zp.conj() * zq).norm();
    let w = num / den;
    lit::<T>(2.0) * artanh(w)
}

/// Geometric description of a complete geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeodesicShape<T> {
    /// Euclidean straight line through the origin, unit direction `dir`.
    Diameter { dir: C<T> },
    /// Circular arc orthogonal to the unit circle.
    Arc { center: C<T>, radius: T },
}

/// A complete geodesic together with the two model points that defined it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geodesic<T> {
    pub shape: GeodesicShape<T>,
    pub a: ModelPoint<T>,
    pub b: ModelPoint<T>,
}

/// Arcs with Euclidean radius above this bound are reclassified as diameters
/// to avoid catastrophic cancellation in the center solve.
const DIAMETER_RADIUS_CUTOFF: f64 = 1e6;

/// The unique complete geodesic through two distinct model points.
pub fn geodesic_through<T: Real>(
    a: impl Into<ModelPoint<T>>,
    b: impl Into<ModelPoint<T>>,
) -> Result<Geodesic<T>, HypError> {
    let a = a.into();
    let b = b.into();
    let z1 = a.position();
    let z2 = b.position();
    if (z1 - z2).norm() < lit::<T>(1e-14) {
        return Err(HypError::DegenerateInput);
    }
    // Orthogonal circle through z: 〈z, c〉 = (|z|²+1)/2, valid for interior
    // and ideal points alike.
    let r1 = (z1.norm_sqr() + T::one()) * lit::<T>(0.5);
    let r2 = (z2.norm_sqr() + T::one()) * lit::<T>(0.5);
    let det = z1.re * z2.im - z1.im * z2.re;
    let scale = z1.norm().max(z2.norm()).max(T::one());
    if det.abs() > lit::<T>(1e-14) * scale * scale {
        let cx = (r1 * z2.im - r2 * z1.im) / det;
        let cy = (z1.re * r2 - z2.re * r1) / det;
        let center = Complex::new(cx, cy);
        let rsq = center.norm_sqr() - T::one();
        if rsq > T::zero() {
            let radius = rsq.sqrt();
            if radius < lit::<T>(DIAMETER_RADIUS_CUTOFF) {
                return Ok(Geodesic {
                    shape: GeodesicShape::Arc { center, radius },
                    a,
                    b,
                });
            }
        }
    }
    // Collinear with the origin: a diameter. Canonical direction (upper half,
    // or positive x on the real axis).
    let d = z2 - z1;
    let mut dir = d / d.norm();
    if dir.im < T::zero() || (dir.im == T::zero() && dir.re < T::zero()) {
        dir = -dir;
    }
    Ok(Geodesic {
        shape: GeodesicShape::Diameter { dir },
        a,
        b,
    })
}

impl<T: Real> Geodesic<T> {
    /// Euclidean residual of `p` against the geodesic's defining equation.
    pub fn residual(&self, p: C<T>) -> T {
        match self.shape {
            GeodesicShape::Diameter { dir } => (dir.re * p.im - dir.im * p.re).abs(),
            GeodesicShape::Arc { center, radius } => ((p - center).norm() - radius).abs(),
        }
    }

    /// Orthogonality defect `|center|² − radius² − 1` (zero for diameters).
    pub fn orthogonality_residual(&self) -> T {
        match self.shape {
            GeodesicShape::Diameter { .. } => T::zero(),
            GeodesicShape::Arc { center, radius } => {
                (center.norm_sqr() - radius * radius - T::one()).abs()
            }
        }
    }

    /// Unit tangent (frame components) at a point `p` on the geodesic,
    /// oriented toward the model point `toward`.
    pub fn tangent_at(&self, p: C<T>, toward: &ModelPoint<T>) -> C<T> {
        let target = toward.position();
        match self.shape {
            GeodesicShape::Diameter { dir } => {
                let s = (target - p).re * dir.re + (target - p).im * dir.im;
                if s >= T::zero() {
                    dir
                } else {
                    -dir
                }
            }
            GeodesicShape::Arc { center, radius: _ } => {
                let u = p - center;
                let v = target - center;
                // signed angle from u to v; the in-disk arc spans less than π.
                let delta = (u.re * v.im - u.im * v.re).atan2(u.re * v.re + u.im * v.im);
                let t = Complex::new(-u.im, u.re) / u.norm();
                if delta >= T::zero() {
                    t
                } else {
                    -t
                }
            }
        }
    }

    /// The `toward`-oriented endpoint that is not (approximately) `at`.
    pub fn far_endpoint(&self, at: C<T>) -> ModelPoint<T> {
        let da = (self.a.position() - at).norm();
        let db = (self.b.position() - at).norm();
        if da >= db {
            self.a
        } else {
            self.b
        }
    }

    /// Both ideal endpoints of the complete geodesic.
    pub fn ideal_endpoints(&self) -> (IdealPoint<T>, IdealPoint<T>) {
        match self.shape {
            GeodesicShape::Diameter { dir } => {
                let th = dir.im.atan2(dir.re);
                (IdealPoint::new(th), IdealPoint::new(th + T::PI()))
            }
            GeodesicShape::Arc { center, radius: _ } => {
                let rr = center.norm();
                let phic = center.im.atan2(center.re);
                let half = (T::one() / rr).acos();
                (IdealPoint::new(phic - half), IdealPoint::new(phic + half))
            }
        }
    }

    /// Point reached from `from` (on the geodesic) after hyperbolic arclength
    /// `s` toward the model point `toward`.
    pub fn point_at_arclength(&self, from: DiskPoint<T>, toward: &ModelPoint<T>, s: T) -> DiskPoint<T> {
        let t = self.tangent_at(from.to_complex(), toward);
        h2_exp(from, t * s)
    }

    /// Signed hyperbolic distance from `z` to the complete geodesic. For arcs
    /// the sign is positive on the side containing the origin; for diameters
    /// positive on the side of `i·dir`.
    pub fn signed_distance(&self, z: DiskPoint<T>) -> T {
        let den = T::one() - z.norm_sq();
        let s = match self.shape {
            GeodesicShape::Diameter { dir } => {
                let n = Complex::new(-dir.im, dir.re);
                lit::<T>(2.0) * (z.x * n.re + z.y * n.im) / den
            }
            GeodesicShape::Arc { center, radius } => {
                let d2 = (z.to_complex() - center).norm_sqr();
                (d2 - radius * radius) / (radius * den)
            }
        };
        s.asinh()
    }
}

/// Unoriented angle in `[0, π]` at `at` between two geodesics through it.
///
/// Each geodesic's tangent is oriented from `at` toward its far endpoint, so
/// for geodesics built as `geodesic_through(at, other)` this measures the
/// corner angle of the rays.
pub fn angle_between<T: Real>(
    at: DiskPoint<T>,
    g1: &Geodesic<T>,
    g2: &Geodesic<T>,
) -> Result<T, HypError> {
    let z = at.to_complex();
    for g in [g1, g2] {
        let r = g.residual(z);
        if r > lit::<T>(1e-10) {
            return Err(HypError::NotOnGeodesic(r.as_f64()));
        }
    }
    let t1 = g1.tangent_at(z, &g1.far_endpoint(z));
    let t2 = g2.tangent_at(z, &g2.far_endpoint(z));
    let dot = t1.re * t2.re + t1.im * t2.im;
    let cross = (t1.re * t2.im - t1.im * t2.re).abs();
    Ok(cross.atan2(dot))
}

/// Hyperbolic midpoint of two interior points (lies on their geodesic).
pub fn hyp_midpoint<T: Real>(p: DiskPoint<T>, q: DiskPoint<T>) -> DiskPoint<T> {
    let zp = p.to_complex();
    let zq = q.to_complex();
    let one = Complex::new(T::one(), T::zero());
    let w = (zq - zp) / (one - zp.conj() * zq);
    let s = w.norm();
    if s == T::zero() {
        return p;
    }
    // tanh(d/4) from tanh(d/2) = s
    let t = s / (T::one() + (T::one() - s * s).sqrt());
    let wh = w / s * t;
    let m = (wh + zp) / (one + zp.conj() * wh);
    DiskPoint::from_complex(m)
}

/// Riemannian log map of H²: frame components at `p` of the vector pointing
/// to `q`, with metric length `d(p,q)`.
pub fn h2_log<T: Real>(p: DiskPoint<T>, q: DiskPoint<T>) -> C<T> {
    let zp = p.to_complex();
    let zq = q.to_complex();
    let one = Complex::new(T::one(), T::zero());
    let w = (zq - zp) / (one - zp.conj() * zq);
    let s = w.norm();
    if s == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let d = lit::<T>(2.0) * artanh(s);
    w / s * d
}

/// Riemannian exp map of H²: follow the geodesic from `p` with initial frame
/// components `v` for metric length `|v|`.
pub fn h2_exp<T: Real>(p: DiskPoint<T>, v: C<T>) -> DiskPoint<T> {
    let d = v.norm();
    if d == T::zero() {
        return p;
    }
    let zp = p.to_complex();
    let one = Complex::new(T::one(), T::zero());
    let w = v / d * (d * lit::<T>(0.5)).tanh();
    let q = (w + zp) / (one + zp.conj() * w);
    DiskPoint::from_complex(q)
}

/// Parallel transport along the geodesic from `p` to `q`, as the unit complex
/// factor applied to frame components.
pub fn h2_transport_rotation<T: Real>(p: DiskPoint<T>, q: DiskPoint<T>) -> C<T> {
    let up = h2_log(p, q);
    let uq = -h2_log(q, p);
    let n1 = up.norm();
    let n2 = uq.norm();
    if n1 == T::zero() || n2 == T::zero() {
        return Complex::new(T::one(), T::zero());
    }
    (uq / n2) * (up / n1).conj()
}

/// Anti-Möbius disk reflection across a geodesic, as a raw point map.
pub fn reflect_across<T: Real>(g: &Geodesic<T>, z: C<T>) -> C<T> {
    match g.shape {
        GeodesicShape::Diameter { dir } => {
            // reflection across the line through 0 with direction dir
            let d2 = dir * dir;
            d2 * z.conj()
        }
        GeodesicShape::Arc { center, radius } => {
            let w = z - center;
            center + w / w.norm_sqr() * (radius * radius)
        }
    }
}
