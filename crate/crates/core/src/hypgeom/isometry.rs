//! Isometries of H²×ℝ built from disk Möbius maps (orientation-preserving)
//! and anti-Möbius maps (reflections), together with a vertical affine part
//! `t ↦ εt + c`, ε ∈ {+1, −1}.

use super::{DiskPoint, Geodesic, HypError, SpacePoint, C};
use crate::scalar::{lit, Real};
use num_complex::Complex;

/// A unit-disk-preserving fractional linear map `z ↦ (m₀w + m₁)/(m₂w + m₃)`
/// with `w = z` or `w = z̄` (anti-Möbius when `conj` is set).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap<T> {
    pub m: [C<T>; 4],
    pub conj: bool,
}

impl<T: Real> MobiusMap<T> {
    pub fn identity() -> Self {
        Self {
            m: [
                Complex::new(T::one(), T::zero()),
                Complex::new(T::zero(), T::zero()),
                Complex::new(T::zero(), T::zero()),
                Complex::new(T::one(), T::zero()),
            ],
            conj: false,
        }
    }

    /// Rescale so |det| = 1; keeps entries well-conditioned under long words.
    fn normalized(mut self) -> Self {
        let det = self.m[0] * self.m[3] - self.m[1] * self.m[2];
        let s = det.norm().sqrt();
        if s > T::zero() && s.is_finite() {
            for e in &mut self.m {
                *e = *e / s;
            }
        }
        self
    }

    /// The hyperbolic "translation" mapping 0 to `a`.
    pub fn translation_to(a: C<T>) -> Self {
        Self {
            m: [
                Complex::new(T::one(), T::zero()),
                a,
                a.conj(),
                Complex::new(T::one(), T::zero()),
            ],
            conj: false,
        }
        .normalized()
    }

    /// Rotation by `angle` about the origin.
    pub fn rotation(angle: T) -> Self {
        let h = angle * lit::<T>(0.5);
        Self {
            m: [
                Complex::from_polar(T::one(), h),
                Complex::new(T::zero(), T::zero()),
                Complex::new(T::zero(), T::zero()),
                Complex::from_polar(T::one(), -h),
            ],
            conj: false,
        }
    }

    /// Disk reflection across a geodesic (anti-Möbius).
    pub fn reflection(g: &Geodesic<T>) -> Self {
        match g.shape {
            super::GeodesicShape::Diameter { dir } => Self {
                m: [
                    dir * dir,
                    Complex::new(T::zero(), T::zero()),
                    Complex::new(T::zero(), T::zero()),
                    Complex::new(T::one(), T::zero()),
                ],
                conj: true,
            }
            .normalized(),
            super::GeodesicShape::Arc { center, radius } => Self {
                m: [
                    center,
                    Complex::new(radius * radius, T::zero()) - center * center.conj(),
                    Complex::new(T::one(), T::zero()),
                    -center.conj(),
                ],
                conj: true,
            }
            .normalized(),
        }
    }

    pub fn apply(&self, z: C<T>) -> C<T> {
        let w = if self.conj { z.conj() } else { z };
        (self.m[0] * w + self.m[1]) / (self.m[2] * w + self.m[3])
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let o = if self.conj {
            [
                other.m[0].conj(),
                other.m[1].conj(),
                other.m[2].conj(),
                other.m[3].conj(),
            ]
        } else {
            other.m
        };
        Self {
            m: [
                self.m[0] * o[0] + self.m[1] * o[2],
                self.m[0] * o[1] + self.m[1] * o[3],
                self.m[2] * o[0] + self.m[3] * o[2],
                self.m[2] * o[1] + self.m[3] * o[3],
            ],
            conj: self.conj ^ other.conj,
        }
        .normalized()
    }

    pub fn inverse(&self) -> Self {
        let inv = [self.m[3], -self.m[1], -self.m[2], self.m[0]];
        let m = if self.conj {
            [inv[0].conj(), inv[1].conj(), inv[2].conj(), inv[3].conj()]
        } else {
            inv
        };
        Self { m, conj: self.conj }.normalized()
    }

    /// Complex derivative factor in orthonormal frame components at `z`:
    /// tangent vectors map as `v ↦ ρ·v` (or `ρ·v̄` for anti-Möbius), |ρ| = 1.
    pub fn frame_derivative(&self, z: C<T>) -> C<T> {
        let w = if self.conj { z.conj() } else { z };
        let det = self.m[0] * self.m[3] - self.m[1] * self.m[2];
        let den = self.m[2] * w + self.m[3];
        let dz = det / (den * den);
        let img = self.apply(z);
        let lam_ratio = (T::one() - img.norm_sqr()) / (T::one() - z.norm_sqr());
        // frame factor: (λ(img)/λ(z)) · f'(z) = f'(z)/λ-ratio ... λ(img)/λ(z) = (1-|z|²)/(1-|img|²)
        let rho = dz / lam_ratio;
        rho / rho.norm()
    }

    /// Translation length for orientation-preserving hyperbolic elements.
    /// Returns `None` for elliptic/parabolic elements or reflections.
    pub fn translation_length(&self) -> Option<T> {
        if self.conj {
            return None;
        }
        let det = self.m[0] * self.m[3] - self.m[1] * self.m[2];
        // normalize to det = 1 (det is real positive for words of disk
        // automorphisms; take the principal square root in general)
        let s = det.sqrt();
        let tr = (self.m[0] + self.m[3]) / s;
        let half = tr.norm() * lit::<T>(0.5);
        if tr.im.abs() > lit::<T>(1e-9) || half <= T::one() + lit::<T>(1e-12) {
            return None;
        }
        Some(lit::<T>(2.0) * half.acosh())
    }
}

/// An isometry of the product H²×ℝ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceIsometry<T> {
    pub horizontal: MobiusMap<T>,
    pub flip_t: bool,
    pub shift_t: T,
}

impl<T: Real> SpaceIsometry<T> {
    pub fn identity() -> Self {
        Self {
            horizontal: MobiusMap::identity(),
            flip_t: false,
            shift_t: T::zero(),
        }
    }

    pub fn apply(&self, pt: SpacePoint<T>) -> SpacePoint<T> {
        let z = self.horizontal.apply(pt.p.to_complex());
        let t = if self.flip_t { -pt.t } else { pt.t } + self.shift_t;
        SpacePoint::new(DiskPoint::from_complex(z), t)
    }

    pub fn apply_disk(&self, p: DiskPoint<T>) -> DiskPoint<T> {
        DiskPoint::from_complex(self.horizontal.apply(p.to_complex()))
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let shift = if self.flip_t {
            -other.shift_t
        } else {
            other.shift_t
        } + self.shift_t;
        Self {
            horizontal: self.horizontal.compose(&other.horizontal),
            flip_t: self.flip_t ^ other.flip_t,
            shift_t: shift,
        }
    }

    pub fn inverse(&self) -> Self {
        let h = self.horizontal.inverse();
        // t' = εt + c  ⇒  t = ε(t' − c)
        let shift = if self.flip_t { self.shift_t } else { -self.shift_t };
        Self {
            horizontal: h,
            flip_t: self.flip_t,
            shift_t: shift,
        }
    }

    /// Differential in frame components at `p`: horizontal tangent vectors map
    /// as `v ↦ rho·v` (or `rho·v̄` when `conj`), vertical as `v ↦ eps·v`.
    pub fn frame_derivative(&self, p: DiskPoint<T>) -> (C<T>, bool, T) {
        let rho = self.horizontal.frame_derivative(p.to_complex());
        let eps = if self.flip_t { -T::one() } else { T::one() };
        (rho, self.horizontal.conj, eps)
    }

    /// Apply the differential to a frame-component tangent vector
    /// `(horizontal complex, vertical)` based at `p`.
    pub fn push_tangent(&self, p: DiskPoint<T>, vh: C<T>, vt: T) -> (C<T>, T) {
        let (rho, conj, eps) = self.frame_derivative(p);
        let h = if conj { rho * vh.conj() } else { rho * vh };
        (h, eps * vt)
    }
}

/// Parameterized isometry kinds; the fixed-set data is kept so reflection
/// preconditions can be audited.
#[derive(Debug, Clone)]
pub enum Generator<T: Real> {
    /// Rotation by `angle` about the vertical line {p}×ℝ.
    RotationAboutVertical { p: DiskPoint<T>, angle: T },
    /// 180°-rotation about the horizontal geodesic `g` in the slice t = t0.
    RotationAboutHorizontal { g: Geodesic<T>, t0: T },
    /// Mirror across the vertical plane g×ℝ.
    MirrorVerticalPlane { g: Geodesic<T> },
    /// Mirror across the horizontal slice t = t0.
    MirrorSlice { t0: T },
    /// Hyperbolic translation along `g` by length `len` toward `g.b`.
    Translation { g: Geodesic<T>, len: T },
    /// Vertical translation by `c`.
    VerticalTranslation { c: T },
}

impl<T: Real> Generator<T> {
    pub fn isometry(&self) -> Result<SpaceIsometry<T>, HypError> {
        Ok(match self {
            Generator::RotationAboutVertical { p, angle } => {
                if p.norm_sq() >= T::one() {
                    return Err(HypError::OutsideDisk(p.x.as_f64(), p.y.as_f64()));
                }
                let a = p.to_complex();
                let t_in = MobiusMap::translation_to(-a);
                let rot = MobiusMap::rotation(*angle);
                let t_out = MobiusMap::translation_to(a);
                SpaceIsometry {
                    horizontal: t_out.compose(&rot.compose(&t_in)),
                    flip_t: false,
                    shift_t: T::zero(),
                }
            }
            Generator::RotationAboutHorizontal { g, t0 } => SpaceIsometry {
                horizontal: MobiusMap::reflection(g),
                flip_t: true,
                shift_t: lit::<T>(2.0) * *t0,
            },
            Generator::MirrorVerticalPlane { g } => SpaceIsometry {
                horizontal: MobiusMap::reflection(g),
                flip_t: false,
                shift_t: T::zero(),
            },
            Generator::MirrorSlice { t0 } => SpaceIsometry {
                horizontal: MobiusMap::identity(),
                flip_t: true,
                shift_t: lit::<T>(2.0) * *t0,
            },
            Generator::Translation { g, len } => {
                // Move a base point of the axis to the origin, align with the
                // real axis, translate, and undo.
                let (m, dir) = match g.shape {
                    super::GeodesicShape::Diameter { dir } => (Complex::new(T::zero(), T::zero()), dir),
                    super::GeodesicShape::Arc { center, radius } => {
                        let chat = center / center.norm();
                        let m = center - chat * radius;
                        let d = g.tangent_at(m, &g.b);
                        (m, d)
                    }
                };
                let dirb = match g.shape {
                    super::GeodesicShape::Diameter { dir: d0 } => {
                        // orient toward endpoint b
                        let t = g.tangent_at(m, &g.b);
                        let _ = d0;
                        t
                    }
                    _ => dir,
                };
                let mu = dirb.im.atan2(dirb.re);
                let s = (*len * lit::<T>(0.5)).tanh();
                let shift = MobiusMap {
                    m: [
                        Complex::new(T::one(), T::zero()),
                        Complex::new(s, T::zero()),
                        Complex::new(s, T::zero()),
                        Complex::new(T::one(), T::zero()),
                    ],
                    conj: false,
                };
                let h = MobiusMap::translation_to(m)
                    .compose(&MobiusMap::rotation(mu))
                    .compose(&shift)
                    .compose(&MobiusMap::rotation(-mu))
                    .compose(&MobiusMap::translation_to(-m));
                SpaceIsometry {
                    horizontal: h,
                    flip_t: false,
                    shift_t: T::zero(),
                }
            }
            Generator::VerticalTranslation { c } => SpaceIsometry {
                horizontal: MobiusMap::identity(),
                flip_t: false,
                shift_t: *c,
            },
        })
    }

    /// Distance of a space point from the generator's fixed set (rotation
    /// axes, mirror planes); translations have none and return `None`.
    pub fn fixed_set_residual(&self, pt: SpacePoint<T>) -> Option<T> {
        match self {
            Generator::RotationAboutVertical { p, .. } => {
                Some(super::hyp_distance(*p, pt.p))
            }
            Generator::RotationAboutHorizontal { g, t0 } => {
                let dh = g.signed_distance(pt.p).abs();
                let dv = (pt.t - *t0).abs();
                Some((dh * dh + dv * dv).sqrt())
            }
            Generator::MirrorVerticalPlane { g } => Some(g.signed_distance(pt.p).abs()),
            Generator::MirrorSlice { t0 } => Some((pt.t - *t0).abs()),
            Generator::Translation { .. } | Generator::VerticalTranslation { .. } => None,
        }
    }

    /// Whether the generator is a mirror (reflection through a plane), which
    /// requires an orthogonal-meeting audit before Schwarz extension.
    pub fn is_mirror(&self) -> bool {
        matches!(
            self,
            Generator::MirrorVerticalPlane { .. } | Generator::MirrorSlice { .. }
        )
    }

    /// Unit normal (frame components) of a mirror plane at a point near it.
    pub fn mirror_normal(&self, pt: SpacePoint<T>) -> Option<(C<T>, T)> {
        match self {
            Generator::MirrorVerticalPlane { g } => {
                let t = match g.shape {
                    super::GeodesicShape::Diameter { dir } => dir,
                    super::GeodesicShape::Arc { center, .. } => {
                        let u = pt.p.to_complex() - center;
                        // tangent of the arc at the nearest point
                        let tt = Complex::new(-u.im, u.re);
                        tt / tt.norm()
                    }
                };
                let n = Complex::new(-t.im, t.re);
                Some((n, T::zero()))
            }
            Generator::MirrorSlice { .. } => Some((Complex::new(T::zero(), T::zero()), T::one())),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgeom::{geodesic_through, hyp_distance, DiskPoint, IdealPoint};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type P = DiskPoint<f64>;

    fn random_point(rng: &mut ChaCha8Rng) -> P {
        loop {
            let x = rng.gen_range(-0.85..0.85);
            let y = rng.gen_range(-0.85..0.85);
            if x * x + y * y < 0.72 {
                return P::new(x, y);
            }
        }
    }

    fn product_dist(a: SpacePoint<f64>, b: SpacePoint<f64>) -> f64 {
        let dh = hyp_distance(a.p, b.p);
        let dv = a.t - b.t;
        (dh * dh + dv * dv).sqrt()
    }

    #[test]
    fn mirror_slice_flips_height() {
        let iso = Generator::MirrorSlice { t0: 0.0 }.isometry().unwrap();
        let p = SpacePoint::new(P::new(0.3, 0.1), 1.3);
        let q = iso.apply(p);
        assert_eq!(q.p, p.p);
        assert_relative_eq!(q.t, -1.3, epsilon = 1e-15);
    }

    #[test]
    fn translation_by_twice_ln3_lands_at_0_8() {
        // ℓ = 2·d(0, 0.5) = 2 ln 3; origin lands at tanh(ℓ/2) = 0.8.
        let axis = geodesic_through(P::origin(), IdealPoint::new(0.0)).unwrap();
        let l = 2.0 * hyp_distance(P::origin(), P::new(0.5, 0.0));
        let iso = Generator::Translation { g: axis, len: l }.isometry().unwrap();
        let q = iso.apply(SpacePoint::new(P::origin(), 0.0));
        assert_relative_eq!(q.p.x, 0.8, epsilon = 1e-13);
        assert!(q.p.y.abs() < 1e-13);
        assert_relative_eq!(hyp_distance(P::origin(), q.p), l, epsilon = 1e-12);
    }

    #[test]
    fn isometries_preserve_product_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gamma = geodesic_through(P::new(0.5, 0.0), IdealPoint::new(std::f64::consts::FRAC_PI_2))
            .unwrap();
        let gens: Vec<SpaceIsometry<f64>> = vec![
            Generator::RotationAboutVertical { p: P::new(0.5, 0.0), angle: std::f64::consts::PI }
                .isometry()
                .unwrap(),
            Generator::RotationAboutHorizontal { g: gamma, t0: 0.0 }
                .isometry()
                .unwrap(),
            Generator::MirrorVerticalPlane { g: gamma }.isometry().unwrap(),
            Generator::MirrorSlice { t0: 0.25 }.isometry().unwrap(),
            Generator::Translation { g: gamma, len: 0.9 }.isometry().unwrap(),
            Generator::VerticalTranslation { c: -2.0 }.isometry().unwrap(),
        ];
        for iso in &gens {
            for _ in 0..40 {
                let a = SpacePoint::new(random_point(&mut rng), rng.gen_range(-2.0..2.0));
                let b = SpacePoint::new(random_point(&mut rng), rng.gen_range(-2.0..2.0));
                let d0 = product_dist(a, b);
                let d1 = product_dist(iso.apply(a), iso.apply(b));
                assert!((d0 - d1).abs() < 1e-12, "metric drift {}", (d0 - d1).abs());
            }
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let gamma = geodesic_through(P::new(0.4, 0.1), P::new(-0.2, 0.5)).unwrap();
        let gens = vec![
            Generator::RotationAboutVertical { p: P::new(0.2, -0.3), angle: 1.1 }
                .isometry()
                .unwrap(),
            Generator::RotationAboutHorizontal { g: gamma, t0: 0.7 }
                .isometry()
                .unwrap(),
            Generator::Translation { g: gamma, len: 1.3 }.isometry().unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for iso in gens {
            let inv = iso.inverse();
            for _ in 0..20 {
                let a = SpacePoint::new(random_point(&mut rng), rng.gen_range(-2.0..2.0));
                let b = inv.apply(iso.apply(a));
                assert!(product_dist(a, b) < 1e-14);
            }
        }
    }

    #[test]
    fn two_vertical_rotations_compose_to_translation() {
        // π-rotations about V₁ = (α,0)×ℝ and V₂ = (−α,0)×ℝ compose to a
        // hyperbolic translation of length 4·d(0, α).
        for alpha in [0.3, 0.5, 0.7] {
            let r1 = Generator::RotationAboutVertical {
                p: P::new(alpha, 0.0),
                angle: std::f64::consts::PI,
            }
            .isometry()
            .unwrap();
            let r2 = Generator::RotationAboutVertical {
                p: P::new(-alpha, 0.0),
                angle: std::f64::consts::PI,
            }
            .isometry()
            .unwrap();
            let t = r2.compose(&r1);
            let expected = 4.0 * hyp_distance(P::origin(), P::new(alpha, 0.0));
            let l = t.horizontal.translation_length().expect("hyperbolic element");
            assert_relative_eq!(l, expected, epsilon = 1e-12);
            // on-axis displacement equals the translation length
            let img = t.apply(SpacePoint::new(P::origin(), 0.0));
            assert_relative_eq!(hyp_distance(P::origin(), img.p), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn mirrors_at_angle_pi_over_k_compose_to_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [2usize, 3, 5] {
            let ang = std::f64::consts::PI / k as f64;
            let g1 = geodesic_through(P::origin(), IdealPoint::new(0.0)).unwrap();
            let g2 = geodesic_through(P::origin(), IdealPoint::new(ang)).unwrap();
            let m1 = Generator::MirrorVerticalPlane { g: g1 }.isometry().unwrap();
            let m2 = Generator::MirrorVerticalPlane { g: g2 }.isometry().unwrap();
            let comp = m2.compose(&m1);
            let rot = Generator::RotationAboutVertical {
                p: P::origin(),
                angle: 2.0 * ang,
            }
            .isometry()
            .unwrap();
            for _ in 0..25 {
                let a = SpacePoint::new(random_point(&mut rng), rng.gen_range(-1.0..1.0));
                let d = product_dist(comp.apply(a), rot.apply(a));
                assert!(d < 1e-12, "composition mismatch {d}");
            }
        }
    }

    #[test]
    fn angles_invariant_under_mobius() {
        use crate::hypgeom::angle_between;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let at = random_point(&mut rng);
            let q1 = random_point(&mut rng);
            let q2 = random_point(&mut rng);
            if hyp_distance(at, q1) < 1e-3 || hyp_distance(at, q2) < 1e-3 {
                continue;
            }
            let g1 = geodesic_through(at, q1).unwrap();
            let g2 = geodesic_through(at, q2).unwrap();
            let a0 = angle_between(at, &g1, &g2).unwrap();
            let iso = Generator::RotationAboutVertical {
                p: random_point(&mut rng),
                angle: rng.gen_range(0.1..3.0),
            }
            .isometry()
            .unwrap();
            let at2 = iso.apply_disk(at);
            let h1 = geodesic_through(at2, iso.apply_disk(q1)).unwrap();
            let h2 = geodesic_through(at2, iso.apply_disk(q2)).unwrap();
            let a1 = angle_between(at2, &h1, &h2).unwrap();
            assert!((a0 - a1).abs() < 1e-10, "angle drift {}", (a0 - a1).abs());
        }
    }
}
