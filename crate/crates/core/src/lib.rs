//! Numerical laboratory for minimal surfaces in H²×ℝ.
//!
//! The crate builds minimal graphs over geodesic wedges of the hyperbolic
//! plane (Poincaré disk model), computes their differential geometry,
//! constructs conjugate/associate surfaces, and assembles complete surfaces
//! by Schwarz reflection, with quantitative curvature, symmetry, and
//! embeddedness audits.
//!
//! All numeric kernels are generic over the scalar type via [`scalar::Real`];
//! the type aliases below fix `f64`, which the CLI and the acceptance suite
//! use.

pub mod scalar;

pub mod hypgeom;
pub mod linalg;
pub mod meshdom;
pub mod graphsolve;
pub mod surfgeo;
pub mod conjugate;
pub mod assembly;

pub use scalar::Real;

/// Default `f64` instantiations.
pub type DiskPoint64 = hypgeom::DiskPoint<f64>;
pub type IdealPoint64 = hypgeom::IdealPoint<f64>;
pub type SpacePoint64 = hypgeom::SpacePoint<f64>;
pub type Geodesic64 = hypgeom::Geodesic<f64>;
pub type SpaceIsometry64 = hypgeom::SpaceIsometry<f64>;
pub type TriMesh64 = meshdom::TriMesh<f64>;
pub type WedgeSpec64 = meshdom::WedgeSpec<f64>;
pub type ScalarField64 = graphsolve::ScalarField<f64>;
pub type Immersion64 = surfgeo::Immersion<f64>;
pub type GeometryFields64 = surfgeo::GeometryFields<f64>;
pub type SurfaceComplex64 = assembly::SurfaceComplex<f64>;
