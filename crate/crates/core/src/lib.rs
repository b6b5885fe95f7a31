//! Riemannian simplices on constant-curvature model spaces.
//!
//! The crate builds simplices whose "straight lines" are geodesics, via
//! weighted Karcher means, and mechanically checks sufficient conditions for
//! two things: that a single such simplex is non-degenerate, and that a whole
//! simplicial complex triangulates the manifold it sits on.  Every checked
//! condition is a certificate: a `Certified` verdict is a guarantee, an
//! `Inconclusive` one is not a refutation.  Randomized oracles cross-validate
//! the certificates from the other side.

pub mod cert;
pub mod comparison;
pub mod complex;
pub mod fd;
pub mod io;
pub mod karcher;
pub mod manifold;
pub mod sample;
pub mod scalar;
pub mod simplex;
pub mod triangulation;

pub use scalar::Real;

/// Concrete double-precision aliases for the generic kernel types.
pub type Simplex64 = simplex::EuclideanSimplex<f64>;
/// Single-precision variant, for callers that trade accuracy for space.
pub type Simplex32 = simplex::EuclideanSimplex<f32>;
/// Double-precision model manifold.
pub type Manifold64 = manifold::ModelManifold<f64>;
/// Single-precision model manifold.
pub type Manifold32 = manifold::ModelManifold<f32>;
/// Double-precision geodesic simplex.
pub type RiemannianSimplex64 = karcher::RiemannianSimplex<f64>;
/// Single-precision geodesic simplex.
pub type RiemannianSimplex32 = karcher::RiemannianSimplex<f32>;
