//! Constant-curvature model spaces with closed-form geodesic calculus.
//!
//! Points are ambient coordinate vectors: unit vectors for the sphere, unit
//! hyperboloid points (timelike coordinate last) for hyperbolic space, and
//! fundamental-domain coordinates for the flat torus.  Tangent vectors are
//! ambient vectors in the tangent subspace, measured in manifold length
//! units, so `|log(x, y)| = dist(x, y)` holds on every kind.

use crate::sample;
use crate::scalar::Real;
use nalgebra::DVector;
use rand::Rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ManifoldError {
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid tangent: {0}")]
    InvalidTangent(String),
    #[error("beyond the injectivity radius: distance {distance} vs limit {limit}")]
    BeyondInjectivityRadius { distance: f64, limit: f64 },
    #[error("comparison radius {r} at or above the admissible limit {limit}")]
    RadiusTooLarge { r: f64, limit: f64 },
    #[error("triangle outside the admissible ball: {0}")]
    TriangleTooLarge(String),
}

/// The supported model geometries.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelManifold<R: Real> {
    Euclidean { dim: usize },
    /// Sphere of the given radius; points are stored as unit vectors.
    Sphere { dim: usize, radius: R },
    /// Hyperbolic space of curvature `-1/scale^2`, hyperboloid model with the
    /// timelike coordinate last; points satisfy `<x,x>_mink = -1`.
    Hyperbolic { dim: usize, scale: R },
    /// Rectangular flat torus `R^n / (L_1 Z x ... x L_n Z)`.
    FlatTorus { periods: Vec<R> },
}

/// Minkowski inner product with the timelike coordinate last.
pub fn minkowski_dot<R: Real>(u: &DVector<R>, v: &DVector<R>) -> R {
    let n = u.len() - 1;
    let mut s = R::zero();
    for i in 0..n {
        s += u[i] * v[i];
    }
    s - u[n] * v[n]
}

/// Angle between unit vectors, via the chord around the poles of `acos` so
/// that tiny angles keep full relative accuracy.
fn sphere_angle<R: Real>(x: &DVector<R>, y: &DVector<R>) -> R {
    let c = x.dot(y);
    if c > R::of(0.9) {
        let half_chord = (x - y).norm() * R::of(0.5);
        R::of(2.0) * half_chord.min(R::one()).asin()
    } else if c < R::of(-0.9) {
        let half_chord = (x + y).norm() * R::of(0.5);
        R::pi() - R::of(2.0) * half_chord.min(R::one()).asin()
    } else {
        c.acos()
    }
}

/// Hyperbolic angle between hyperboloid points, via the spacelike chord so
/// that tiny separations keep full relative accuracy.
fn hyperbolic_angle<R: Real>(x: &DVector<R>, y: &DVector<R>) -> R {
    let d = x - y;
    let q = minkowski_dot(&d, &d).max(R::zero());
    R::of(2.0) * (q.sqrt() * R::of(0.5)).asinh()
}

impl<R: Real> ModelManifold<R> {
    pub fn euclidean(dim: usize) -> Self {
        Self::Euclidean { dim }
    }

    pub fn sphere(dim: usize, radius: R) -> Self {
        assert!(radius > R::zero());
        Self::Sphere { dim, radius }
    }

    pub fn hyperbolic(dim: usize, scale: R) -> Self {
        assert!(scale > R::zero());
        Self::Hyperbolic { dim, scale }
    }

    pub fn flat_torus(periods: Vec<R>) -> Self {
        assert!(!periods.is_empty() && periods.iter().all(|&l| l > R::zero()));
        Self::FlatTorus { periods }
    }

    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            Self::Euclidean { dim } => *dim,
            Self::Sphere { dim, .. } => *dim,
            Self::Hyperbolic { dim, .. } => *dim,
            Self::FlatTorus { periods } => periods.len(),
        }
    }

    /// Dimension of the ambient coordinate vectors.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Euclidean { dim } => *dim,
            Self::Sphere { dim, .. } => dim + 1,
            Self::Hyperbolic { dim, .. } => dim + 1,
            Self::FlatTorus { periods } => periods.len(),
        }
    }

    /// Upper sectional curvature bound (exact for these spaces).
    pub fn curvature_upper(&self) -> R {
        match self {
            Self::Euclidean { .. } | Self::FlatTorus { .. } => R::zero(),
            Self::Sphere { radius, .. } => R::one() / (*radius * *radius),
            Self::Hyperbolic { scale, .. } => -R::one() / (*scale * *scale),
        }
    }

    /// Absolute curvature bound `Lambda = max(|K|)`.
    pub fn lambda(&self) -> R {
        self.curvature_upper().abs()
    }

    /// Injectivity radius; infinite for the non-compact kinds.
    pub fn injectivity_radius(&self) -> R {
        match self {
            Self::Euclidean { .. } | Self::Hyperbolic { .. } => R::inf(),
            Self::Sphere { radius, .. } => R::pi() * *radius,
            Self::FlatTorus { periods } => {
                let mut m = periods[0];
                for &l in periods.iter().skip(1) {
                    if l < m {
                        m = l;
                    }
                }
                m * R::of(0.5)
            }
        }
    }

    /// Radius below which weighted barycenters exist and are unique:
    /// `min(inj/2, pi / (4 sqrt(K_up)))`, second term dropped when `K_up <= 0`.
    pub fn rho0(&self) -> R {
        let half_inj = self.injectivity_radius() * R::of(0.5);
        let kup = self.curvature_upper();
        if kup > R::zero() {
            half_inj.min(R::pi() / (R::of(4.0) * kup.sqrt()))
        } else {
            half_inj
        }
    }

    /// Open balls of radius below this are geodesically convex:
    /// `min(inj/2, pi / (2 sqrt(K_up)))`.
    pub fn convexity_radius(&self) -> R {
        let half_inj = self.injectivity_radius() * R::of(0.5);
        let kup = self.curvature_upper();
        if kup > R::zero() {
            half_inj.min(R::pi() / (R::of(2.0) * kup.sqrt()))
        } else {
            half_inj
        }
    }

    /// Factor converting raw ambient-coordinate velocities into manifold
    /// length units (the stored sphere/hyperboloid charts are unit-scaled).
    pub fn ambient_velocity_scale(&self) -> R {
        match self {
            Self::Sphere { radius, .. } => *radius,
            Self::Hyperbolic { scale, .. } => *scale,
            _ => R::one(),
        }
    }

    /// Validate ambient coordinates as a point of the manifold.
    pub fn check_point(&self, x: &DVector<R>) -> Result<(), ManifoldError> {
        if x.len() != self.ambient_dim() {
            return Err(ManifoldError::InvalidPoint(format!(
                "coordinate length {} but ambient dimension is {}",
                x.len(),
                self.ambient_dim()
            )));
        }
        match self {
            Self::Euclidean { .. } => Ok(()),
            Self::Sphere { .. } => {
                let err = (x.norm() - R::one()).abs();
                if err > R::of(1e-12) + R::EPS * R::of(64.0) {
                    Err(ManifoldError::InvalidPoint(format!(
                        "sphere point norm deviates from 1 by {:.3e}",
                        err.to64()
                    )))
                } else {
                    Ok(())
                }
            }
            Self::Hyperbolic { .. } => {
                let q = minkowski_dot(x, x);
                let n = x.len();
                if (q + R::one()).abs() > R::of(1e-12) + R::EPS * R::of(64.0) {
                    Err(ManifoldError::InvalidPoint(format!(
                        "hyperboloid constraint <x,x> = -1 violated by {:.3e}",
                        (q + R::one()).abs().to64()
                    )))
                } else if x[n - 1] <= R::zero() {
                    Err(ManifoldError::InvalidPoint(
                        "point on the wrong hyperboloid sheet".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Self::FlatTorus { periods } => {
                for (i, &l) in periods.iter().enumerate() {
                    if x[i] < R::zero() || x[i] >= l {
                        return Err(ManifoldError::InvalidPoint(format!(
                            "coordinate {i} = {} outside the fundamental domain [0, {})",
                            x[i].to64(),
                            l.to64()
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Validate an ambient vector as a tangent vector at `x`.
    pub fn check_tangent(&self, x: &DVector<R>, v: &DVector<R>) -> Result<(), ManifoldError> {
        if v.len() != self.ambient_dim() {
            return Err(ManifoldError::InvalidTangent(format!(
                "coordinate length {} but ambient dimension is {}",
                v.len(),
                self.ambient_dim()
            )));
        }
        let tol = R::of(1e-9) * (R::one() + v.norm());
        match self {
            Self::Sphere { .. } => {
                if x.dot(v).abs() > tol {
                    return Err(ManifoldError::InvalidTangent(
                        "not orthogonal to the base point".into(),
                    ));
                }
            }
            Self::Hyperbolic { .. } => {
                if minkowski_dot(x, v).abs() > tol {
                    return Err(ManifoldError::InvalidTangent(
                        "not Minkowski-orthogonal to the base point".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Riemannian inner product of tangents at `x`.
    pub fn metric_dot(&self, _x: &DVector<R>, u: &DVector<R>, v: &DVector<R>) -> R {
        match self {
            Self::Hyperbolic { .. } => minkowski_dot(u, v),
            _ => u.dot(v),
        }
    }

    pub fn tangent_norm(&self, x: &DVector<R>, v: &DVector<R>) -> R {
        self.metric_dot(x, v, v).max(R::zero()).sqrt()
    }

    /// Project an ambient vector onto the tangent space at `x`.
    pub fn project_tangent(&self, x: &DVector<R>, w: &DVector<R>) -> DVector<R> {
        match self {
            Self::Sphere { .. } => w - x * x.dot(w),
            Self::Hyperbolic { .. } => w + x * minkowski_dot(x, w),
            _ => w.clone(),
        }
    }

    /// Geodesic distance.
    pub fn dist(&self, x: &DVector<R>, y: &DVector<R>) -> R {
        match self {
            Self::Euclidean { .. } => (x - y).norm(),
            Self::Sphere { radius, .. } => *radius * sphere_angle(x, y),
            Self::Hyperbolic { scale, .. } => *scale * hyperbolic_angle(x, y),
            Self::FlatTorus { .. } => self.torus_delta(x, y).norm(),
        }
    }

    /// Exponential map; the result satisfies the point constraints exactly
    /// (renormalized or wrapped as needed).
    pub fn exp(&self, x: &DVector<R>, v: &DVector<R>) -> DVector<R> {
        match self {
            Self::Euclidean { .. } => x + v,
            Self::Sphere { radius, .. } => {
                let norm = v.norm();
                if norm <= R::EPS * R::of(4.0) {
                    return x.clone();
                }
                let theta = norm / *radius;
                let out = x * theta.cos() + v * (theta.sin() / norm);
                let n = out.norm();
                out / n
            }
            Self::Hyperbolic { scale, .. } => {
                let norm = minkowski_dot(v, v).max(R::zero()).sqrt();
                if norm <= R::EPS * R::of(4.0) {
                    return x.clone();
                }
                let theta = norm / *scale;
                let out = x * theta.cosh() + v * (theta.sinh() / norm);
                // Re-project onto the hyperboloid sheet.
                let q = -minkowski_dot(&out, &out);
                out / q.max(R::EPS).sqrt()
            }
            Self::FlatTorus { .. } => self.wrap(&(x + v)),
        }
    }

    /// Inverse of the exponential map; defined strictly inside the
    /// injectivity radius.
    pub fn log(&self, x: &DVector<R>, y: &DVector<R>) -> Result<DVector<R>, ManifoldError> {
        match self {
            Self::Euclidean { .. } => Ok(y - x),
            Self::Sphere { radius, .. } => {
                let theta = sphere_angle(x, y);
                if theta >= R::pi() * (R::one() - R::of(1e-9)) {
                    return Err(ManifoldError::BeyondInjectivityRadius {
                        distance: (*radius * theta).to64(),
                        limit: self.injectivity_radius().to64(),
                    });
                }
                if theta <= R::EPS * R::of(4.0) {
                    return Ok(DVector::zeros(x.len()));
                }
                let c = x.dot(y);
                let perp = y - x * c;
                let pn = perp.norm();
                Ok(perp * (*radius * theta / pn))
            }
            Self::Hyperbolic { scale, .. } => {
                let theta = hyperbolic_angle(x, y);
                if theta <= R::EPS * R::of(4.0) {
                    return Ok(DVector::zeros(x.len()));
                }
                let c = -minkowski_dot(x, y);
                let perp = y - x * c;
                let pn = minkowski_dot(&perp, &perp).max(R::zero()).sqrt();
                Ok(perp * (*scale * theta / pn))
            }
            Self::FlatTorus { periods } => {
                let delta = self.torus_delta(x, y);
                let d = delta.norm();
                let inj = self.injectivity_radius();
                if d >= inj {
                    return Err(ManifoldError::BeyondInjectivityRadius {
                        distance: d.to64(),
                        limit: inj.to64(),
                    });
                }
                // Reject near-ties between lattice representatives.
                for (i, &l) in periods.iter().enumerate() {
                    if (delta[i].abs() - l * R::of(0.5)).abs() <= R::of(1e-9) * l {
                        return Err(ManifoldError::BeyondInjectivityRadius {
                            distance: d.to64(),
                            limit: inj.to64(),
                        });
                    }
                }
                Ok(delta)
            }
        }
    }

    /// Parallel transport of `v` from `x` to `y` along the unique shortest
    /// geodesic.
    pub fn transport(
        &self,
        x: &DVector<R>,
        y: &DVector<R>,
        v: &DVector<R>,
    ) -> Result<DVector<R>, ManifoldError> {
        match self {
            Self::Euclidean { .. } | Self::FlatTorus { .. } => Ok(v.clone()),
            Self::Sphere { radius, .. } => {
                let c = x.dot(y);
                if c <= -R::one() + R::of(1e-12) {
                    return Err(ManifoldError::BeyondInjectivityRadius {
                        distance: (*radius * R::pi()).to64(),
                        limit: self.injectivity_radius().to64(),
                    });
                }
                let sum = x + y;
                Ok(v - &sum * (y.dot(v) / (R::one() + c)))
            }
            Self::Hyperbolic { .. } => {
                let c = -minkowski_dot(x, y);
                let sum = x + y;
                Ok(v + &sum * (minkowski_dot(y, v) / (R::one() + c)))
            }
        }
    }

    /// Deterministic orthonormal basis of the tangent space at `x`.
    pub fn tangent_basis(&self, x: &DVector<R>) -> Vec<DVector<R>> {
        let n = self.dim();
        let amb = self.ambient_dim();
        let mut basis: Vec<DVector<R>> = Vec::with_capacity(n);
        for i in 0..amb {
            if basis.len() == n {
                break;
            }
            let mut e = DVector::zeros(amb);
            e[i] = R::one();
            let mut v = self.project_tangent(x, &e);
            for b in &basis {
                let c = self.metric_dot(x, b, &v);
                v -= b * c;
            }
            let norm = self.tangent_norm(x, &v);
            if norm > R::of(1e-6) {
                basis.push(v / norm);
            }
        }
        assert_eq!(basis.len(), n, "tangent basis construction incomplete");
        basis
    }

    /// Coordinates of tangent `v` at `x` in the given orthonormal frame.
    pub fn frame_coords(&self, x: &DVector<R>, frame: &[DVector<R>], v: &DVector<R>) -> DVector<R> {
        DVector::from_fn(frame.len(), |i, _| self.metric_dot(x, &frame[i], v))
    }

    /// Tangent vector with the given frame coordinates.
    pub fn from_frame_coords(&self, frame: &[DVector<R>], coords: &DVector<R>) -> DVector<R> {
        let mut v = DVector::zeros(frame[0].len());
        for (i, f) in frame.iter().enumerate() {
            v += f * coords[i];
        }
        v
    }

    /// Uniform-ish random point.  Uniform on the sphere and the torus;
    /// Gaussian for Euclidean space; for hyperbolic space, the exponential of
    /// a Gaussian tangent at the hyperboloid apex (a heuristic, since no
    /// uniform probability measure exists there).
    pub fn random_point(&self, rng: &mut impl Rng) -> DVector<R> {
        match self {
            Self::Euclidean { dim } => sample::gauss_vector(*dim, rng),
            Self::Sphere { dim, .. } => {
                loop {
                    let v = sample::gauss_vector::<R>(dim + 1, rng);
                    let n = v.norm();
                    if n > R::of(1e-6) {
                        return v / n;
                    }
                }
            }
            Self::Hyperbolic { dim, scale } => {
                let base = self.hyperbolic_apex();
                let mut v = sample::gauss_vector::<R>(dim + 1, rng) * (*scale * R::of(0.5));
                v[*dim] = R::zero();
                self.exp(&base, &v)
            }
            Self::FlatTorus { periods } => DVector::from_fn(periods.len(), |i, _| {
                sample::uniform::<R>(0.0, periods[i].to64(), rng)
            }),
        }
    }

    /// Random point at distance at most `rho` from `center`.
    pub fn random_point_in_ball(
        &self,
        center: &DVector<R>,
        rho: R,
        rng: &mut impl Rng,
    ) -> DVector<R> {
        let v = self.random_tangent_in_ball(center, rho, rng);
        self.exp(center, &v)
    }

    /// Random tangent at `center` of norm at most `rho`.
    pub fn random_tangent_in_ball(
        &self,
        center: &DVector<R>,
        rho: R,
        rng: &mut impl Rng,
    ) -> DVector<R> {
        let n = self.dim();
        loop {
            let raw = sample::gauss_vector::<R>(self.ambient_dim(), rng);
            let t = self.project_tangent(center, &raw);
            let norm = self.tangent_norm(center, &t);
            if norm > R::of(1e-9) {
                let u: f64 = rng.gen_range(0.0..1.0f64);
                let radius = rho * R::of(u.powf(1.0 / n as f64));
                return t * (radius / norm);
            }
        }
    }

    fn hyperbolic_apex(&self) -> DVector<R> {
        let amb = self.ambient_dim();
        let mut x = DVector::zeros(amb);
        x[amb - 1] = R::one();
        x
    }

    /// A canonical base point (used by samplers and generators).
    pub fn base_point(&self) -> DVector<R> {
        match self {
            Self::Euclidean { dim } => DVector::zeros(*dim),
            Self::Sphere { dim, .. } => {
                let mut x = DVector::zeros(dim + 1);
                x[0] = R::one();
                x
            }
            Self::Hyperbolic { .. } => self.hyperbolic_apex(),
            Self::FlatTorus { periods } => DVector::zeros(periods.len()),
        }
    }

    fn wrap(&self, x: &DVector<R>) -> DVector<R> {
        match self {
            Self::FlatTorus { periods } => DVector::from_fn(periods.len(), |i, _| {
                let l = periods[i];
                let mut r = x[i] - l * (x[i] / l).floor();
                if r >= l {
                    r -= l;
                }
                if r < R::zero() {
                    r += l;
                }
                r
            }),
            _ => x.clone(),
        }
    }

    fn torus_delta(&self, x: &DVector<R>, y: &DVector<R>) -> DVector<R> {
        match self {
            Self::FlatTorus { periods } => DVector::from_fn(periods.len(), |i, _| {
                let l = periods[i];
                let d = y[i] - x[i];
                d - l * (d / l).round()
            }),
            _ => unreachable!("torus_delta on a non-torus kind"),
        }
    }
}

/// The comparison function `S_k(r)`: circumference factor of curvature `k`.
pub fn comparison_s<R: Real>(kappa: R, r: R) -> R {
    if kappa > R::zero() {
        let sq = kappa.sqrt();
        (sq * r).sin() / sq
    } else if kappa < R::zero() {
        let sq = (-kappa).sqrt();
        (sq * r).sinh() / sq
    } else {
        r
    }
}

/// Polynomial two-sided bounds `(1 - Lambda r^2/6, 1 + Lambda r^2/2)` on the
/// radial expansion of `exp` at radius `r`; requires `r < pi/(2 sqrt(Lambda))`
/// when the space is curved.
pub fn rauch_bounds<R: Real>(m: &ModelManifold<R>, r: R) -> Result<(R, R), ManifoldError> {
    let lambda = m.lambda();
    if lambda > R::zero() {
        let limit = R::pi() / (R::of(2.0) * lambda.sqrt());
        if r >= limit {
            return Err(ManifoldError::RadiusTooLarge {
                r: r.to64(),
                limit: limit.to64(),
            });
        }
    }
    let lr2 = lambda * r * r;
    Ok((R::one() - lr2 / R::of(6.0), R::one() + lr2 * R::of(0.5)))
}

/// Holonomy measurement around a geodesic triangle `p, x, y`: how far the
/// edge-path transport `p -> y -> x` strays from the direct one, against the
/// area bound `(4/3) Lambda area`.
#[derive(Debug, Clone)]
pub struct HolonomyDefect<R: Real> {
    pub actual: R,
    pub bound: R,
    pub area: R,
}

pub fn holonomy_defect<R: Real>(
    m: &ModelManifold<R>,
    p: &DVector<R>,
    x: &DVector<R>,
    y: &DVector<R>,
) -> Result<HolonomyDefect<R>, ManifoldError> {
    let dpx = m.dist(p, x);
    let dpy = m.dist(p, y);
    let dxy = m.dist(x, y);
    let rho = dpx.max(dpy).max(dxy);
    let half_rho0 = m.rho0() * R::of(0.5);
    if rho >= half_rho0 {
        return Err(ManifoldError::TriangleTooLarge(format!(
            "max pairwise distance {:.6} not below rho0/2 = {:.6}",
            rho.to64(),
            half_rho0.to64()
        )));
    }
    let perimeter = dpx + dpy + dxy;
    let mut perim_limit = m.injectivity_radius();
    let kup = m.curvature_upper();
    if kup > R::zero() {
        perim_limit = perim_limit.min(R::two_pi() / kup.sqrt());
    }
    if perimeter >= perim_limit {
        return Err(ManifoldError::TriangleTooLarge(format!(
            "perimeter {:.6} not below the admissible limit {:.6}",
            perimeter.to64(),
            perim_limit.to64()
        )));
    }

    let area = triangle_area(m, p, x, y)?;
    let bound = R::of(4.0 / 3.0) * m.lambda() * area;

    let basis_p = m.tangent_basis(p);
    let basis_x = m.tangent_basis(x);
    let n = m.dim();
    let mut diff = nalgebra::DMatrix::<R>::zeros(n, n);
    for (j, b) in basis_p.iter().enumerate() {
        let direct = m.transport(p, x, b)?;
        let via_y = m.transport(y, x, &m.transport(p, y, b)?)?;
        let delta = direct - via_y;
        let coords = m.frame_coords(x, &basis_x, &delta);
        diff.set_column(j, &coords);
    }
    let actual = if n == 0 {
        R::zero()
    } else {
        diff.svd(false, false).singular_values[0]
    };
    Ok(HolonomyDefect {
        actual,
        bound,
        area,
    })
}

/// Exact area of the geodesic triangle in the model space: angle excess or
/// defect scaled by the curvature radius squared, Heron in the flat kinds.
pub fn triangle_area<R: Real>(
    m: &ModelManifold<R>,
    p: &DVector<R>,
    x: &DVector<R>,
    y: &DVector<R>,
) -> Result<R, ManifoldError> {
    match m {
        ModelManifold::Euclidean { .. } | ModelManifold::FlatTorus { .. } => {
            let a = m.dist(p, x);
            let b = m.dist(p, y);
            let c = m.dist(x, y);
            let s = (a + b + c) * R::of(0.5);
            Ok((s * (s - a) * (s - b) * (s - c)).max(R::zero()).sqrt())
        }
        ModelManifold::Sphere { radius, .. } => {
            let excess =
                vertex_angle(m, p, x, y)? + vertex_angle(m, x, y, p)? + vertex_angle(m, y, p, x)?
                    - R::pi();
            Ok(excess.max(R::zero()) * *radius * *radius)
        }
        ModelManifold::Hyperbolic { scale, .. } => {
            let defect = R::pi()
                - (vertex_angle(m, p, x, y)?
                    + vertex_angle(m, x, y, p)?
                    + vertex_angle(m, y, p, x)?);
            Ok(defect.max(R::zero()) * *scale * *scale)
        }
    }
}

/// Interior angle at `at` of the geodesic triangle `at, b, c`.
pub fn vertex_angle<R: Real>(
    m: &ModelManifold<R>,
    at: &DVector<R>,
    b: &DVector<R>,
    c: &DVector<R>,
) -> Result<R, ManifoldError> {
    let u = m.log(at, b)?;
    let v = m.log(at, c)?;
    let nu = m.tangent_norm(at, &u);
    let nv = m.tangent_norm(at, &v);
    if nu <= R::zero() || nv <= R::zero() {
        return Ok(R::zero());
    }
    let cosang = (m.metric_dot(at, &u, &v) / (nu * nv))
        .min(R::one())
        .max(-R::one());
    Ok(cosang.acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::rng_from_seed;
    use approx::assert_relative_eq;

    fn unit_sphere() -> ModelManifold<f64> {
        ModelManifold::sphere(2, 1.0)
    }

    fn v(coords: &[f64]) -> DVector<f64> {
        DVector::from_vec(coords.to_vec())
    }

    #[test]
    fn sphere_quarter_turn_distance() {
        let m = unit_sphere();
        assert_relative_eq!(
            m.dist(&v(&[0.0, 0.0, 1.0]), &v(&[1.0, 0.0, 0.0])),
            std::f64::consts::FRAC_PI_2,
            max_relative = 1e-14
        );
    }

    #[test]
    fn sphere_exp_reaches_equator() {
        let m = unit_sphere();
        let x = v(&[0.0, 0.0, 1.0]);
        let t = v(&[std::f64::consts::FRAC_PI_2, 0.0, 0.0]);
        let y = m.exp(&x, &t);
        assert!((y - v(&[1.0, 0.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn sphere_log_rejects_antipody() {
        let m = unit_sphere();
        let r = m.log(&v(&[0.0, 0.0, 1.0]), &v(&[0.0, 0.0, -1.0]));
        assert!(matches!(
            r,
            Err(ManifoldError::BeyondInjectivityRadius { .. })
        ));
    }

    #[test]
    fn scaled_sphere_log_norm_is_distance() {
        let m = ModelManifold::sphere(2, 2.5);
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let x = m.random_point(&mut rng);
            let y = m.random_point(&mut rng);
            if let Ok(l) = m.log(&x, &y) {
                assert_relative_eq!(l.norm(), m.dist(&x, &y), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn hyperbolic_known_distance() {
        let m = ModelManifold::hyperbolic(2, 1.0);
        let x = v(&[0.0, 0.0, 1.0]);
        let y = v(&[1f64.sinh(), 0.0, 1f64.cosh()]);
        assert_relative_eq!(m.dist(&x, &y), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn torus_wraparound_log() {
        let m = ModelManifold::flat_torus(vec![1.0]);
        let l = m.log(&v(&[0.9]), &v(&[0.1])).unwrap();
        assert_relative_eq!(l[0], 0.2, max_relative = 1e-13);
    }

    #[test]
    fn torus_rejects_cut_locus_tie() {
        let m = ModelManifold::flat_torus(vec![1.0, 1.0]);
        let r = m.log(&v(&[0.25, 0.1]), &v(&[0.75, 0.1]));
        assert!(matches!(
            r,
            Err(ManifoldError::BeyondInjectivityRadius { .. })
        ));
    }

    #[test]
    fn injectivity_and_barycenter_radii() {
        assert_relative_eq!(
            unit_sphere().rho0(),
            std::f64::consts::FRAC_PI_4,
            max_relative = 1e-14
        );
        let t = ModelManifold::flat_torus(vec![1.0, 1.0]);
        assert_relative_eq!(t.rho0(), 0.25, max_relative = 1e-14);
        assert_relative_eq!(t.convexity_radius(), 0.25, max_relative = 1e-14);
        let h = ModelManifold::<f64>::hyperbolic(3, 1.0);
        assert!(h.rho0().is_infinite());
        assert_relative_eq!(
            unit_sphere().convexity_radius(),
            std::f64::consts::FRAC_PI_2,
            max_relative = 1e-14
        );
    }

    #[test]
    fn comparison_function_values() {
        assert_relative_eq!(comparison_s(0.0, 0.7), 0.7);
        assert_relative_eq!(
            comparison_s(1.0, std::f64::consts::FRAC_PI_2),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(comparison_s(-1.0, 1.0), 1f64.sinh(), max_relative = 1e-14);
    }

    #[test]
    fn rauch_bounds_example_and_domain() {
        let m = unit_sphere();
        let (lo, hi) = rauch_bounds(&m, 0.1).unwrap();
        assert_relative_eq!(lo, 1.0 - 0.01 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(hi, 1.005, max_relative = 1e-14);
        assert!(matches!(
            rauch_bounds(&m, 1.6),
            Err(ManifoldError::RadiusTooLarge { .. })
        ));
        let e = ModelManifold::<f64>::euclidean(3);
        let (lo, hi) = rauch_bounds(&e, 100.0).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    #[test]
    fn exp_log_round_trip_all_kinds() {
        let kinds: Vec<ModelManifold<f64>> = vec![
            ModelManifold::euclidean(3),
            ModelManifold::sphere(2, 1.0),
            ModelManifold::sphere(3, 0.7),
            ModelManifold::hyperbolic(2, 1.0),
            ModelManifold::hyperbolic(3, 2.0),
            ModelManifold::flat_torus(vec![1.0, 2.0]),
        ];
        let mut rng = rng_from_seed(17);
        for m in kinds {
            let scale = if m.rho0().is_finite() {
                m.rho0() * 0.9
            } else {
                1.0
            };
            for _ in 0..300 {
                let x = m.random_point(&mut rng);
                let y = m.random_point_in_ball(&x, scale, &mut rng);
                m.check_point(&x).unwrap();
                m.check_point(&y).unwrap();
                let l = m.log(&x, &y).unwrap();
                m.check_tangent(&x, &l).unwrap();
                assert!((m.tangent_norm(&x, &l) - m.dist(&x, &y)).abs() < 1e-10);
                let back = m.exp(&x, &l);
                assert!(m.dist(&back, &y) < 1e-10, "round trip failed on {m:?}");
            }
        }
    }

    #[test]
    fn transport_is_isometric() {
        let kinds: Vec<ModelManifold<f64>> = vec![
            ModelManifold::sphere(2, 1.3),
            ModelManifold::hyperbolic(2, 0.8),
            ModelManifold::flat_torus(vec![1.0, 1.0]),
        ];
        let mut rng = rng_from_seed(23);
        for m in kinds {
            let scale = if m.rho0().is_finite() {
                m.rho0() * 0.9
            } else {
                1.0
            };
            for _ in 0..200 {
                let x = m.random_point(&mut rng);
                let y = m.random_point_in_ball(&x, scale, &mut rng);
                let u = m.random_tangent_in_ball(&x, 1.0, &mut rng);
                let w = m.random_tangent_in_ball(&x, 1.0, &mut rng);
                let tu = m.transport(&x, &y, &u).unwrap();
                let tw = m.transport(&x, &y, &w).unwrap();
                m.check_tangent(&y, &tu).unwrap();
                assert!(
                    (m.metric_dot(&x, &u, &w) - m.metric_dot(&y, &tu, &tw)).abs() < 1e-10,
                    "inner product drifted on {m:?}"
                );
            }
        }
    }

    #[test]
    fn transport_round_trip_is_identity() {
        let m = ModelManifold::hyperbolic(3, 1.0);
        let mut rng = rng_from_seed(29);
        for _ in 0..100 {
            let x = m.random_point(&mut rng);
            let y = m.random_point_in_ball(&x, 1.0, &mut rng);
            let u = m.random_tangent_in_ball(&x, 1.0, &mut rng);
            let back = m.transport(&y, &x, &m.transport(&x, &y, &u).unwrap()).unwrap();
            assert!((back - &u).norm() < 1e-10);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let kinds: Vec<ModelManifold<f64>> = vec![
            ModelManifold::euclidean(4),
            ModelManifold::sphere(3, 1.0),
            ModelManifold::hyperbolic(3, 1.0),
            ModelManifold::flat_torus(vec![2.0, 1.0, 1.0]),
        ];
        let mut rng = rng_from_seed(31);
        for m in kinds {
            for _ in 0..50 {
                let x = m.random_point(&mut rng);
                let basis = m.tangent_basis(&x);
                assert_eq!(basis.len(), m.dim());
                for i in 0..basis.len() {
                    m.check_tangent(&x, &basis[i]).unwrap();
                    for j in 0..basis.len() {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (m.metric_dot(&x, &basis[i], &basis[j]) - expect).abs() < 1e-10
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn holonomy_small_spherical_triangle() {
        let m = unit_sphere();
        // Right isoceles triangle with legs eps at the north pole.
        let eps = 0.1;
        let p = v(&[0.0, 0.0, 1.0]);
        let x = m.exp(&p, &v(&[eps, 0.0, 0.0]));
        let y = m.exp(&p, &v(&[0.0, eps, 0.0]));
        let h = holonomy_defect(&m, &p, &x, &y).unwrap();
        // Rotation by the triangle area; operator gap 2 sin(area/2).
        assert!(h.area > 0.0);
        assert_relative_eq!(h.actual, 2.0 * (h.area / 2.0).sin(), epsilon = 1e-6);
        assert!(h.actual <= h.bound);
    }

    #[test]
    fn holonomy_rejects_large_triangles() {
        let m = unit_sphere();
        let p = v(&[0.0, 0.0, 1.0]);
        let x = v(&[1.0, 0.0, 0.0]);
        let y = v(&[0.0, 1.0, 0.0]);
        assert!(matches!(
            holonomy_defect(&m, &p, &x, &y),
            Err(ManifoldError::TriangleTooLarge(_))
        ));
    }

    #[test]
    fn flat_torus_triangle_area_is_heron() {
        let m = ModelManifold::flat_torus(vec![4.0, 4.0]);
        let p = v(&[0.1, 0.1]);
        let x = v(&[0.3, 0.1]);
        let y = v(&[0.1, 0.4]);
        let a = triangle_area(&m, &p, &x, &y).unwrap();
        assert_relative_eq!(a, 0.5 * 0.2 * 0.3, max_relative = 1e-12);
        let h = holonomy_defect(&m, &p, &x, &y).unwrap();
        assert_eq!(h.bound, 0.0);
        assert!(h.actual < 1e-12);
    }

    #[test]
    fn point_validation_catches_drift() {
        let m = unit_sphere();
        assert!(m.check_point(&v(&[1.0 + 1e-6, 0.0, 0.0])).is_err());
        let t = ModelManifold::flat_torus(vec![1.0, 1.0]);
        assert!(t.check_point(&v(&[1.0, 0.5])).is_err());
        assert!(t.check_point(&v(&[0.0, 0.5])).is_ok());
        let h = ModelManifold::hyperbolic(2, 1.0);
        assert!(h.check_point(&v(&[0.0, 0.0, -1.0])).is_err());
    }
}
