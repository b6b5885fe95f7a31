//! Weighted Karcher means and Riemannian simplices.
//!
//! A Riemannian simplex is the image of the standard simplex under the
//! barycentric coordinate map `b`: each weight vector goes to the minimizer
//! of the weighted squared-distance energy over the vertex set.  Inside a
//! ball of radius below [`ModelManifold::rho0`] that minimizer exists, is
//! unique, and is found here by Picard iteration on the gradient field.

use crate::fd;
use crate::manifold::{ManifoldError, ModelManifold};
use crate::scalar::Real;
use crate::simplex::{EuclideanSimplex, SimplexError};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum KarcherError {
    #[error("invalid barycentric weights: {0}")]
    BadWeights(String),
    #[error("vertex ball radius {rho} exceeds the barycenter radius {rho0}")]
    BallTooLarge { rho: f64, rho0: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricWeights<R: Real> {
    weights: Vec<R>,
}

impl<R: Real> BarycentricWeights<R> {
    pub fn new(weights: Vec<R>) -> Result<Self, KarcherError> {
        if weights.is_empty() {
            return Err(KarcherError::BadWeights("empty weight vector".into()));
        }
        let mut sum = R::zero();
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= R::zero()) {
                return Err(KarcherError::BadWeights(format!(
                    "weight {i} = {} is negative or non-finite",
                    w.to64()
                )));
            }
            sum += w;
        }
        if (sum - R::one()).abs() > R::of(1e-12) {
            return Err(KarcherError::BadWeights(format!(
                "weights sum to {} instead of 1",
                sum.to64()
            )));
        }
        Ok(Self { weights })
    }

    /// Affine weights summing to one, possibly slightly negative; used for
    /// finite-difference probes of the barycentric map near the boundary.
    pub fn affine(weights: Vec<R>) -> Result<Self, KarcherError> {
        let sum: R = weights.iter().fold(R::zero(), |a, &b| a + b);
        if (sum - R::one()).abs() > R::of(1e-12) {
            return Err(KarcherError::BadWeights(format!(
                "weights sum to {} instead of 1",
                sum.to64()
            )));
        }
        Ok(Self { weights })
    }

    /// Uniform weights on `len` vertices.
    pub fn uniform(len: usize) -> Self {
        let w = R::one() / R::of(len as f64);
        Self {
            weights: vec![w; len],
        }
    }

    /// The indicator of a single vertex.
    pub fn vertex(len: usize, index: usize) -> Self {
        let mut weights = vec![R::zero(); len];
        weights[index] = R::one();
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> R {
        self.weights[i]
    }

    /// Index of the largest weight (ties to the lowest index).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.weights.len() {
            if self.weights[i] > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

/// The weighted squared-distance energy `E(x) = 1/2 sum_i w_i d(x, p_i)^2`.
pub fn energy<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    w: &BarycentricWeights<R>,
    x: &DVector<R>,
) -> R {
    let mut e = R::zero();
    for (p, &wi) in points.iter().zip(w.as_slice()) {
        let d = m.dist(x, p);
        e += wi * d * d;
    }
    e * R::of(0.5)
}

/// Gradient of the energy at `x`: `-sum_i w_i log_x(p_i)`.  The minimizer is
/// exactly the zero of this field.
pub fn grad_residual<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    w: &BarycentricWeights<R>,
    x: &DVector<R>,
) -> Result<DVector<R>, ManifoldError> {
    let mut g = DVector::zeros(m.ambient_dim());
    for (p, &wi) in points.iter().zip(w.as_slice()) {
        g -= m.log(x, p)? * wi;
    }
    Ok(g)
}

/// Result of a Karcher mean solve.
#[derive(Debug, Clone)]
pub struct KarcherSolution<R: Real> {
    pub point: DVector<R>,
    /// Number of update steps taken before the residual dropped below
    /// tolerance.
    pub iterations: usize,
    /// Final update-field norm in length units.
    pub residual: R,
}

fn enclosing_ball<R: Real>(m: &ModelManifold<R>, points: &[DVector<R>]) -> (usize, R) {
    let mut best = (0, R::inf());
    for (j, c) in points.iter().enumerate() {
        let mut reach = R::zero();
        for p in points.iter() {
            reach = reach.max(m.dist(c, p));
        }
        if reach < best.1 {
            best = (j, reach);
        }
    }
    best
}

/// Run the Picard iteration with a caller-supplied trust radius `rho` (which
/// sets the convergence tolerance `1e-12 * rho`) and no ball-size gate.  The
/// gated entry points are the contract; this one exists for configurations
/// whose symmetry guarantees a well-defined mean beyond the gate, and for
/// callers that have already established the containment ball.
pub fn karcher_mean_with_radius<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    w: &BarycentricWeights<R>,
    rho: R,
) -> Result<KarcherSolution<R>, KarcherError> {
    solve_in_ball(m, points, w, rho)
}

fn solve_in_ball<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    w: &BarycentricWeights<R>,
    rho: R,
) -> Result<KarcherSolution<R>, KarcherError> {
    let mut x = points[w.argmax()].clone();
    // The ambient rounding noise in one gradient evaluation scales with the
    // coordinate magnitude, not with the vertex spread; tiny simplices on
    // unit-scale charts cannot push the residual below that floor.
    let noise_floor = R::EPS * R::of(16.0) * (R::one() + x.norm());
    let tol = (rho * R::of(1e-12)).max(noise_floor);
    let mut v = DVector::zeros(m.ambient_dim());
    for iter in 0..=MAX_ITERATIONS {
        v.fill(R::zero());
        for (p, &wi) in points.iter().zip(w.as_slice()) {
            v += m.log(&x, p)? * wi;
        }
        let norm = m.tangent_norm(&x, &v);
        if norm <= tol {
            return Ok(KarcherSolution {
                point: x,
                iterations: iter,
                residual: norm,
            });
        }
        if iter == MAX_ITERATIONS {
            return Err(KarcherError::NoConvergence {
                iterations: iter,
                residual: norm.to64(),
            });
        }
        x = m.exp(&x, &v);
    }
    unreachable!()
}

/// Weighted Karcher mean with iteration diagnostics.
pub fn karcher_mean_detailed<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    w: &BarycentricWeights<R>,
) -> Result<KarcherSolution<R>, KarcherError> {
    if points.is_empty() || points.len() != w.len() {
        return Err(KarcherError::BadWeights(format!(
            "{} weights for {} points",
            w.len(),
            points.len()
        )));
    }
    for p in points {
        m.check_point(p)?;
    }
    let (_, reach) = enclosing_ball(m, points);
    let rho = reach * R::of(1.0 + 1e-9);
    let rho0 = m.rho0();
    if rho >= rho0 {
        return Err(KarcherError::BallTooLarge {
            rho: rho.to64(),
            rho0: rho0.to64(),
        });
    }
    solve_in_ball(m, points, w, rho)
}

/// Weighted Karcher mean.
pub fn karcher_mean<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    w: &BarycentricWeights<R>,
) -> Result<DVector<R>, KarcherError> {
    karcher_mean_detailed(m, points, w).map(|s| s.point)
}

/// A geodesic simplex: vertex points plus the barycentric map machinery.
#[derive(Debug, Clone)]
pub struct RiemannianSimplex<R: Real> {
    manifold: ModelManifold<R>,
    vertices: Vec<DVector<R>>,
    ref_vertex: usize,
    /// Max distance from the reference vertex to the others.
    ref_radius: R,
    /// Slightly padded open-ball radius containing all vertices.
    enclosing_radius: R,
    /// Longest geodesic edge.
    longest_edge: R,
}

impl<R: Real> RiemannianSimplex<R> {
    pub fn new(
        manifold: ModelManifold<R>,
        vertices: Vec<DVector<R>>,
    ) -> Result<Self, KarcherError> {
        if vertices.is_empty() {
            return Err(KarcherError::Simplex(SimplexError::Empty));
        }
        let n = manifold.dim();
        if vertices.len() > n + 1 {
            return Err(KarcherError::Simplex(SimplexError::TooManyVertices {
                k: vertices.len() - 1,
                n,
            }));
        }
        for v in &vertices {
            manifold.check_point(v)?;
        }
        let (ref_vertex, ref_radius) = enclosing_ball(&manifold, &vertices);
        let enclosing_radius = ref_radius * R::of(1.0 + 1e-9);
        let rho0 = manifold.rho0();
        if enclosing_radius >= rho0 {
            return Err(KarcherError::BallTooLarge {
                rho: enclosing_radius.to64(),
                rho0: rho0.to64(),
            });
        }
        let mut longest_edge = R::zero();
        for i in 0..vertices.len() {
            for j in (i + 1)..vertices.len() {
                longest_edge = longest_edge.max(manifold.dist(&vertices[i], &vertices[j]));
            }
        }
        Ok(Self {
            manifold,
            vertices,
            ref_vertex,
            ref_radius,
            enclosing_radius,
            longest_edge,
        })
    }

    pub fn manifold(&self) -> &ModelManifold<R> {
        &self.manifold
    }

    pub fn vertices(&self) -> &[DVector<R>] {
        &self.vertices
    }

    pub fn k(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ref_vertex(&self) -> usize {
        self.ref_vertex
    }

    pub fn ref_point(&self) -> &DVector<R> {
        &self.vertices[self.ref_vertex]
    }

    /// Max distance from the reference vertex to any other vertex.
    pub fn ref_radius(&self) -> R {
        self.ref_radius
    }

    pub fn enclosing_radius(&self) -> R {
        self.enclosing_radius
    }

    /// Longest geodesic edge length.
    pub fn longest_edge(&self) -> R {
        self.longest_edge
    }

    /// Geodesic edge length matrix, `(k+1) x (k+1)`.
    pub fn edge_lengths(&self) -> DMatrix<R> {
        let kp1 = self.vertices.len();
        DMatrix::from_fn(kp1, kp1, |i, j| {
            if i == j {
                R::zero()
            } else {
                self.manifold.dist(&self.vertices[i], &self.vertices[j])
            }
        })
    }

    /// Sub-simplex on the given vertex indices.
    pub fn face(&self, indices: &[usize]) -> Result<Self, KarcherError> {
        let mut verts = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.vertices.len() {
                return Err(KarcherError::Simplex(SimplexError::BadIndex(i)));
            }
            verts.push(self.vertices[i].clone());
        }
        Self::new(self.manifold.clone(), verts)
    }

    /// The barycentric coordinate map: weights to the Karcher mean of the
    /// vertices.
    pub fn bary_map(&self, w: &BarycentricWeights<R>) -> Result<DVector<R>, KarcherError> {
        self.bary_map_detailed(w).map(|s| s.point)
    }

    pub fn bary_map_detailed(
        &self,
        w: &BarycentricWeights<R>,
    ) -> Result<KarcherSolution<R>, KarcherError> {
        if w.len() != self.vertices.len() {
            return Err(KarcherError::BadWeights(format!(
                "{} weights for {} vertices",
                w.len(),
                self.vertices.len()
            )));
        }
        solve_in_ball(&self.manifold, &self.vertices, w, self.enclosing_radius)
    }

    /// Lift through `log_x` into the frame returned by
    /// [`ModelManifold::tangent_basis`] at `x`.
    pub fn lift(&self, x: &DVector<R>) -> Result<EuclideanSimplex<R>, KarcherError> {
        let frame = self.manifold.tangent_basis(x);
        self.lift_in_frame(x, &frame)
    }

    /// Lift through `log_x`, coordinates taken in the given orthonormal
    /// frame at `x`.
    pub fn lift_in_frame(
        &self,
        x: &DVector<R>,
        frame: &[DVector<R>],
    ) -> Result<EuclideanSimplex<R>, KarcherError> {
        let mut verts = Vec::with_capacity(self.vertices.len());
        for p in &self.vertices {
            let l = self.manifold.log(x, p)?;
            verts.push(self.manifold.frame_coords(x, frame, &l));
        }
        EuclideanSimplex::new(verts).map_err(KarcherError::from)
    }
}

/// Outcome of the sampled non-degeneracy oracle.
#[derive(Debug, Clone)]
pub struct OracleReport<R: Real> {
    /// Weight vectors evaluated (structured probes plus random samples).
    pub samples: usize,
    /// Smallest thickness among all sampled lifts.
    pub min_thickness: R,
    /// Whether the lifted orientation kept a constant sign (full-dimensional
    /// simplices only; vacuously true otherwise).
    pub orientation_consistent: bool,
    /// `true` when any lift was thinner than `1e-9` or the orientation
    /// flipped.
    pub degenerate: bool,
}

/// Brute-force non-degeneracy check: sample the barycentric map, lift at
/// every image point in a transported frame, and watch thickness and
/// orientation.  A clean report is evidence, not proof; a degenerate one is
/// an actual witness.
pub fn nondegeneracy_oracle<R: Real>(
    simplex: &RiemannianSimplex<R>,
    random_samples: usize,
    rng: &mut impl Rng,
) -> Result<OracleReport<R>, KarcherError> {
    let kp1 = simplex.vertices().len();
    let mut probes: Vec<BarycentricWeights<R>> = Vec::new();
    for i in 0..kp1 {
        probes.push(BarycentricWeights::vertex(kp1, i));
    }
    for i in 0..kp1 {
        for j in (i + 1)..kp1 {
            let mut w = vec![R::zero(); kp1];
            w[i] = R::of(0.5);
            w[j] = R::of(0.5);
            probes.push(BarycentricWeights::new(w)?);
        }
    }
    probes.push(BarycentricWeights::uniform(kp1));
    for _ in 0..random_samples {
        probes.push(BarycentricWeights::new(crate::sample::dirichlet(kp1, rng))?);
    }

    let p0 = simplex.ref_point().clone();
    let base_frame = simplex.manifold().tangent_basis(&p0);
    let full_dim = simplex.k() == simplex.manifold().dim();

    let mut min_thickness = R::inf();
    let mut first_sign: Option<bool> = None;
    let mut orientation_consistent = true;
    for w in &probes {
        let x = simplex.bary_map(w)?;
        let mut frame = Vec::with_capacity(base_frame.len());
        for b in &base_frame {
            frame.push(simplex.manifold().transport(&p0, &x, b)?);
        }
        let lifted = simplex.lift_in_frame(&x, &frame)?;
        min_thickness = min_thickness.min(lifted.thickness());
        if full_dim {
            let det = lifted.edge_matrix(0)?.determinant();
            if det != R::zero() {
                let positive = det > R::zero();
                match first_sign {
                    None => first_sign = Some(positive),
                    Some(s) if s != positive => orientation_consistent = false,
                    _ => {}
                }
            }
        }
    }
    let degenerate = min_thickness < R::of(1e-9) || !orientation_consistent;
    Ok(OracleReport {
        samples: probes.len(),
        min_thickness,
        orientation_consistent,
        degenerate,
    })
}

/// Finite-difference differential of the barycentric map against the
/// transported identity.
#[derive(Debug, Clone)]
pub struct DifferentialReport<R: Real> {
    /// Partial derivatives of the map in the transported frame at the image
    /// point; column `j` moves weight from vertex 0 toward vertex `j+1`.
    pub jacobian: DMatrix<R>,
    /// Lifted edge matrix at the reference vertex (the same parameterization
    /// of the Euclidean comparison simplex).
    pub reference_edges: DMatrix<R>,
    /// Smallest singular value of the jacobian; rank deficiency shows up
    /// here.
    pub min_singular: R,
    /// Operator deviation of `jacobian * reference_edges^-1` from the
    /// identity, when the reference chart is square and invertible.
    pub deviation: Option<R>,
    /// Scale-based deviation bound `14 Lambda h^2 / t0`.
    pub bound: R,
}

/// Measure the differential of the barycentric map at interior weights `w`,
/// in the chart anchored at the reference vertex.
pub fn bary_map_differential<R: Real>(
    simplex: &RiemannianSimplex<R>,
    w: &BarycentricWeights<R>,
) -> Result<DifferentialReport<R>, KarcherError> {
    let kp1 = simplex.vertices().len();
    let k = simplex.k();
    if w.len() != kp1 {
        return Err(KarcherError::BadWeights(format!(
            "{} weights for {} vertices",
            w.len(),
            kp1
        )));
    }
    let mut min_w = R::inf();
    for &wi in w.as_slice() {
        min_w = min_w.min(wi);
    }
    if min_w <= R::zero() {
        return Err(KarcherError::BadWeights(
            "differential probe requires interior weights".into(),
        ));
    }
    let m = simplex.manifold();
    let p0 = simplex.vertices()[simplex.ref_vertex()].clone();
    let mut h = R::zero();
    for p in simplex.vertices() {
        h = h.max(m.dist(&p0, p));
    }
    let half_rho0 = m.rho0() * R::of(0.5);
    if h >= half_rho0 {
        return Err(KarcherError::BallTooLarge {
            rho: h.to64(),
            rho0: half_rho0.to64(),
        });
    }

    // Reorder so the chart treats the reference vertex as vertex 0.
    let r = simplex.ref_vertex();
    let mut order: Vec<usize> = vec![r];
    order.extend((0..kp1).filter(|&i| i != r));

    let lifted = simplex.lift(&p0)?;
    let mut reference_edges = DMatrix::zeros(m.dim(), k);
    for (col, &i) in order.iter().skip(1).enumerate() {
        reference_edges.set_column(col, lifted.vertex(i));
    }
    let t0 = lifted.thickness();
    let bound = if t0 > R::zero() {
        R::of(14.0) * m.lambda() * h * h / t0
    } else {
        R::inf()
    };

    let center = simplex.bary_map(w)?;
    let base_frame = m.tangent_basis(&p0);
    let mut frame = Vec::with_capacity(base_frame.len());
    for b in &base_frame {
        frame.push(m.transport(&p0, &center, b)?);
    }

    let step = R::of(1e-3).min(min_w * R::of(0.25));
    let mut jacobian = DMatrix::zeros(m.dim(), k);
    for col in 0..k {
        let target = order[col + 1];
        let probe = |t: R| -> DVector<R> {
            let mut weights = w.as_slice().to_vec();
            weights[r] -= t;
            weights[target] += t;
            let wt = BarycentricWeights::affine(weights).expect("probe preserves the weight sum");
            let y = simplex.bary_map(&wt).expect("probe solve inside the vertex ball");
            let l = m.log(&center, &y).expect("probe image near the center");
            m.frame_coords(&center, &frame, &l)
        };
        jacobian.set_column(col, &fd::central_diff4(probe, step));
    }

    let svd = jacobian.clone().svd(false, false);
    let min_singular = svd.singular_values[svd.singular_values.len() - 1];
    let deviation = if k == m.dim() {
        let ref_svd = reference_edges.clone().svd(true, true);
        let smax = ref_svd.singular_values[0];
        let smin = ref_svd.singular_values[ref_svd.singular_values.len() - 1];
        if smin > smax * R::of(1e-12) {
            let inv = ref_svd
                .pseudo_inverse(smax * R::of(1e-14))
                .expect("pseudo-inverse of a full-rank chart");
            let mut dev = &jacobian * inv;
            for i in 0..k {
                dev[(i, i)] -= R::one();
            }
            Some(dev.svd(false, false).singular_values[0])
        } else {
            None
        }
    } else {
        None
    };

    Ok(DifferentialReport {
        jacobian,
        reference_edges,
        min_singular,
        deviation,
        bound,
    })
}
