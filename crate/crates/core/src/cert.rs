//! Sufficient-condition certificates for simplex non-degeneracy.
//!
//! Every check here is one-sided: `Certified` is a guarantee backed by a
//! curvature-scaled inequality, while `Inconclusive` only means this route
//! could not establish the guarantee.  Degeneracy claims are reserved for
//! the sampling oracle in [`crate::karcher`].

use crate::karcher::RiemannianSimplex;
use crate::manifold::ModelManifold;
use crate::scalar::Real;
use crate::simplex::{gram_from_lengths, EuclideanSimplex};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CertError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("zero vector where a direction was required")]
    ZeroVector,
}

/// Verdict vocabulary: a certificate can vouch for non-degeneracy or decline
/// to, never assert degeneracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    Inconclusive,
}

/// One checked inequality inside a certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypothesis {
    pub description: String,
    pub required: f64,
    pub actual: f64,
    pub pass: bool,
}

/// Outcome of a certificate run: all hypotheses with their margins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub name: String,
    pub hypotheses: Vec<Hypothesis>,
    pub verdict: Verdict,
    /// Per-hypothesis slack, positive exactly when the hypothesis passes.
    pub margins: Vec<f64>,
}

/// Accumulates hypotheses and derives the verdict.
struct ReportBuilder {
    name: &'static str,
    hypotheses: Vec<Hypothesis>,
    margins: Vec<f64>,
}

impl ReportBuilder {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            hypotheses: Vec::new(),
            margins: Vec::new(),
        }
    }

    /// `actual` must exceed `required` (strict).
    fn exceeds(&mut self, description: &str, actual: f64, required: f64) -> &mut Self {
        let pass = actual > required;
        self.hypotheses.push(Hypothesis {
            description: description.to_string(),
            required,
            actual,
            pass,
        });
        self.margins.push(actual - required);
        self
    }

    /// `actual` must reach `required` (non-strict).
    fn at_least(&mut self, description: &str, actual: f64, required: f64) -> &mut Self {
        let pass = actual >= required;
        self.hypotheses.push(Hypothesis {
            description: description.to_string(),
            required,
            actual,
            pass,
        });
        self.margins.push(actual - required);
        self
    }

    /// `actual` must stay below `required` (strict).
    fn below(&mut self, description: &str, actual: f64, required: f64) -> &mut Self {
        let pass = actual < required;
        self.hypotheses.push(Hypothesis {
            description: description.to_string(),
            required,
            actual,
            pass,
        });
        self.margins.push(required - actual);
        self
    }

    /// `actual` must not exceed `required`.
    fn at_most(&mut self, description: &str, actual: f64, required: f64) -> &mut Self {
        let pass = actual <= required;
        self.hypotheses.push(Hypothesis {
            description: description.to_string(),
            required,
            actual,
            pass,
        });
        self.margins.push(required - actual);
        self
    }

    fn fail(&mut self, description: &str) -> &mut Self {
        self.hypotheses.push(Hypothesis {
            description: description.to_string(),
            required: 0.0,
            actual: f64::NAN,
            pass: false,
        });
        self.margins.push(f64::NEG_INFINITY);
        self
    }

    fn finish(self) -> CertificateReport {
        let verdict = if self.hypotheses.iter().all(|h| h.pass) {
            Verdict::Certified
        } else {
            Verdict::Inconclusive
        };
        CertificateReport {
            name: self.name.to_string(),
            hypotheses: self.hypotheses,
            verdict,
            margins: self.margins,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, b| a * b as f64)
}

/// Roundoff floor for dimensionless quality measures (thickness, fatness).
/// An exactly degenerate simplex can surface a spurious quality up to
/// roughly `sqrt(eps) ~ 1e-8` through eigenvalue/singular-value noise in
/// the Gram data, so a certificate only fires above this margin.  On flat
/// manifolds the curvature terms vanish and this floor is the entire
/// threshold.
const QUALITY_FLOOR: f64 = 1e-6;

/// Same idea for the squared normalized volume used by the volume
/// certificate; genuine values sit around `1e-2`, noise around `1e-16`.
const VOLUME_FLOOR: f64 = 1e-12;

/// Thickness of the best vertex lift, or `None` when no vertex lift is
/// computable (possible only at the edge of the torus tie-rejection band).
fn best_vertex_lift<R: Real>(simplex: &RiemannianSimplex<R>) -> Option<(usize, EuclideanSimplex<R>)> {
    let mut best: Option<(usize, EuclideanSimplex<R>)> = None;
    for (i, p) in simplex.vertices().iter().enumerate() {
        if let Ok(lifted) = simplex.lift(p) {
            let better = match &best {
                None => true,
                Some((_, b)) => lifted.thickness() > b.thickness(),
            };
            if better {
                best = Some((i, lifted));
            }
        }
    }
    best
}

/// Certificate: some vertex lift is thick relative to the curvature scale.
/// Checks the containment ball and `t(sigma(p)) > 10 sqrt(Lambda) L`.
pub fn cert_lifted_thickness<R: Real>(simplex: &RiemannianSimplex<R>) -> CertificateReport {
    let mut b = ReportBuilder::new("lifted-thickness");
    let m = simplex.manifold();
    let el = simplex.longest_edge().to64();
    let rho = el * (1.0 + 1e-9);
    let rho0 = m.rho0().to64();
    let lambda = m.lambda().to64();
    b.below("containment ball radius below the barycenter radius", rho, rho0);
    match best_vertex_lift(simplex) {
        Some((_, lifted)) => {
            b.exceeds(
                "best vertex-lift thickness above max(10 sqrt(Lambda) L, roundoff floor)",
                lifted.thickness().to64(),
                (10.0 * lambda.sqrt() * el).max(QUALITY_FLOOR),
            );
        }
        None => {
            b.fail("tangent lift computable at some vertex");
        }
    }
    b.finish()
}

/// Sharper variant of [`cert_lifted_thickness`]: threshold
/// `5 sqrt(Lambda) rho` using the actual vertex ball, valid only when
/// `rho <= rho0 / 2`.
pub fn cert_lifted_thickness_sharp<R: Real>(simplex: &RiemannianSimplex<R>) -> CertificateReport {
    let mut b = ReportBuilder::new("lifted-thickness-sharp");
    let m = simplex.manifold();
    let rho = simplex.enclosing_radius().to64();
    let rho0 = m.rho0().to64();
    let lambda = m.lambda().to64();
    b.at_most("containment ball radius at most rho0 / 2", rho, rho0 / 2.0);
    match best_vertex_lift(simplex) {
        Some((_, lifted)) => {
            b.exceeds(
                "best vertex-lift thickness above max(5 sqrt(Lambda) rho, roundoff floor)",
                lifted.thickness().to64(),
                (5.0 * lambda.sqrt() * rho).max(QUALITY_FLOOR),
            );
        }
        None => {
            b.fail("tangent lift computable at some vertex");
        }
    }
    b.finish()
}

/// Certificate from geodesic edge lengths alone: realize them as a Euclidean
/// simplex and require `t >= 3 sqrt(Lambda) min(L_E, rho)`.
pub fn cert_intrinsic_lengths<R: Real>(simplex: &RiemannianSimplex<R>) -> CertificateReport {
    let mut b = ReportBuilder::new("intrinsic-lengths");
    let m = simplex.manifold();
    let rho = simplex.enclosing_radius().to64();
    let rho0 = m.rho0().to64();
    let lambda = m.lambda().to64();
    b.below("containment ball radius below the barycenter radius", rho, rho0);
    let lengths = simplex.edge_lengths();
    match gram_from_lengths(&lengths) {
        Ok(real) => {
            if real.realizable {
                b.at_least(
                    "edge lengths realizable (smallest Gram eigenvalue)",
                    real.min_eigenvalue.to64(),
                    -1e-10 * real.gram.trace().to64().max(1.0),
                );
                if let Some(sigma_e) = &real.simplex {
                    let le = sigma_e.longest_edge().to64();
                    let t = sigma_e.thickness().to64();
                    b.exceeds("realized thickness above the roundoff floor", t, QUALITY_FLOOR);
                    b.at_least(
                        "realized thickness at least 3 sqrt(Lambda) min(L_E, rho)",
                        t,
                        3.0 * lambda.sqrt() * le.min(rho),
                    );
                } else {
                    b.fail("realized simplex available");
                }
            } else {
                b.fail("edge lengths realizable as a Euclidean simplex");
            }
        }
        Err(e) => {
            b.fail(&format!("edge lengths form a metric ({e})"));
        }
    }
    b.finish()
}

/// Certificate through the volume-based quality measure of the best vertex
/// lift: `fatness > 10 sqrt(Lambda) L / (k-1)!`.
pub fn cert_fatness<R: Real>(simplex: &RiemannianSimplex<R>) -> CertificateReport {
    let mut b = ReportBuilder::new("fatness");
    let m = simplex.manifold();
    let el = simplex.longest_edge().to64();
    let rho = el * (1.0 + 1e-9);
    let rho0 = m.rho0().to64();
    let lambda = m.lambda().to64();
    let k = simplex.k();
    b.below("containment ball radius below the barycenter radius", rho, rho0);
    match best_vertex_lift(simplex) {
        Some((_, lifted)) => {
            let denom = factorial(k.saturating_sub(1));
            b.exceeds(
                "best vertex-lift fatness above max(10 sqrt(Lambda) L / (k-1)!, roundoff floor)",
                lifted.fatness().to64(),
                (10.0 * lambda.sqrt() * el / denom).max(QUALITY_FLOOR),
            );
        }
        None => {
            b.fail("tangent lift computable at some vertex");
        }
    }
    b.finish()
}

/// Certificate comparing the lifted volume at a reference vertex against the
/// ball diameter: `((k-1)! vol / (2D)^k)^2 > 160 k sqrt(Lambda) D`, under a
/// convexity gate `sqrt(Lambda) D < 1/2`.
pub fn cert_toponogov<R: Real>(simplex: &RiemannianSimplex<R>, v_r: usize) -> CertificateReport {
    let mut b = ReportBuilder::new("toponogov-volume");
    let m = simplex.manifold();
    let k = simplex.k();
    let lambda = m.lambda().to64();
    let vr = &simplex.vertices()[v_r];
    let mut d = R::zero();
    for p in simplex.vertices() {
        d = d.max(m.dist(vr, p));
    }
    let d = d.to64();
    b.exceeds("positive ball radius about the reference vertex", d, 0.0);
    b.below("sqrt(Lambda) D below 1/2", lambda.sqrt() * d, 0.5);
    b.below(
        "D below the convexity radius",
        d,
        m.convexity_radius().to64(),
    );
    b.below("D below the injectivity radius", d, m.injectivity_radius().to64());
    if d > 0.0 {
        match simplex.lift(vr) {
            Ok(lifted) => {
                let vol = lifted.volume().to64();
                let lhs = (factorial(k.saturating_sub(1)) * vol / (2.0 * d).powi(k as i32)).powi(2);
                b.exceeds(
                    "squared normalized volume above max(160 k sqrt(Lambda) D, roundoff floor)",
                    lhs,
                    (160.0 * k as f64 * lambda.sqrt() * d).max(VOLUME_FLOOR),
                );
            }
            Err(_) => {
                b.fail("tangent lift computable at the reference vertex");
            }
        }
    }
    b.finish()
}

/// Run every certificate; the volume criterion uses the simplex's reference
/// vertex.
pub fn certify_all<R: Real>(simplex: &RiemannianSimplex<R>) -> Vec<CertificateReport> {
    vec![
        cert_lifted_thickness(simplex),
        cert_lifted_thickness_sharp(simplex),
        cert_intrinsic_lengths(simplex),
        cert_fatness(simplex),
        cert_toponogov(simplex, simplex.ref_vertex()),
    ]
}

/// A geodesic hinge: two edges of lengths `a`, `b` meeting at angle `gamma`,
/// inside a region of diameter `d_max`.
#[derive(Debug, Clone, Copy)]
pub struct Hinge<R: Real> {
    pub a: R,
    pub b: R,
    pub gamma: R,
    pub d_max: R,
}

/// Length of the side closing a hinge, by the exact constant-curvature
/// cosine rule of the given model space.
pub fn close_hinge<R: Real>(m: &ModelManifold<R>, a: R, b: R, gamma: R) -> R {
    let cg = gamma.cos();
    match m {
        ModelManifold::Sphere { radius, .. } => {
            let (an, bn) = (a / *radius, b / *radius);
            let cc = an.cos() * bn.cos() + an.sin() * bn.sin() * cg;
            *radius * cc.min(R::one()).max(-R::one()).acos()
        }
        ModelManifold::Hyperbolic { scale, .. } => {
            let (an, bn) = (a / *scale, b / *scale);
            let ch = an.cosh() * bn.cosh() - an.sinh() * bn.sinh() * cg;
            *scale * ch.max(R::one()).acosh()
        }
        _ => (a * a + b * b - R::of(2.0) * a * b * cg).max(R::zero()).sqrt(),
    }
}

/// Measured deviations between a closed geodesic hinge and its Euclidean
/// counterpart, next to the curvature-scaled budgets they must respect.
#[derive(Debug, Clone)]
pub struct BudgetReport<R: Real> {
    /// Side closing the hinge in the model space.
    pub closed: R,
    /// Side closing the same hinge in the plane.
    pub euclid_closed: R,
    /// Squared-length deviation `closed^2 - euclid_closed^2`.
    pub e_prime: R,
    pub e_prime_bound: R,
    pub e_prime_ok: bool,
    /// Cosine of the hinge angle recovered from the three exact side
    /// lengths by the Euclidean law of cosines.
    pub cos_euclidean: R,
    /// Deviation `|cos gamma - cos_euclidean|`.
    pub cos_gap: R,
    pub cos_gap_bound: R,
    /// Whether the length floor for the cosine budget held; the budget is
    /// only asserted when it did.
    pub cos_applicable: bool,
    pub cos_ok: bool,
}

/// Close a hinge both ways and check the deviations against the polynomial
/// budgets `|E'| <= 5 d_max^4 / kappa_scale^2` and
/// `|cos gamma - cos gamma^E| <= 80 d_max / kappa_scale`.
pub fn toponogov_error_budget<R: Real>(
    m: &ModelManifold<R>,
    hinge: Hinge<R>,
) -> Result<BudgetReport<R>, CertError> {
    let Hinge { a, b, gamma, d_max } = hinge;
    if !(a > R::zero() && b > R::zero() && d_max > R::zero()) {
        return Err(CertError::HypothesisViolated(
            "edge lengths and d_max must be positive".into(),
        ));
    }
    let half = d_max * R::of(0.5);
    if a > half || b > half {
        return Err(CertError::HypothesisViolated(format!(
            "edges ({}, {}) exceed d_max/2 = {}",
            a.to64(),
            b.to64(),
            half.to64()
        )));
    }
    // Normalizing scale: the curvature radius, infinite in the flat kinds.
    let flat = m.lambda() == R::zero();
    let scale = m.ambient_velocity_scale();
    let dn = if flat { R::zero() } else { d_max / scale };
    if dn >= R::of(0.5) {
        return Err(CertError::HypothesisViolated(format!(
            "normalized diameter {} not below 1/2",
            dn.to64()
        )));
    }

    let closed = close_hinge(m, a, b, gamma);
    let cg = gamma.cos();
    let ce2 = a * a + b * b - R::of(2.0) * a * b * cg;
    let euclid_closed = ce2.max(R::zero()).sqrt();
    let e_prime = closed * closed - ce2;
    let e_prime_bound = if flat {
        R::zero()
    } else {
        R::of(5.0) * dn * dn * dn * dn * scale * scale
    };
    let slack = R::of(1e-14) * (a * a + b * b);
    let e_prime_ok = e_prime.abs() <= e_prime_bound + slack;

    // The angle comparison carries a stricter length floor; when a side
    // dips below it the cosine budget is reported but not asserted.
    let floor = if flat { R::zero() } else { (dn * dn * dn).sqrt() * scale };
    let cos_applicable = a > floor && b > floor && closed > floor;
    let cos_euclidean = (a * a + b * b - closed * closed) / (R::of(2.0) * a * b);
    let cos_gap = (cg - cos_euclidean).abs();
    let cos_gap_bound = if flat { R::zero() } else { R::of(80.0) * dn };
    let cos_ok = !cos_applicable || cos_gap <= cos_gap_bound + R::of(1e-14);

    Ok(BudgetReport {
        closed,
        euclid_closed,
        e_prime,
        e_prime_bound,
        e_prime_ok,
        cos_euclidean,
        cos_gap,
        cos_gap_bound,
        cos_applicable,
        cos_ok,
    })
}

/// Cosine matrix of a family of nonzero vectors, with its determinant; the
/// determinant vanishes exactly on linearly dependent families.
#[derive(Debug, Clone)]
pub struct ReducedGram<R: Real> {
    pub matrix: DMatrix<R>,
    pub determinant: R,
}

pub fn reduced_gram<R: Real>(vectors: &[DVector<R>]) -> Result<ReducedGram<R>, CertError> {
    let n = vectors.len();
    let mut norms = Vec::with_capacity(n);
    for v in vectors {
        let norm = v.norm();
        if norm <= R::zero() {
            return Err(CertError::ZeroVector);
        }
        norms.push(norm);
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| vectors[i].dot(&vectors[j]) / (norms[i] * norms[j]));
    let determinant = matrix.clone().lu().determinant();
    if n > 0 && vectors[0].len() == n {
        // Square families: the cosine determinant equals the squared
        // determinant of the normalized column matrix.
        let mut cols = DMatrix::zeros(n, n);
        for (j, v) in vectors.iter().enumerate() {
            cols.set_column(j, &(v / norms[j]));
        }
        let alt = cols.determinant();
        debug_assert!(
            (determinant - alt * alt).abs()
                <= R::of(1e-8) * (R::one() + determinant.abs()),
            "cosine determinant inconsistent with its factorization"
        );
    }
    Ok(ReducedGram {
        matrix,
        determinant,
    })
}

/// Cosine matrix of the tangent directions from `x` toward every vertex
/// except `drop`, in the chart frame at `x`.
pub fn reduced_gram_dropping<R: Real>(
    simplex: &RiemannianSimplex<R>,
    x: &DVector<R>,
    drop: usize,
) -> Result<ReducedGram<R>, CertError> {
    let m = simplex.manifold();
    let frame = m.tangent_basis(x);
    let mut dirs = Vec::new();
    for (i, p) in simplex.vertices().iter().enumerate() {
        if i == drop {
            continue;
        }
        let l = m
            .log(x, p)
            .map_err(|_| CertError::HypothesisViolated("vertex beyond the injectivity radius".into()))?;
        dirs.push(m.frame_coords(x, &frame, &l));
    }
    reduced_gram(&dirs)
}
