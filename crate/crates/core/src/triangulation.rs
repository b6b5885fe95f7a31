//! Triangulation criteria: the sampling-scale formulas, the per-vertex
//! star checks with a Monte Carlo covering probe, the piecewise flat
//! metric realization, and the metric-distortion measurement for the
//! barycentric coordinate map.

use crate::complex::{full_star_check, AbstractComplex, CheckMode, ComplexError, LiftedStar};
use crate::karcher::{BarycentricWeights, KarcherError, RiemannianSimplex};
use crate::manifold::{ManifoldError, ModelManifold};
use crate::sample;
use crate::scalar::Real;
use crate::simplex::{gram_from_lengths, EuclideanSimplex, SimplexError};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, thiserror::Error)]
pub enum TriangulationError {
    #[error("edge lengths of simplices {0:?} are not realizable in Euclidean space")]
    UnrealizableSimplex(Vec<Vec<usize>>),
    #[error("complex is not a closed manifold complex: {0}")]
    NotManifoldComplex(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Karcher(#[from] KarcherError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Which sampling-scale formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleVariant {
    /// `min{iota/4, sqrt(n) t0 / (6 sqrt(Lambda))}` — the primary
    /// vertex-ball scale for the two triangulation conditions.
    Main,
    /// `min{iota/4, t0 / (6 sqrt(Lambda))}` — the scale under which the
    /// geodesic edge lengths define a piecewise flat metric.
    Pwf,
    /// `min{iota/4, t0 / (8 sqrt(Lambda))}` — the scale of the criteria
    /// stated via intrinsic edge lengths.
    Intrinsic,
}

/// Sampling scale for the given quality parameter; infinite curvature term
/// when the space is flat.
pub fn scale_h<R: Real>(m: &ModelManifold<R>, t0: R, variant: ScaleVariant) -> R {
    assert!(t0 > R::zero(), "quality parameter must be positive");
    let lambda = m.lambda();
    let iota_term = m.injectivity_radius() / R::of(4.0);
    if lambda <= R::zero() {
        return iota_term;
    }
    let curv_term = match variant {
        ScaleVariant::Main => R::of((m.dim() as f64).sqrt()) * t0 / (R::of(6.0) * lambda.sqrt()),
        ScaleVariant::Pwf => t0 / (R::of(6.0) * lambda.sqrt()),
        ScaleVariant::Intrinsic => t0 / (R::of(8.0) * lambda.sqrt()),
    };
    iota_term.min(curv_term)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VertexStarReport {
    pub vertex: usize,
    /// Star vertices all strictly within `h` of the center.
    pub star_in_ball: bool,
    pub max_vertex_distance: f64,
    /// Lifted star is embedded, consistently oriented, center interior.
    pub star_full: bool,
    pub min_lift_thickness: f64,
    pub thickness_ok: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CoverReport {
    pub method: String,
    pub samples: usize,
    /// Largest observed distance from a random manifold point to the
    /// nearest mesh vertex.
    pub sampled_max_gap: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TriangulationReport {
    pub variant: ScaleVariant,
    pub h: f64,
    pub t0: f64,
    pub vertices: Vec<VertexStarReport>,
    pub cover: CoverReport,
    /// Stars inside their `h`-balls and the balls cover the manifold.
    pub condition1: bool,
    /// Every lifted star is full with simplex thickness at least `t0`.
    pub condition2: bool,
    pub verdict: bool,
    pub failed_conditions: Vec<u8>,
}

/// Evaluate the triangulation criteria on a vertex set with its complex.
/// The covering half of condition 1 is verified by Monte Carlo only, as
/// recorded in the cover report's method label.
pub fn check_triangulation<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    complex: &AbstractComplex,
    t0: f64,
    variant: ScaleVariant,
    cover_samples: usize,
    seed: u64,
) -> Result<TriangulationReport, TriangulationError> {
    let combinatorics = crate::complex::is_manifold_complex(complex);
    if !(combinatorics.pure && combinatorics.closed_pseudomanifold) {
        return Err(TriangulationError::NotManifoldComplex(format!(
            "pure: {}, closed pseudomanifold: {}",
            combinatorics.pure, combinatorics.closed_pseudomanifold
        )));
    }
    for p in points {
        m.check_point(p)?;
    }
    if complex.dim() != m.dim() {
        return Err(TriangulationError::BadInput(format!(
            "complex dimension {} does not match manifold dimension {}",
            complex.dim(),
            m.dim()
        )));
    }

    let h = scale_h(m, R::of(t0), variant).to64();
    let mode = if m.dim() <= 3 {
        CheckMode::Exact
    } else {
        CheckMode::Sampled
    };

    let mut vertices = Vec::new();
    for &v in &complex.used_vertices() {
        let star = complex.star(v)?;
        let mut max_d = 0f64;
        for q in star.used_vertices() {
            max_d = max_d.max(m.dist(&points[v], &points[q]).to64());
        }
        let ls = LiftedStar::from_points(m, points, complex, v)?;
        let rep = full_star_check(&ls, t0, mode, seed ^ (v as u64))?;
        vertices.push(VertexStarReport {
            vertex: v,
            star_in_ball: max_d < h,
            max_vertex_distance: max_d,
            star_full: rep.embedded && rep.orientation_consistent && rep.center_interior,
            min_lift_thickness: rep.min_thickness,
            thickness_ok: rep.thickness_ok,
        });
    }

    let mut rng = sample::rng_from_seed(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let mut max_gap = 0f64;
    let early = h / 4.0;
    for _ in 0..cover_samples {
        let q = m.random_point(&mut rng);
        let mut best = f64::INFINITY;
        for p in points {
            best = best.min(m.dist(&q, p).to64());
            if best < early {
                break;
            }
        }
        max_gap = max_gap.max(best);
    }
    let cover = CoverReport {
        method: "sampled".into(),
        samples: cover_samples,
        sampled_max_gap: max_gap,
        covered: max_gap < h,
    };

    let condition1 = cover.covered && vertices.iter().all(|v| v.star_in_ball);
    let condition2 = vertices.iter().all(|v| v.star_full && v.thickness_ok);
    let mut failed_conditions = Vec::new();
    if !condition1 {
        failed_conditions.push(1);
    }
    if !condition2 {
        failed_conditions.push(2);
    }
    Ok(TriangulationReport {
        variant,
        h,
        t0,
        vertices,
        cover,
        condition1,
        condition2,
        verdict: condition1 && condition2,
        failed_conditions,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PwfReport {
    /// Scale hypothesis: every edge shorter than the pwf-variant `h`.
    pub scale_hypothesis_met: bool,
    pub max_edge: f64,
    pub h: f64,
    pub all_realizable: bool,
    pub min_pwf_thickness: f64,
    /// `3 t0 / (4 sqrt(n))` — guaranteed once the scale hypothesis holds.
    pub threshold: f64,
    pub threshold_ok: bool,
}

/// Realize every top simplex from its geodesic edge lengths and measure the
/// piecewise flat quality.
pub fn pwf_metric<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    complex: &AbstractComplex,
    t0: f64,
) -> Result<PwfReport, TriangulationError> {
    let n = complex.dim();
    let h = scale_h(m, R::of(t0), ScaleVariant::Pwf).to64();
    let mut max_edge = 0f64;
    for e in complex.simplices_of_dim(1) {
        max_edge = max_edge.max(m.dist(&points[e[0]], &points[e[1]]).to64());
    }
    let scale_hypothesis_met = max_edge < h;

    let mut min_thickness = f64::INFINITY;
    let mut offenders = Vec::new();
    for s in complex.simplices_of_dim(n) {
        let k = s.len();
        let mut lengths = DMatrix::<R>::zeros(k, k);
        for i in 0..k {
            for j in (i + 1)..k {
                let d = m.dist(&points[s[i]], &points[s[j]]);
                lengths[(i, j)] = d;
                lengths[(j, i)] = d;
            }
        }
        let real = gram_from_lengths(&lengths)?;
        match (real.realizable, real.simplex) {
            (true, Some(flat)) => {
                min_thickness = min_thickness.min(flat.thickness().to64());
            }
            _ => offenders.push(s.clone()),
        }
    }
    if !offenders.is_empty() {
        return Err(TriangulationError::UnrealizableSimplex(offenders));
    }
    let threshold = 3.0 * t0 / (4.0 * (n as f64).sqrt());
    Ok(PwfReport {
        scale_hypothesis_met,
        max_edge,
        h,
        all_realizable: true,
        min_pwf_thickness: min_thickness,
        threshold,
        threshold_ok: min_thickness > threshold,
    })
}

/// One measured pair for the distortion scatter.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DistortionPair {
    pub simplex: usize,
    /// Distance inside the flat realized simplex.
    pub d_flat: f64,
    /// Geodesic distance between the barycentric images.
    pub d_manifold: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DistortionReport {
    /// `50 Lambda h^2 / t0^2` with the pwf-variant scale.
    pub bound: f64,
    pub measured_max_ratio: f64,
    pub measured_max_abs: f64,
    pub pairs: usize,
    pub skipped: usize,
    pub within_bound: bool,
    pub rows: Vec<DistortionPair>,
}

/// Compare the piecewise flat metric with geodesic distances between
/// barycentric images over random same-simplex pairs.  Pairs closer than
/// the degeneracy guard in the flat metric are skipped.
pub fn distortion_report<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    complex: &AbstractComplex,
    t0: f64,
    pair_samples: usize,
    seed: u64,
) -> Result<DistortionReport, TriangulationError> {
    let n = complex.dim();
    let h = scale_h(m, R::of(t0), ScaleVariant::Pwf).to64();
    let bound = 50.0 * m.lambda().to64() * h * h / (t0 * t0);

    // Realize each top simplex once: flat coordinates plus the Riemannian
    // simplex driving the barycentric map.
    let mut flats: Vec<EuclideanSimplex<R>> = Vec::new();
    let mut riems: Vec<RiemannianSimplex<R>> = Vec::new();
    for s in complex.simplices_of_dim(n) {
        let k = s.len();
        let mut lengths = DMatrix::<R>::zeros(k, k);
        for i in 0..k {
            for j in (i + 1)..k {
                let d = m.dist(&points[s[i]], &points[s[j]]);
                lengths[(i, j)] = d;
                lengths[(j, i)] = d;
            }
        }
        let real = gram_from_lengths(&lengths)?;
        let flat = match (real.realizable, real.simplex) {
            (true, Some(f)) => f,
            _ => return Err(TriangulationError::UnrealizableSimplex(vec![s.clone()])),
        };
        flats.push(flat);
        riems.push(RiemannianSimplex::new(
            m.clone(),
            s.iter().map(|&v| points[v].clone()).collect(),
        )?);
    }
    if flats.is_empty() {
        return Err(TriangulationError::BadInput("complex has no top simplices".into()));
    }

    let mut rng = sample::rng_from_seed(seed);
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    let mut max_ratio = 0f64;
    let mut max_abs = 0f64;
    for trial in 0..pair_samples {
        let idx = trial % flats.len();
        let flat = &flats[idx];
        let riem = &riems[idx];
        let k = flat.k();
        let wa = crate::sample::dirichlet::<R>(k + 1, &mut rng);
        let wb = crate::sample::dirichlet::<R>(k + 1, &mut rng);
        let xa = crate::simplex::barycentric_point(flat, &wa);
        let xb = crate::simplex::barycentric_point(flat, &wb);
        let d_flat = (&xa - &xb).norm().to64();
        if d_flat < 1e-9 {
            skipped += 1;
            continue;
        }
        let ya = riem.bary_map(&BarycentricWeights::new(wa.clone())?)?;
        let yb = riem.bary_map(&BarycentricWeights::new(wb.clone())?)?;
        let d_m = m.dist(&ya, &yb).to64();
        let abs = (d_m - d_flat).abs();
        let ratio = abs / d_flat;
        max_ratio = max_ratio.max(ratio);
        max_abs = max_abs.max(abs);
        rows.push(DistortionPair {
            simplex: idx,
            d_flat,
            d_manifold: d_m,
            ratio,
        });
    }
    Ok(DistortionReport {
        bound,
        measured_max_ratio: max_ratio,
        measured_max_abs: max_abs,
        pairs: rows.len(),
        skipped,
        within_bound: max_ratio <= bound + 1e-9,
        rows,
    })
}

/// Empirical injectivity probe: sample well-interior barycentric points in
/// every top simplex and return the smallest geodesic distance between
/// images coming from distinct simplices.  A positive value is consistent
/// with the barycentric maps gluing into a homeomorphism.
pub fn injectivity_probe<R: Real>(
    m: &ModelManifold<R>,
    points: &[DVector<R>],
    complex: &AbstractComplex,
    samples: usize,
    seed: u64,
) -> Result<f64, TriangulationError> {
    let n = complex.dim();
    let mut riems = Vec::new();
    for s in complex.simplices_of_dim(n) {
        riems.push((
            s.clone(),
            RiemannianSimplex::new(m.clone(), s.iter().map(|&v| points[v].clone()).collect())?,
        ));
    }
    let mut rng = sample::rng_from_seed(seed);
    let mut images: Vec<(usize, DVector<R>)> = Vec::new();
    for trial in 0..samples {
        let idx = trial % riems.len();
        let (_, riem) = &riems[idx];
        let k = riem.k();
        // Blend toward the barycenter so the weights stay strictly
        // interior and images from different simplices cannot touch on a
        // shared face.
        let raw = crate::sample::dirichlet::<R>(k + 1, &mut rng);
        let uniform = R::one() / R::of((k + 1) as f64);
        let w: Vec<R> = raw
            .iter()
            .map(|&x| x * R::of(0.7) + uniform * R::of(0.3))
            .collect();
        let y = riem.bary_map(&BarycentricWeights::new(w)?)?;
        images.push((idx, y));
    }
    let mut min_gap = f64::INFINITY;
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            if images[i].0 != images[j].0 {
                min_gap = min_gap.min(m.dist(&images[i].1, &images[j].1).to64());
            }
        }
    }
    Ok(min_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{generate_grid_torus, generate_icosphere};
    use approx::assert_relative_eq;

    #[test]
    fn scale_values_match_closed_forms() {
        let sphere = ModelManifold::sphere(2, 1.0);
        let h = scale_h(&sphere, 0.5, ScaleVariant::Main);
        assert_relative_eq!(h, 2f64.sqrt() * 0.5 / 6.0, max_relative = 1e-12);
        assert!((h - 0.11785).abs() < 1e-5);
        let hp = scale_h(&sphere, 0.5, ScaleVariant::Pwf);
        assert_relative_eq!(hp, 0.5 / 6.0, max_relative = 1e-12);
        let hi = scale_h(&sphere, 0.5, ScaleVariant::Intrinsic);
        assert_relative_eq!(hi, 0.5 / 8.0, max_relative = 1e-12);
        // Flat spaces: the curvature term is infinite for every variant.
        let torus = ModelManifold::flat_torus(vec![1.0, 1.0]);
        for v in [ScaleVariant::Main, ScaleVariant::Pwf, ScaleVariant::Intrinsic] {
            assert_relative_eq!(scale_h(&torus, 0.25, v), 0.125, max_relative = 1e-12);
        }
        // Tiny quality on the sphere: iota term takes over.
        assert_relative_eq!(
            scale_h(&sphere, 10.0, ScaleVariant::Main),
            std::f64::consts::FRAC_PI_4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn scale_monotone_in_quality_and_curvature() {
        let qualities = [0.05, 0.1, 0.2, 0.4, 0.8];
        for variant in [ScaleVariant::Main, ScaleVariant::Pwf, ScaleVariant::Intrinsic] {
            for radius in [0.5, 1.0, 2.0] {
                let m = ModelManifold::sphere(2, radius);
                let mut prev = 0.0;
                for &t0 in &qualities {
                    let h = scale_h(&m, t0, variant);
                    assert!(h >= prev, "h must grow with t0");
                    prev = h;
                }
            }
            // Lambda grows as the radius shrinks; h must not grow.
            let mut prev = f64::INFINITY;
            for radius in [2.0f64, 1.0, 0.5, 0.25] {
                let h = scale_h(&ModelManifold::sphere(2, radius), 0.3, variant)
                    / radius; // compare in units of the radius
                assert!(h <= prev + 1e-15);
                prev = h;
            }
        }
    }

    #[test]
    fn grid_torus_12_passes() {
        let mesh = generate_grid_torus::<f64>(12, (1.0, 1.0)).unwrap();
        let rep = check_triangulation(
            &mesh.manifold,
            &mesh.points,
            &mesh.complex,
            0.25,
            ScaleVariant::Main,
            2000,
            7,
        )
        .unwrap();
        assert!(rep.condition1, "max gap {}", rep.cover.sampled_max_gap);
        assert!(rep.condition2);
        assert!(rep.verdict);
        assert!(rep.failed_conditions.is_empty());
        assert_relative_eq!(rep.h, 0.125, max_relative = 1e-12);
        for v in &rep.vertices {
            assert_relative_eq!(v.min_lift_thickness, 0.25, epsilon = 1e-12);
            assert!(v.max_vertex_distance < 0.125);
        }
    }

    #[test]
    fn coarse_icosahedron_fails_the_ball_condition() {
        let mesh = generate_icosphere::<f64>(0, 1.0).unwrap();
        let rep = check_triangulation(
            &mesh.manifold,
            &mesh.points,
            &mesh.complex,
            0.4,
            ScaleVariant::Main,
            500,
            7,
        )
        .unwrap();
        assert!(!rep.verdict);
        assert!(rep.failed_conditions.contains(&1));
        // Edge 1.107 versus h ~ 0.094.
        assert!(rep.vertices.iter().all(|v| !v.star_in_ball));
    }

    #[test]
    fn quality_above_lift_thickness_fails_condition_two() {
        let mesh = generate_grid_torus::<f64>(12, (1.0, 1.0)).unwrap();
        let rep = check_triangulation(
            &mesh.manifold,
            &mesh.points,
            &mesh.complex,
            0.3,
            ScaleVariant::Main,
            500,
            11,
        )
        .unwrap();
        assert!(rep.condition1, "flat scale ignores t0");
        assert!(!rep.condition2, "0.25-thick lifts cannot reach 0.3");
        assert_eq!(rep.failed_conditions, vec![2]);
    }

    #[test]
    fn torus_pwf_matches_planar_values() {
        let mesh = generate_grid_torus::<f64>(12, (1.0, 1.0)).unwrap();
        let rep = pwf_metric(&mesh.manifold, &mesh.points, &mesh.complex, 0.25).unwrap();
        assert!(rep.scale_hypothesis_met);
        assert!(rep.all_realizable);
        assert_relative_eq!(rep.min_pwf_thickness, 0.25, epsilon = 1e-12);
        assert_relative_eq!(rep.threshold, 3.0 * 0.25 / (4.0 * 2f64.sqrt()), max_relative = 1e-12);
        assert!(rep.threshold_ok);
    }

    #[test]
    fn icosphere_pwf_is_healthy_at_fine_scale() {
        let mesh = generate_icosphere::<f64>(2, 1.0).unwrap();
        let rep = pwf_metric(&mesh.manifold, &mesh.points, &mesh.complex, 0.4).unwrap();
        assert!(rep.all_realizable);
        // The worst simplices sit at the five-valent corners: their spread
        // makes an isoceles triangle with thickness near 1/(4 tan 36°).
        assert!(rep.min_pwf_thickness > 0.34, "{}", rep.min_pwf_thickness);
        assert!(rep.min_pwf_thickness < 0.433);
        assert!(rep.min_pwf_thickness > rep.threshold);
        // Edges at level 2 are still above the pwf scale for t0 = 0.4.
        assert!(!rep.scale_hypothesis_met);
    }

    #[test]
    fn collinear_torus_triangle_realizes_flat() {
        // Three collinear points: realizable with zero thickness, flagged
        // through the threshold rather than an error.
        let m = ModelManifold::flat_torus(vec![1.0, 1.0]);
        let pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![0.1, 0.0]),
            DVector::from_vec(vec![0.2, 0.0]),
        ];
        let c = AbstractComplex::new(3, &[vec![0, 1, 2]]).unwrap();
        let rep = pwf_metric(&m, &pts, &c, 0.25).unwrap();
        assert!(rep.min_pwf_thickness.abs() < 1e-7);
        assert!(!rep.threshold_ok);
    }

    #[test]
    fn metric_violation_is_unrealizable() {
        // Edge lengths that break the triangle inequality severely cannot
        // come from a manifold; feed them through the Gram path directly.
        let mut lengths = DMatrix::<f64>::zeros(3, 3);
        for (i, j, v) in [(0usize, 1usize, 1.0f64), (0, 2, 0.1), (1, 2, 0.1)] {
            lengths[(i, j)] = v;
            lengths[(j, i)] = v;
        }
        let real = gram_from_lengths(&lengths).unwrap();
        assert!(!real.realizable);
    }

    #[test]
    fn torus_distortion_is_zero() {
        let mesh = generate_grid_torus::<f64>(6, (1.0, 1.0)).unwrap();
        let rep = distortion_report(&mesh.manifold, &mesh.points, &mesh.complex, 0.25, 500, 3)
            .unwrap();
        assert_eq!(rep.bound, 0.0);
        assert!(rep.measured_max_abs <= 1e-9, "{}", rep.measured_max_abs);
        assert!(rep.within_bound);
        assert!(rep.pairs > 400);
    }

    #[test]
    fn sphere_distortion_stays_under_its_bound() {
        let mesh = generate_icosphere::<f64>(2, 1.0).unwrap();
        let rep = distortion_report(&mesh.manifold, &mesh.points, &mesh.complex, 0.4, 400, 5)
            .unwrap();
        assert!(rep.within_bound, "{rep:?}");
        assert!(rep.measured_max_ratio > 0.0, "curved space must distort");
        assert!(rep.measured_max_ratio < rep.bound);
    }

    #[test]
    fn injectivity_probe_on_passing_instance() {
        let mesh = generate_grid_torus::<f64>(6, (1.0, 1.0)).unwrap();
        let gap = injectivity_probe(&mesh.manifold, &mesh.points, &mesh.complex, 400, 13).unwrap();
        assert!(gap > 1e-4, "interior images must stay separated, got {gap}");
    }

    #[test]
    fn pwf_edges_match_log_norms() {
        let mesh = generate_icosphere::<f64>(1, 1.0).unwrap();
        let m = &mesh.manifold;
        for e in mesh.complex.simplices_of_dim(1) {
            let d = m.dist(&mesh.points[e[0]], &mesh.points[e[1]]);
            let l = m.log(&mesh.points[e[0]], &mesh.points[e[1]]).unwrap();
            assert_relative_eq!(d, m.tangent_norm(&mesh.points[e[0]], &l), epsilon = 1e-12);
        }
    }
}
