//! One function per subcommand, each producing a serializable report plus
//! the overall pass/fail bit that decides the process exit code.
//!
//! Everything here is deterministic given the seed: randomness comes only
//! from seeded generators and every collection serializes in a fixed order.

use nalgebra::DVector;
use riemsimplex::cert::{certify_all, CertificateReport, Verdict};
use riemsimplex::comparison::{manifold_label, run_all_batteries, BatteryReport};
use riemsimplex::complex::{
    generate_grid_torus, generate_icosphere, generate_octahedron, generate_perturbed,
    AbstractComplex, GeneratedMesh,
};
use riemsimplex::io::{parse_mesh, MeshDocument};
use riemsimplex::karcher::{nondegeneracy_oracle, BarycentricWeights, RiemannianSimplex};
use riemsimplex::manifold::ModelManifold;
use riemsimplex::sample::{dirichlet, rng_from_seed};
use riemsimplex::triangulation::{
    check_triangulation, distortion_report, pwf_metric, DistortionReport, PwfReport, ScaleVariant,
    TriangulationReport,
};
use serde::Serialize;

/// Anything that makes the request unserviceable before any verdict is
/// reached: unreadable/invalid mesh, bad generator parameters, unusable
/// flag combination.  Maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input<E: std::fmt::Display>(e: E) -> InputError {
    InputError(e.to_string())
}

pub struct LoadedMesh {
    pub doc: MeshDocument,
    pub manifold: ModelManifold<f64>,
    pub points: Vec<DVector<f64>>,
    pub complex: AbstractComplex,
}

pub fn load_mesh(text: &str) -> Result<LoadedMesh, InputError> {
    let doc = parse_mesh(text).map_err(input)?;
    let manifold = doc.manifold();
    let points = doc.points();
    let complex = doc.complex().map_err(input)?;
    Ok(LoadedMesh {
        doc,
        manifold,
        points,
        complex,
    })
}

fn top_simplices(lm: &LoadedMesh) -> Vec<Vec<usize>> {
    lm.complex
        .simplices_of_dim(lm.complex.dim())
        .cloned()
        .collect()
}

fn simplex_points(lm: &LoadedMesh, s: &[usize]) -> Vec<DVector<f64>> {
    s.iter().map(|&v| lm.points[v].clone()).collect()
}

/// Scientific notation with 17 significant digits, the same convention the
/// JSON writer uses, so CSV artifacts round-trip doubles too.
pub fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::from("nan")
    }
}

// ---------------------------------------------------------------------------
// certify

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub samples: usize,
    pub min_thickness: f64,
    pub orientation_consistent: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplexCertification {
    pub simplex: Vec<usize>,
    pub certificates: Vec<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub construction_error: Option<String>,
    pub any_certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub manifold: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_name: Option<String>,
    pub seed: u64,
    pub simplices: Vec<SimplexCertification>,
    pub all_certified: bool,
}

/// Run every certificate on every top-dimensional simplex.  A simplex whose
/// enclosing ball already violates the Karcher ball gate is reported with a
/// construction error and counts as not certified.  With `oracle_samples >
/// 0` a sampling non-degeneracy oracle cross-checks each constructible
/// simplex.
pub fn certify_mesh(
    mesh_text: &str,
    oracle_samples: usize,
    seed: u64,
) -> Result<CertifyReport, InputError> {
    let lm = load_mesh(mesh_text)?;
    let mut rows = Vec::new();
    let mut all_certified = true;
    for (i, s) in top_simplices(&lm).into_iter().enumerate() {
        match RiemannianSimplex::new(lm.manifold.clone(), simplex_points(&lm, &s)) {
            Ok(rs) => {
                let certificates = certify_all(&rs);
                let any = certificates
                    .iter()
                    .any(|c| matches!(c.verdict, Verdict::Certified));
                let oracle = if oracle_samples > 0 {
                    let mut rng =
                        rng_from_seed(seed ^ (i as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
                    nondegeneracy_oracle(&rs, oracle_samples, &mut rng)
                        .ok()
                        .map(|o| OracleSummary {
                            samples: o.samples,
                            min_thickness: o.min_thickness,
                            orientation_consistent: o.orientation_consistent,
                            degenerate: o.degenerate,
                        })
                } else {
                    None
                };
                all_certified &= any;
                rows.push(SimplexCertification {
                    simplex: s,
                    certificates,
                    oracle,
                    construction_error: None,
                    any_certified: any,
                });
            }
            Err(e) => {
                all_certified = false;
                rows.push(SimplexCertification {
                    simplex: s,
                    certificates: Vec::new(),
                    oracle: None,
                    construction_error: Some(e.to_string()),
                    any_certified: false,
                });
            }
        }
    }
    let mesh_name = lm.doc.metadata.as_ref().and_then(|m| m.name.clone());
    Ok(CertifyReport {
        manifold: manifold_label(&lm.manifold),
        mesh_name,
        seed,
        simplices: rows,
        all_certified,
    })
}

// ---------------------------------------------------------------------------
// karcher

#[derive(Debug, Clone, Serialize)]
pub struct KarcherRow {
    pub simplex: Vec<usize>,
    pub evaluations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KarcherReport {
    pub manifold: String,
    pub seed: u64,
    pub weight_samples: usize,
    pub rows: Vec<KarcherRow>,
    pub all_converged: bool,
}

/// Solve the barycentric map at uniform weights plus `samples` random
/// weight vectors per top simplex, recording the worst iteration count and
/// residual.
pub fn karcher_mesh(
    mesh_text: &str,
    samples: usize,
    seed: u64,
) -> Result<KarcherReport, InputError> {
    let lm = load_mesh(mesh_text)?;
    let mut rows = Vec::new();
    let mut all_converged = true;
    for (i, s) in top_simplices(&lm).into_iter().enumerate() {
        let kp1 = s.len();
        let mut row = KarcherRow {
            simplex: s.clone(),
            evaluations: 0,
            max_iterations: 0,
            max_residual: 0.0,
            converged: true,
            error: None,
        };
        match RiemannianSimplex::new(lm.manifold.clone(), simplex_points(&lm, &s)) {
            Ok(rs) => {
                let mut rng =
                    rng_from_seed(seed ^ (i as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
                let mut weight_list = vec![BarycentricWeights::uniform(kp1)];
                for _ in 0..samples {
                    let w: Vec<f64> = dirichlet(kp1, &mut rng);
                    weight_list.push(BarycentricWeights::new(w).expect("dirichlet weights"));
                }
                for w in &weight_list {
                    match rs.bary_map_detailed(w) {
                        Ok(sol) => {
                            row.evaluations += 1;
                            row.max_iterations = row.max_iterations.max(sol.iterations);
                            row.max_residual = row.max_residual.max(sol.residual);
                        }
                        Err(e) => {
                            row.converged = false;
                            row.error = Some(e.to_string());
                            break;
                        }
                    }
                }
            }
            Err(e) => {
                row.converged = false;
                row.error = Some(e.to_string());
            }
        }
        all_converged &= row.converged;
        rows.push(row);
    }
    Ok(KarcherReport {
        manifold: manifold_label(&lm.manifold),
        seed,
        weight_samples: samples,
        rows,
        all_converged,
    })
}

// ---------------------------------------------------------------------------
// generate

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerateKind {
    Icosphere,
    Octahedron,
    GridTorus,
}

#[derive(Debug, Clone)]
pub struct GenerateParams {
    pub kind: GenerateKind,
    pub level: usize,
    pub radius: f64,
    pub n: usize,
    pub periods: Vec<f64>,
    pub perturb: f64,
    pub seed: u64,
}

pub fn generate_mesh_doc(p: &GenerateParams) -> Result<MeshDocument, InputError> {
    let mesh: GeneratedMesh<f64> = match p.kind {
        GenerateKind::Icosphere => generate_icosphere(p.level, p.radius).map_err(input)?,
        GenerateKind::Octahedron => generate_octahedron(p.radius).map_err(input)?,
        GenerateKind::GridTorus => {
            if p.periods.len() != 2 {
                return Err(InputError(format!(
                    "grid-torus needs exactly 2 periods, got {}",
                    p.periods.len()
                )));
            }
            generate_grid_torus(p.n, (p.periods[0], p.periods[1])).map_err(input)?
        }
    };
    let mesh = if p.perturb > 0.0 {
        generate_perturbed(&mesh, p.perturb, p.seed).map_err(input)?
    } else if p.perturb < 0.0 {
        return Err(InputError(format!(
            "perturbation magnitude must be nonnegative, got {}",
            p.perturb
        )));
    } else {
        mesh
    };
    Ok(MeshDocument::from_mesh(&mesh, Some(p.seed)))
}

// ---------------------------------------------------------------------------
// triangulate-check

#[derive(Debug, Clone, Serialize)]
pub struct TriangulateCheckReport {
    pub manifold: String,
    pub seed: u64,
    pub cover_samples: usize,
    pub triangulation: TriangulationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pwf: Option<PwfReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pwf_error: Option<String>,
}

/// Check both sufficient conditions for the complex to triangulate its
/// manifold at scale `t0`, and additionally report the piecewise flat
/// metric health of the same mesh.
pub fn triangulate_check(
    mesh_text: &str,
    t0: f64,
    variant: ScaleVariant,
    cover_samples: usize,
    seed: u64,
) -> Result<TriangulateCheckReport, InputError> {
    let lm = load_mesh(mesh_text)?;
    let triangulation = check_triangulation(
        &lm.manifold,
        &lm.points,
        &lm.complex,
        t0,
        variant,
        cover_samples,
        seed,
    )
    .map_err(input)?;
    let (pwf, pwf_error) = match pwf_metric(&lm.manifold, &lm.points, &lm.complex, t0) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(TriangulateCheckReport {
        manifold: manifold_label(&lm.manifold),
        seed,
        cover_samples,
        triangulation,
        pwf,
        pwf_error,
    })
}

/// Per-vertex thickness series for the same check, one row per vertex star.
pub fn triangulate_csv(report: &TriangulateCheckReport) -> String {
    let mut out = String::from("vertex,max_vertex_distance,min_lift_thickness,star_full\n");
    for v in &report.triangulation.vertices {
        out.push_str(&format!(
            "{},{},{},{}\n",
            v.vertex,
            sci(v.max_vertex_distance),
            sci(v.min_lift_thickness),
            v.star_full
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// distort-report

pub fn distort(
    mesh_text: &str,
    t0: f64,
    pair_samples: usize,
    seed: u64,
) -> Result<DistortionReport, InputError> {
    let lm = load_mesh(mesh_text)?;
    distortion_report(&lm.manifold, &lm.points, &lm.complex, t0, pair_samples, seed).map_err(input)
}

/// Scatter rows: flat distance vs geodesic distance per sampled pair.
pub fn distortion_csv(report: &DistortionReport) -> String {
    let mut out = String::from("simplex,d_flat,d_manifold,ratio\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.simplex,
            sci(r.d_flat),
            sci(r.d_manifold),
            sci(r.ratio)
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// property-suite

#[derive(Debug, Clone, Serialize)]
pub struct PropertySuiteReport {
    pub samples: usize,
    pub seed: u64,
    pub batteries: Vec<BatteryReport>,
    pub all_passed: bool,
}

/// Run every comparison-inequality battery on the standard manifold roster.
pub fn property_suite(samples: usize, seed: u64) -> PropertySuiteReport {
    let batteries = run_all_batteries(samples, seed);
    let all_passed = batteries.iter().all(|b| b.passed());
    PropertySuiteReport {
        samples,
        seed,
        batteries,
        all_passed,
    }
}

pub fn battery_csv(report: &PropertySuiteReport) -> String {
    let mut out = String::from("name,samples,violations,worst_margin\n");
    for b in &report.batteries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            b.name,
            b.samples,
            b.violations,
            sci(b.worst_margin)
        ));
    }
    out
}
