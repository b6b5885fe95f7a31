//! Field dictionary for every JSON artifact the CLI can emit.
//!
//! Each key that may appear in a report maps to the hypothesis,
//! measurement, or piece of provenance it tracks.  A test walks real
//! reports and fails if any emitted field is missing here, so the
//! dictionary cannot silently rot.

use std::collections::BTreeMap;

pub fn field_dictionary() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        // Mesh documents.
        ("manifold", "model space the artifact lives on: descriptor object in mesh documents, label string in reports"),
        ("kind", "manifold family tag: euclidean, sphere, hyperbolic, or flat_torus"),
        ("dim", "intrinsic dimension of the model space"),
        ("radius", "sphere radius; curvature is 1/radius^2"),
        ("scale", "hyperbolic length scale; curvature is -1/scale^2"),
        ("periods", "flat torus fundamental-domain edge lengths"),
        ("vertices", "vertex coordinates in a mesh document, or per-vertex star reports in a triangulation report"),
        ("simplices", "top-dimensional simplices as sorted vertex index tuples"),
        ("metadata", "optional provenance block of a mesh document"),
        ("name", "mesh or battery identifier"),
        ("seed", "root seed all randomness in the run derives from"),
        // Certificates.
        ("mesh_name", "name carried over from the input mesh metadata"),
        ("certificates", "sufficient-condition checks run on one simplex"),
        ("hypotheses", "individual inequalities a certificate requires"),
        ("description", "which inequality this hypothesis checks"),
        ("required", "threshold the measured quantity must reach"),
        ("actual", "measured quantity compared against the threshold"),
        ("pass", "whether this single hypothesis held"),
        ("verdict", "Certified/Inconclusive for a certificate, or the combined condition-1-and-2 outcome of a triangulation check"),
        ("margins", "signed slack per hypothesis, positive exactly on pass"),
        ("simplex", "vertex indices of the simplex a row refers to, or its position in the top-simplex list for scatter rows"),
        ("any_certified", "whether at least one certificate returned Certified for this simplex"),
        ("all_certified", "whether every top simplex obtained at least one Certified verdict"),
        ("construction_error", "why the simplex could not be built: its enclosing ball violates the Karcher ball gate"),
        ("oracle", "sampling cross-check of non-degeneracy for the same simplex"),
        ("min_thickness", "smallest lifted-simplex thickness the oracle observed"),
        ("orientation_consistent", "whether sampled lift orientations kept one sign"),
        ("degenerate", "oracle flag: thickness collapse or orientation flip observed"),
        // Karcher solves.
        ("weight_samples", "random barycentric weight vectors solved per simplex"),
        ("rows", "per-simplex, per-vertex, or per-pair detail records"),
        ("evaluations", "barycentric map solves completed for this simplex"),
        ("max_iterations", "worst fixed-point iteration count over the weight samples"),
        ("max_residual", "worst final gradient norm over the weight samples"),
        ("converged", "whether every solve met the residual tolerance within the iteration cap"),
        ("all_converged", "whether every simplex row converged"),
        ("error", "first solver failure for this simplex, if any"),
        // Triangulation checks.
        ("cover_samples", "random points drawn when testing that vertex balls cover the manifold"),
        ("triangulation", "the two sufficient conditions checked at scale h"),
        ("variant", "which scale rule produced h: main, pwf, or intrinsic"),
        ("h", "vertex-ball radius derived from t0, curvature, and injectivity radius"),
        ("t0", "thickness threshold every lifted star simplex must meet"),
        ("cover", "sampled covering check of the vertex h-balls"),
        ("method", "how the covering was checked (sampled)"),
        ("samples", "number of random draws behind the adjacent sampled statistic"),
        ("sampled_max_gap", "largest observed distance from a sample point to its nearest vertex"),
        ("covered", "whether every sample point lay within h of some vertex"),
        ("condition1", "stars inside their h-balls and the balls cover the manifold"),
        ("condition2", "every lifted star is full with simplex thickness at least t0"),
        ("failed_conditions", "which of conditions 1 and 2 failed, empty on success"),
        ("vertex", "index of the vertex whose star this row describes"),
        ("star_in_ball", "all star vertices strictly within h of the center"),
        ("max_vertex_distance", "farthest star vertex from the center vertex"),
        ("star_full", "lifted star embedded, consistently oriented, center interior"),
        ("min_lift_thickness", "thinnest simplex in the lifted star"),
        ("thickness_ok", "minimum lifted thickness at least t0"),
        // Piecewise flat metric.
        ("pwf", "piecewise flat metric realized from geodesic edge lengths"),
        ("pwf_error", "why the piecewise flat metric could not be realized"),
        ("scale_hypothesis_met", "every edge shorter than the pwf-variant h"),
        ("max_edge", "longest geodesic edge in the complex"),
        ("all_realizable", "every simplex realizable from its edge lengths"),
        ("min_pwf_thickness", "thinnest realized flat simplex"),
        ("threshold", "guaranteed thickness floor 3 t0 / (4 sqrt(n))"),
        ("threshold_ok", "measured pwf thickness above the guaranteed floor"),
        // Distortion.
        ("bound", "distortion ceiling 50 Lambda h^2 / t0^2 at the pwf scale"),
        ("measured_max_ratio", "worst |geodesic - flat| / flat over sampled pairs"),
        ("measured_max_abs", "worst |geodesic - flat| over sampled pairs"),
        ("pairs", "same-simplex point pairs compared"),
        ("skipped", "pairs dropped because the flat distance was below noise"),
        ("within_bound", "whether the worst ratio stayed under the ceiling"),
        ("d_flat", "distance inside the realized flat simplex"),
        ("d_manifold", "geodesic distance between the barycentric images"),
        ("ratio", "|d_manifold - d_flat| / d_flat"),
        // Property suite.
        ("batteries", "comparison-inequality sampling batteries"),
        ("violations", "sampled configurations that broke the inequality"),
        ("worst_margin", "smallest observed slack; negative means a violation"),
        ("all_passed", "whether every battery finished without violations"),
    ])
}

/// Recursively collect every object key in a JSON value.
pub fn collect_keys(value: &serde_json::Value, into: &mut std::collections::BTreeSet<String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                into.insert(k.clone());
                collect_keys(v, into);
            }
        }
        serde_json::Value::Array(items) => {
            for v in items {
                collect_keys(v, into);
            }
        }
        _ => {}
    }
}
