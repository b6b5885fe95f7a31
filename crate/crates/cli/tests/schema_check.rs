//! Every field the CLI can emit must appear in the field dictionary, and
//! (almost) every dictionary entry must be exercised by a real report, so
//! the documented meaning of the output schema stays in sync with the code.

use std::collections::BTreeSet;

use riemsimplex::io::{write_json, ManifoldDescriptor, MeshDocument};
use riemsimplex::triangulation::ScaleVariant;
use riemsimplex_cli::commands::{
    certify_mesh, distort, generate_mesh_doc, karcher_mesh, property_suite, triangulate_check,
    GenerateKind, GenerateParams,
};
use riemsimplex_cli::schema::{collect_keys, field_dictionary};

fn keys_of<T: serde::Serialize>(value: &T, into: &mut BTreeSet<String>) {
    let text = write_json(value);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    collect_keys(&v, into);
}

fn mesh_text(params: &GenerateParams) -> String {
    write_json(&generate_mesh_doc(params).unwrap())
}

#[test]
fn report_fields_match_the_dictionary() {
    let dict = field_dictionary();
    let mut seen = BTreeSet::new();

    let coarse = GenerateParams {
        kind: GenerateKind::GridTorus,
        level: 0,
        radius: 1.0,
        n: 4,
        periods: vec![1.0, 1.0],
        perturb: 0.0,
        seed: 0,
    };
    let fine = GenerateParams { n: 6, ..coarse.clone() };
    let icosa = GenerateParams {
        kind: GenerateKind::Icosphere,
        level: 1,
        radius: 1.0,
        n: 0,
        periods: vec![],
        perturb: 0.0,
        seed: 0,
    };

    // Mesh documents for all manifold descriptor shapes.
    keys_of(&generate_mesh_doc(&fine).unwrap(), &mut seen);
    keys_of(&generate_mesh_doc(&icosa).unwrap(), &mut seen);
    keys_of(
        &MeshDocument {
            manifold: ManifoldDescriptor::Hyperbolic { dim: 2, scale: 1.0 },
            vertices: vec![vec![0.0, 0.0, 1.0]],
            simplices: vec![],
            metadata: None,
        },
        &mut seen,
    );

    let fine_text = mesh_text(&fine);
    // The 4x4 torus has cell diagonals beyond the Karcher ball gate, so its
    // certify/karcher rows exercise the error fields.
    let coarse_text = mesh_text(&coarse);

    keys_of(&certify_mesh(&fine_text, 25, 1).unwrap(), &mut seen);
    keys_of(&certify_mesh(&coarse_text, 0, 1).unwrap(), &mut seen);
    keys_of(&karcher_mesh(&fine_text, 6, 1).unwrap(), &mut seen);
    keys_of(&karcher_mesh(&coarse_text, 2, 1).unwrap(), &mut seen);
    keys_of(
        &triangulate_check(&fine_text, 0.2, ScaleVariant::Main, 500, 1).unwrap(),
        &mut seen,
    );
    keys_of(&distort(&fine_text, 0.2, 40, 1).unwrap(), &mut seen);
    keys_of(&property_suite(4, 1), &mut seen);

    let undocumented: Vec<_> = seen
        .iter()
        .filter(|k| !dict.contains_key(k.as_str()))
        .collect();
    assert!(
        undocumented.is_empty(),
        "fields emitted but missing from the dictionary: {undocumented:?}"
    );

    // `pwf_error` only appears when a simplex cannot be realized from its
    // edge lengths, which a valid manifold mesh never produces here.
    let conditional: BTreeSet<&str> = BTreeSet::from(["pwf_error"]);
    let unexercised: Vec<_> = dict
        .keys()
        .filter(|k| !seen.contains(**k) && !conditional.contains(**k))
        .collect();
    assert!(
        unexercised.is_empty(),
        "dictionary entries no report exercises: {unexercised:?}"
    );
}
