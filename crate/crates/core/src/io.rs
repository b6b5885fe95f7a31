//! Mesh documents: a JSON interchange format binding a manifold
//! descriptor, vertex coordinates, and simplex combinatorics, plus a
//! serializer that writes floating-point values losslessly and
//! deterministically.

use crate::complex::{AbstractComplex, ComplexError, GeneratedMesh};
use crate::manifold::ModelManifold;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use std::io::{self, Write};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("document violates mesh constraints:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// Manifold block of a mesh document, e.g.
/// `{"kind": "sphere", "dim": 2, "radius": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldDescriptor {
    Euclidean { dim: usize },
    Sphere { dim: usize, radius: f64 },
    Hyperbolic { dim: usize, scale: f64 },
    FlatTorus { periods: Vec<f64> },
}

impl ManifoldDescriptor {
    pub fn to_manifold(&self) -> ModelManifold<f64> {
        match self {
            ManifoldDescriptor::Euclidean { dim } => ModelManifold::euclidean(*dim),
            ManifoldDescriptor::Sphere { dim, radius } => ModelManifold::sphere(*dim, *radius),
            ManifoldDescriptor::Hyperbolic { dim, scale } => ModelManifold::hyperbolic(*dim, *scale),
            ManifoldDescriptor::FlatTorus { periods } => ModelManifold::flat_torus(periods.clone()),
        }
    }

    pub fn from_manifold(m: &ModelManifold<f64>) -> Self {
        match m {
            ModelManifold::Euclidean { dim } => ManifoldDescriptor::Euclidean { dim: *dim },
            ModelManifold::Sphere { dim, radius } => ManifoldDescriptor::Sphere {
                dim: *dim,
                radius: *radius,
            },
            ModelManifold::Hyperbolic { dim, scale } => ManifoldDescriptor::Hyperbolic {
                dim: *dim,
                scale: *scale,
            },
            ModelManifold::FlatTorus { periods } => ManifoldDescriptor::FlatTorus {
                periods: periods.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeshMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub manifold: ManifoldDescriptor,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<MeshMetadata>,
}

impl MeshDocument {
    pub fn from_mesh(mesh: &GeneratedMesh<f64>, seed: Option<u64>) -> Self {
        MeshDocument {
            manifold: ManifoldDescriptor::from_manifold(&mesh.manifold),
            vertices: mesh
                .points
                .iter()
                .map(|p| p.iter().copied().collect())
                .collect(),
            simplices: mesh
                .complex
                .simplices_of_dim(mesh.complex.dim())
                .cloned()
                .collect(),
            metadata: Some(MeshMetadata {
                name: Some(mesh.name.clone()),
                seed,
            }),
        }
    }

    pub fn manifold(&self) -> ModelManifold<f64> {
        self.manifold.to_manifold()
    }

    pub fn points(&self) -> Vec<DVector<f64>> {
        self.vertices
            .iter()
            .map(|v| DVector::from_vec(v.clone()))
            .collect()
    }

    pub fn complex(&self) -> Result<AbstractComplex, IoError> {
        Ok(AbstractComplex::new(self.vertices.len(), &self.simplices)?)
    }

    /// Collect every constraint violation, with indices, into one error.
    pub fn validate(&self) -> Result<(), IoError> {
        let m = self.manifold.to_manifold();
        let ambient = m.ambient_dim();
        let mut problems = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.len() != ambient {
                problems.push(format!(
                    "vertex {i}: expected {ambient} coordinates, found {}",
                    v.len()
                ));
                continue;
            }
            if v.iter().any(|c| !c.is_finite()) {
                problems.push(format!("vertex {i}: non-finite coordinate"));
                continue;
            }
            if let Err(e) = m.check_point(&DVector::from_vec(v.clone())) {
                problems.push(format!("vertex {i}: {e}"));
            }
        }
        for (j, s) in self.simplices.iter().enumerate() {
            for &idx in s {
                if idx >= self.vertices.len() {
                    problems.push(format!(
                        "simplex {j}: vertex index {idx} out of range for {} vertices",
                        self.vertices.len()
                    ));
                }
            }
            let mut sorted = s.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != s.len() {
                problems.push(format!("simplex {j}: repeated vertex in {s:?}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(IoError::Validation(problems))
        }
    }
}

/// Parse and validate a mesh document.
pub fn parse_mesh(text: &str) -> Result<MeshDocument, IoError> {
    let doc: MeshDocument = serde_json::from_str(text)?;
    doc.validate()?;
    Ok(doc)
}

/// Pretty formatter writing every float with 17 significant digits, which
/// round-trips `f64` exactly.  Non-finite values never reach this method:
/// the serializer emits `null` for them.
struct SciFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.8e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serialize any report to deterministic pretty JSON with lossless floats
/// and a trailing newline.
pub fn write_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let fmt = SciFormatter {
        inner: PrettyFormatter::new(),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{generate_grid_torus, generate_icosphere};

    #[test]
    fn minimal_sphere_doc_parses() {
        let text = r#"{
            "manifold": {"kind": "sphere", "dim": 2, "radius": 1.0},
            "vertices": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            "simplices": [[0, 1, 2]]
        }"#;
        let doc = parse_mesh(text).unwrap();
        assert_eq!(doc.vertices.len(), 3);
        let c = doc.complex().unwrap();
        assert_eq!(c.dim(), 2);
        doc.manifold().check_point(&doc.points()[0]).unwrap();
    }

    #[test]
    fn non_unit_vertex_is_named_in_the_error() {
        let text = r#"{
            "manifold": {"kind": "sphere", "dim": 2, "radius": 1.0},
            "vertices": [[1.0, 0.0, 0.0], [0.0, 1.1, 0.0], [0.0, 0.0, 1.0]],
            "simplices": [[0, 1, 2]]
        }"#;
        let err = parse_mesh(text).unwrap_err();
        match err {
            IoError::Validation(problems) => {
                assert_eq!(problems.len(), 1);
                assert!(problems[0].starts_with("vertex 1:"), "{problems:?}");
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn all_violations_are_collected() {
        let text = r#"{
            "manifold": {"kind": "flat_torus", "periods": [1.0, 1.0]},
            "vertices": [[0.0, 0.0], [1.5, 0.0], [0.2]],
            "simplices": [[0, 1, 7], [0, 0, 1]]
        }"#;
        let err = parse_mesh(text).unwrap_err();
        match err {
            IoError::Validation(problems) => {
                assert_eq!(problems.len(), 4, "{problems:?}");
            }
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        for doc in [
            MeshDocument::from_mesh(&generate_icosphere::<f64>(2, 1.0).unwrap(), Some(7)),
            MeshDocument::from_mesh(&generate_grid_torus::<f64>(5, (1.0, 0.75)).unwrap(), None),
        ] {
            let text = write_json(&doc);
            let parsed = parse_mesh(&text).unwrap();
            assert_eq!(parsed, doc);
            let text2 = write_json(&parsed);
            assert_eq!(text, text2, "serialization must be canonical");
        }
    }

    #[test]
    fn floats_survive_exactly() {
        let values = vec![
            std::f64::consts::PI,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            -2.2250738585072014e-308,
            0.1 + 0.2,
        ];
        let text = write_json(&values);
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, values);
    }

    #[test]
    fn non_finite_floats_become_null() {
        let text = write_json(&vec![1.0, f64::NAN, f64::INFINITY]);
        let back: Vec<Option<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![Some(1.0), None, None]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "manifold": {"kind": "sphere", "dim": 2, "radius": 1.0, "color": "red"},
            "vertices": [],
            "simplices": []
        }"#;
        assert!(matches!(parse_mesh(text), Err(IoError::Parse(_))));
    }

    #[test]
    fn hyperbolic_descriptor_round_trips() {
        let m = ModelManifold::hyperbolic(2, 1.5);
        let d = ManifoldDescriptor::from_manifold(&m);
        let j = write_json(&d);
        let back: ManifoldDescriptor = serde_json::from_str(&j).unwrap();
        assert_eq!(back, d);
        assert!(matches!(back.to_manifold(), ModelManifold::Hyperbolic { .. }));
    }
}
