use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{load_mesh, Mesh, MeshFile};

use super::PiecewisePolyField;

/// On-disk field layout. `mesh` is either a path (relative paths resolve
/// against the field file's directory) or an inline mesh object.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub mesh: serde_json::Value,
    pub degree: usize,
    pub coefficients: Vec<Vec<f64>>,
}

/// A parsed field together with the mesh it lives on.
#[derive(Clone, Debug)]
pub struct FieldData {
    pub mesh: Mesh,
    pub mesh_path: Option<PathBuf>,
    pub degree: usize,
    pub coefficients: Vec<Vec<f64>>,
}

impl FieldData {
    pub fn field(&self) -> Result<PiecewisePolyField<'_>> {
        PiecewisePolyField::new(&self.mesh, self.degree, self.coefficients.clone())
    }
}

impl FieldFile {
    pub fn resolve(self, base: Option<&Path>) -> Result<FieldData> {
        let (mesh, mesh_path) = match self.mesh {
            serde_json::Value::String(p) => {
                let mut path = PathBuf::from(p);
                if path.is_relative() {
                    if let Some(b) = base {
                        path = b.join(path);
                    }
                }
                (load_mesh(&path)?, Some(path))
            }
            v @ serde_json::Value::Object(_) => {
                let file: MeshFile = serde_json::from_value(v).map_err(|e| Error::Malformed(e.to_string()))?;
                (file.into_mesh()?, None)
            }
            _ => {
                return Err(Error::Malformed(
                    "field `mesh` must be a path string or a mesh object".into(),
                ))
            }
        };
        let data = FieldData {
            mesh,
            mesh_path,
            degree: self.degree,
            coefficients: self.coefficients,
        };
        data.field()?;
        Ok(data)
    }
}

/// Parses a field; `base` is the directory used for a relative mesh path.
pub fn field_from_json(text: &str, base: Option<&Path>) -> Result<FieldData> {
    let file: FieldFile = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    file.resolve(base)
}

/// Serializes a field with its mesh inline, or by reference when
/// `mesh_path` is given.
pub fn field_to_json(field: &PiecewisePolyField<'_>, mesh_path: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    match mesh_path {
        Some(p) => {
            let _ = writeln!(out, "  \"mesh\": {},", serde_json::Value::String(p.to_string()));
        }
        None => {
            let mesh = crate::mesh::mesh_to_json(field.mesh());
            let inline: Vec<&str> = mesh.trim_end().lines().collect();
            let _ = write!(out, "  \"mesh\": {}", inline[0]);
            for line in &inline[1..] {
                let _ = write!(out, "\n  {line}");
            }
            let _ = writeln!(out, ",");
        }
    }
    let _ = writeln!(out, "  \"degree\": {},", field.degree());
    let _ = writeln!(out, "  \"coefficients\": [");
    let ne = field.coefficients().len();
    for (i, c) in field.coefficients().iter().enumerate() {
        let vals: Vec<String> = c.iter().map(|v| format!("{v:.16e}")).collect();
        let sep = if i + 1 < ne { "," } else { "" };
        let _ = writeln!(out, "    [{}]{sep}", vals.join(", "));
    }
    let _ = writeln!(out, "  ]");
    let _ = writeln!(out, "}}");
    out
}

pub fn load_field(path: impl AsRef<Path>) -> Result<FieldData> {
    let path = path.as_ref();
    field_from_json(&fs::read_to_string(path)?, path.parent())
}

pub fn save_field(field: &PiecewisePolyField<'_>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, field_to_json(field, None))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, save_mesh, BoxDomain, ElementKind};

    #[test]
    fn inline_round_trip() {
        let m = build_structured_mesh(&BoxDomain::unit(2), 2, &[2, 1], ElementKind::Triangle).unwrap();
        let coeffs: Vec<Vec<f64>> = (0..m.num_elements())
            .map(|e| vec![0.1 * e as f64, 1.0 / 3.0, -2.5e-7])
            .collect();
        let f = PiecewisePolyField::new(&m, 1, coeffs.clone()).unwrap();
        let back = field_from_json(&field_to_json(&f, None), None).unwrap();
        assert_eq!(back.coefficients, coeffs);
        assert_eq!(back.mesh.vertices(), m.vertices());
        assert_eq!(back.degree, 1);
    }

    #[test]
    fn relative_mesh_path() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[3], ElementKind::Interval).unwrap();
        save_mesh(&m, dir.path().join("m.json")).unwrap();
        let text = r#"{"mesh": "m.json", "degree": 0, "coefficients": [[1.0], [2.0], [3.0]]}"#;
        fs::write(dir.path().join("f.json"), text).unwrap();
        let data = load_field(dir.path().join("f.json")).unwrap();
        assert_eq!(data.mesh.num_elements(), 3);
        assert_eq!(data.field().unwrap().element_coefficients(2), &[3.0]);
    }

    #[test]
    fn wrong_length_rejected() {
        let text = r#"{"mesh": {"dimension": 1, "kind": "interval", "vertices": [[0],[1]], "elements": [[0,1]]},
                       "degree": 1, "coefficients": [[1.0]]}"#;
        assert!(matches!(
            field_from_json(text, None),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }
}
