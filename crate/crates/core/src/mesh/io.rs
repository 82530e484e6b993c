use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point, Vec3};

use super::{ElementKind, Mesh};

/// On-disk mesh layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub dimension: usize,
    pub kind: ElementKind,
    pub vertices: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<Mesh> {
        let dim = self.dimension;
        if !(1..=3).contains(&dim) {
            return Err(Error::Malformed(format!("dimension {dim} is not 1, 2 or 3")));
        }
        let mut vertices: Vec<Vec3> = Vec::with_capacity(self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Malformed(format!(
                    "vertex {i} has {} coordinates, expected {dim}",
                    v.len()
                )));
            }
            vertices.push(point(v));
        }
        Mesh::new(dim, self.kind, vertices, self.elements)
    }
}

/// Parses and validates a mesh from JSON text.
pub fn mesh_from_json(text: &str) -> Result<Mesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    file.into_mesh()
}

/// Serializes a mesh; coordinates carry 17 significant digits so that they
/// read back bit-exactly.
pub fn mesh_to_json(mesh: &Mesh) -> String {
    let dim = mesh.dimension();
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"dimension\": {dim},");
    let _ = writeln!(out, "  \"kind\": \"{}\",", mesh.kind());
    let _ = writeln!(out, "  \"vertices\": [");
    let nv = mesh.vertices().len();
    for (i, v) in mesh.vertices().iter().enumerate() {
        let coords: Vec<String> = (0..dim).map(|k| format!("{:.16e}", v[k])).collect();
        let sep = if i + 1 < nv { "," } else { "" };
        let _ = writeln!(out, "    [{}]{sep}", coords.join(", "));
    }
    let _ = writeln!(out, "  ],");
    let _ = writeln!(out, "  \"elements\": [");
    let ne = mesh.num_elements();
    for (i, conn) in mesh.elements().iter().enumerate() {
        let ids: Vec<String> = conn.iter().map(|v| v.to_string()).collect();
        let sep = if i + 1 < ne { "," } else { "" };
        let _ = writeln!(out, "    [{}]{sep}", ids.join(", "));
    }
    let _ = writeln!(out, "  ]");
    let _ = writeln!(out, "}}");
    out
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    mesh_from_json(&fs::read_to_string(path)?)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh_to_json(mesh))?;
    Ok(())
}
