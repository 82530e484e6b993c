use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};

use super::{ElementKind, Mesh};

/// Shape metrics of a mesh.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    /// Least angle between two edges meeting at a vertex (radians); `None` in 1D.
    pub min_angle: Option<f64>,
    /// Least dihedral angle (radians), 3D only.
    pub min_dihedral_angle: Option<f64>,
    /// Angle entering the 2D/3D safe-radius formula: the least edge angle for
    /// triangles, the least angle of the corner subtriangles for
    /// quadrilaterals, and the least edge or dihedral angle in 3D.
    pub radius_angle: Option<f64>,
    /// Max over elements of diameter / inscribed diameter; corner
    /// subtriangles (quadrilaterals) or corner tetrahedra (hexahedra) define
    /// the inscribed size, doubled.
    pub sigma: f64,
    pub quasi_uniformity_ratio: f64,
    pub h: f64,
    pub h_min: f64,
    pub gamma: f64,
    /// Safe radius, or `None` when the formula does not apply.
    pub safe_radius: Option<f64>,
    pub safe_radius_note: Option<String>,
}

/// Corner subtriangle (quadrilateral) or corner tetrahedron (hexahedron) at
/// each vertex, given by local vertex ids with the corner first.
fn corner_cells(kind: ElementKind) -> Vec<Vec<usize>> {
    match kind {
        ElementKind::Quadrilateral => (0..4).map(|i| vec![i, (i + 1) % 4, (i + 3) % 4]).collect(),
        ElementKind::Hexahedron => vec![
            vec![0, 1, 3, 4],
            vec![1, 2, 0, 5],
            vec![2, 3, 1, 6],
            vec![3, 0, 2, 7],
            vec![4, 7, 5, 0],
            vec![5, 4, 6, 1],
            vec![6, 5, 7, 2],
            vec![7, 6, 4, 3],
        ],
        _ => Vec::new(),
    }
}

/// Edge angles of one element: pairs of edges sharing a vertex and lying in a
/// common facet (for 2D elements, the element itself).
fn edge_angles(kind: ElementKind, p: &[Vec3]) -> Vec<f64> {
    let mut out = Vec::new();
    match kind.dimension() {
        2 => {
            let m = p.len();
            for i in 0..m {
                out.push(geometry::corner_angle(&p[i], &p[(i + 1) % m], &p[(i + m - 1) % m]));
            }
        }
        3 => {
            for face in kind.facets() {
                let m = face.len();
                for i in 0..m {
                    out.push(geometry::corner_angle(
                        &p[face[i]],
                        &p[face[(i + 1) % m]],
                        &p[face[(i + m - 1) % m]],
                    ));
                }
            }
        }
        _ => {}
    }
    out
}

fn dihedral_angles(kind: ElementKind, p: &[Vec3]) -> Vec<f64> {
    let mut out = Vec::new();
    for edge in kind.edges() {
        let (a, b) = (edge[0], edge[1]);
        let axis = (p[b] - p[a]).normalize();
        let mut legs = Vec::new();
        for face in kind.facets() {
            let m = face.len();
            let Some(ia) = face.iter().position(|&v| v == a) else { continue };
            if !face.contains(&b) {
                continue;
            }
            let next = face[(ia + 1) % m];
            let prev = face[(ia + m - 1) % m];
            let c = if next == b { prev } else { next };
            let d = p[c] - p[a];
            legs.push(d - axis * d.dot(&axis));
        }
        if legs.len() == 2 {
            out.push(geometry::angle_between(&legs[0], &legs[1]));
        }
    }
    out
}

fn element_sigma(kind: ElementKind, p: &[Vec3], diameter: f64) -> f64 {
    match kind {
        ElementKind::Interval => 1.0,
        ElementKind::Triangle => diameter / (2.0 * geometry::incircle_radius(&p[0], &p[1], &p[2])),
        ElementKind::Tetrahedron => diameter / (2.0 * geometry::insphere_radius(&p[0], &p[1], &p[2], &p[3])),
        ElementKind::Quadrilateral => {
            let rmin = corner_cells(kind)
                .iter()
                .map(|c| geometry::incircle_radius(&p[c[0]], &p[c[1]], &p[c[2]]))
                .fold(f64::INFINITY, f64::min);
            diameter / (4.0 * rmin)
        }
        ElementKind::Hexahedron => {
            let rmin = corner_cells(kind)
                .iter()
                .map(|c| geometry::insphere_radius(&p[c[0]], &p[c[1]], &p[c[2]], &p[c[3]]))
                .fold(f64::INFINITY, f64::min);
            diameter / (4.0 * rmin)
        }
    }
}

/// Computes angle, regularity and size metrics; the safe radius uses `gamma`
/// in 3D (ignored otherwise).
pub fn quality_metrics(mesh: &Mesh, gamma: f64) -> QualityReport {
    let kind = mesh.kind();
    let mut min_angle = f64::INFINITY;
    let mut min_dihedral = f64::INFINITY;
    let mut radius_angle = f64::INFINITY;
    let mut sigma: f64 = 1.0;
    for e in 0..mesh.num_elements() {
        let p = mesh.element_points(e);
        let angles = edge_angles(kind, &p);
        let least = angles.iter().cloned().fold(f64::INFINITY, f64::min);
        min_angle = min_angle.min(least);
        match kind {
            ElementKind::Quadrilateral => {
                for c in corner_cells(kind) {
                    let t = [p[c[0]], p[c[1]], p[c[2]]];
                    for i in 0..3 {
                        radius_angle = radius_angle.min(geometry::corner_angle(&t[i], &t[(i + 1) % 3], &t[(i + 2) % 3]));
                    }
                }
            }
            _ => radius_angle = radius_angle.min(least),
        }
        if mesh.dimension() == 3 {
            let d = dihedral_angles(kind, &p).into_iter().fold(f64::INFINITY, f64::min);
            min_dihedral = min_dihedral.min(d);
            radius_angle = radius_angle.min(d);
        }
        sigma = sigma.max(element_sigma(kind, &p, mesh.diameter(e)));
    }
    let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
    let mut report = QualityReport {
        min_angle: finite(min_angle),
        min_dihedral_angle: finite(min_dihedral),
        radius_angle: finite(radius_angle),
        sigma,
        quasi_uniformity_ratio: mesh.quasi_uniformity_ratio(),
        h: mesh.h(),
        h_min: mesh.h_min(),
        gamma,
        safe_radius: None,
        safe_radius_note: None,
    };
    match radius_from_angle(mesh.dimension(), mesh.h_min(), report.radius_angle, gamma) {
        Ok(delta) => report.safe_radius = Some(delta),
        Err(e) => report.safe_radius_note = Some(e.to_string()),
    }
    report
}

fn radius_from_angle(dim: usize, h_min: f64, angle: Option<f64>, gamma: f64) -> Result<f64> {
    match dim {
        1 => Ok(0.25 * h_min),
        2 => {
            let theta = angle.ok_or_else(|| Error::InvalidArgument("missing minimum angle".into()))?;
            Ok(0.25 * h_min * (0.5 * theta).sin())
        }
        _ => {
            let beta = angle.ok_or_else(|| Error::InvalidArgument("missing minimum angle".into()))?;
            let arg = 3.0 * gamma * beta.cos();
            if !(gamma > 0.0) || arg >= 1.0 {
                return Err(Error::RadiusFormulaInapplicable(format!(
                    "3·γ·cos β₀ = {arg:.6} ≥ 1 (γ = {gamma}, β₀ = {:.6} rad = {:.3}°)",
                    beta,
                    beta * 180.0 / PI
                )));
            }
            let g = (1.0 - arg * arg).sqrt();
            Ok(h_min / 3.0 * (0.5 * beta).sin() * beta.sin() * g)
        }
    }
}

/// Radius of the balls around interface evaluation points that stay inside
/// the interface's covolume: `h_min/4` in 1D, `h_min sin(θ₀/2)/4` in 2D and
/// `h_min sin(β₀/2) sin(β₀) sqrt(1 - 9γ²cos²β₀)/3` in 3D.
pub fn safe_disk_radius(mesh: &Mesh, gamma: f64) -> Result<f64> {
    let q = quality_metrics(mesh, gamma);
    radius_from_angle(mesh.dimension(), mesh.h_min(), q.radius_angle, gamma)
}
