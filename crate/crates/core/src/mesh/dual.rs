use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};
use crate::quadrature::{self, QuadratureRule};

use super::{ElementKind, Mesh};

/// The part of a covolume inside one primal element: the convex hull of the
/// shared facet and the element's added point, stored as simplices.
#[derive(Clone, Debug)]
pub struct HalfCovolume {
    pub element: usize,
    pub simplices: Vec<Vec<Vec3>>,
}

/// Covolume owned by one interior interface.
#[derive(Clone, Debug)]
pub struct Covolume {
    pub interface: usize,
    /// Left then right half.
    pub halves: [HalfCovolume; 2],
}

impl Covolume {
    pub fn measure(&self) -> f64 {
        self.halves
            .iter()
            .flat_map(|h| &h.simplices)
            .map(|s| simplex_measure(s))
            .sum()
    }

    pub fn vertices(&self) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = Vec::new();
        for s in self.halves.iter().flat_map(|h| &h.simplices) {
            for p in s {
                if !out.iter().any(|q| (q - p).norm() == 0.0) {
                    out.push(*p);
                }
            }
        }
        out
    }

    pub fn diameter(&self) -> f64 {
        let v = self.vertices();
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max((v[i] - v[j]).norm());
            }
        }
        d
    }

    /// Composite rule over both halves.
    pub fn quadrature(&self, degree: usize) -> QuadratureRule {
        let mut rule = QuadratureRule::default();
        for s in self.halves.iter().flat_map(|h| &h.simplices) {
            rule.extend(quadrature::simplex_rule(s, degree));
        }
        rule
    }

    /// True when `x` lies strictly inside one of the pieces, by more than
    /// `tol` in barycentric terms.
    pub fn strictly_contains(&self, x: &Vec3, tol: f64) -> bool {
        self.halves.iter().flat_map(|h| &h.simplices).any(|s| {
            geometry::barycentric(x, s).iter().all(|&l| l > tol)
        })
    }

    /// True when `x` lies in the closed covolume up to `tol` (barycentric).
    pub fn contains(&self, x: &Vec3, tol: f64) -> bool {
        self.halves.iter().flat_map(|h| &h.simplices).any(|s| {
            geometry::barycentric(x, s).iter().all(|&l| l >= -tol)
        })
    }
}

fn simplex_measure(s: &[Vec3]) -> f64 {
    match s.len() {
        2 => (s[1] - s[0]).norm(),
        3 => geometry::triangle_area(&s[0], &s[1], &s[2]),
        _ => geometry::signed_tet_volume(&s[0], &s[1], &s[2], &s[3]).abs(),
    }
}

/// Covolume dual of a primal mesh: one covolume per interior interface.
#[derive(Clone, Debug)]
pub struct DualMesh<'m> {
    mesh: &'m Mesh,
    added_points: Vec<Vec3>,
    covolumes: Vec<Covolume>,
}

impl<'m> DualMesh<'m> {
    pub fn parent(&self) -> &'m Mesh {
        self.mesh
    }

    /// Added point of each primal element.
    pub fn added_points(&self) -> &[Vec3] {
        &self.added_points
    }

    /// Covolumes in interface order; entry `i` belongs to interface `i`.
    pub fn covolumes(&self) -> &[Covolume] {
        &self.covolumes
    }

    pub fn covolume(&self, interface: usize) -> &Covolume {
        &self.covolumes[interface]
    }
}

fn added_point(mesh: &Mesh, e: usize) -> Result<Vec3> {
    let p = mesh.element_points(e);
    match mesh.kind() {
        ElementKind::Quadrilateral => {
            // p0 + s (p2 - p0) = p1 + t (p3 - p1)
            let d1 = p[2] - p[0];
            let d2 = p[3] - p[1];
            let r = p[1] - p[0];
            let cross = d1.x * d2.y - d1.y * d2.x;
            let scale = d1.norm() * d2.norm();
            if cross.abs() <= 1e-12 * scale {
                return Err(Error::NonConvexQuadrilateral {
                    element: e,
                    detail: "parallel diagonals".into(),
                });
            }
            let s = (r.x * d2.y - r.y * d2.x) / cross;
            let t = (r.x * d1.y - r.y * d1.x) / cross;
            let tol = 1e-12;
            if !(s > tol && s < 1.0 - tol && t > tol && t < 1.0 - tol) {
                return Err(Error::NonConvexQuadrilateral {
                    element: e,
                    detail: format!("diagonals meet outside the element (s = {s:.6}, t = {t:.6})"),
                });
            }
            Ok(p[0] + d1 * s)
        }
        _ => Ok(mesh.centroid(e)),
    }
}

fn half(mesh: &Mesh, e: usize, facet: usize, apex: Vec3) -> HalfCovolume {
    let f = mesh.facet_points(e, facet);
    let simplices = if f.len() == 4 {
        vec![vec![f[0], f[1], f[2], apex], vec![f[0], f[2], f[3], apex]]
    } else {
        let mut s = f;
        s.push(apex);
        vec![s]
    };
    HalfCovolume { element: e, simplices }
}

/// Joins each element's added point to the vertices of its facets; the
/// two pieces meeting at an interior facet form that facet's covolume.
/// Boundary pieces are not kept.
pub fn build_dual_covolume(mesh: &Mesh) -> Result<DualMesh<'_>> {
    let added_points = (0..mesh.num_elements())
        .map(|e| added_point(mesh, e))
        .collect::<Result<Vec<_>>>()?;
    let covolumes = mesh
        .interior_interfaces()
        .iter()
        .map(|i| Covolume {
            interface: i.id,
            halves: [
                half(mesh, i.left, i.left_facet, added_points[i.left]),
                half(mesh, i.right, i.right_facet, added_points[i.right]),
            ],
        })
        .collect();
    Ok(DualMesh {
        mesh,
        added_points,
        covolumes,
    })
}
