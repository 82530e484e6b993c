//! Conforming meshes of intervals, triangles, quadrilaterals, tetrahedra and
//! hexahedra, with interior interfaces, quality metrics, covolume duals and
//! the geometric checks behind the safe-radius construction.

mod dual;
mod io;
pub mod lemmas;
mod quality;
mod refine;
mod structured;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};
use crate::quadrature::{self, QuadratureRule};

pub use dual::{build_dual_covolume, Covolume, DualMesh, HalfCovolume};
pub use io::{load_mesh, mesh_from_json, mesh_to_json, save_mesh, MeshFile};
pub use quality::{quality_metrics, safe_disk_radius, QualityReport};

pub use refine::refine_uniform;
pub use structured::{build_structured_mesh, BoxDomain, StructuredOrigin};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Interval,
    Triangle,
    Quadrilateral,
    Tetrahedron,
    Hexahedron,
}

const INTERVAL_FACETS: &[&[usize]] = &[&[0], &[1]];
const TRI_EDGES: &[&[usize]] = &[&[0, 1], &[1, 2], &[2, 0]];
const QUAD_EDGES: &[&[usize]] = &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]];
const TET_FACES: &[&[usize]] = &[&[1, 2, 3], &[0, 3, 2], &[0, 1, 3], &[0, 2, 1]];
const TET_EDGES: &[&[usize]] = &[&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]];
const HEX_FACES: &[&[usize]] = &[
    &[0, 3, 2, 1],
    &[4, 5, 6, 7],
    &[0, 1, 5, 4],
    &[1, 2, 6, 5],
    &[2, 3, 7, 6],
    &[3, 0, 4, 7],
];
const HEX_EDGES: &[&[usize]] = &[
    &[0, 1],
    &[1, 2],
    &[2, 3],
    &[3, 0],
    &[4, 5],
    &[5, 6],
    &[6, 7],
    &[7, 4],
    &[0, 4],
    &[1, 5],
    &[2, 6],
    &[3, 7],
];
/// Six tetrahedra sharing the 0-6 diagonal; they tile a hexahedron with planar faces.
pub const HEX_TETS: [[usize; 4]; 6] = [
    [0, 1, 2, 6],
    [0, 2, 3, 6],
    [0, 3, 7, 6],
    [0, 7, 4, 6],
    [0, 4, 5, 6],
    [0, 5, 1, 6],
];

impl ElementKind {
    pub fn dimension(self) -> usize {
        match self {
            ElementKind::Interval => 1,
            ElementKind::Triangle | ElementKind::Quadrilateral => 2,
            ElementKind::Tetrahedron | ElementKind::Hexahedron => 3,
        }
    }

    pub fn vertex_count(self) -> usize {
        match self {
            ElementKind::Interval => 2,
            ElementKind::Triangle => 3,
            ElementKind::Quadrilateral | ElementKind::Tetrahedron => 4,
            ElementKind::Hexahedron => 8,
        }
    }

    /// Local vertex lists of the codimension-one facets. Quadrilateral faces
    /// are listed in cyclic order.
    pub fn facets(self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Interval => INTERVAL_FACETS,
            ElementKind::Triangle => TRI_EDGES,
            ElementKind::Quadrilateral => QUAD_EDGES,
            ElementKind::Tetrahedron => TET_FACES,
            ElementKind::Hexahedron => HEX_FACES,
        }
    }

    pub fn edges(self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Interval => &[&[0, 1]],
            ElementKind::Triangle => TRI_EDGES,
            ElementKind::Quadrilateral => QUAD_EDGES,
            ElementKind::Tetrahedron => TET_EDGES,
            ElementKind::Hexahedron => HEX_EDGES,
        }
    }

    pub fn is_simplex(self) -> bool {
        matches!(
            self,
            ElementKind::Interval | ElementKind::Triangle | ElementKind::Tetrahedron
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Interval => "interval",
            ElementKind::Triangle => "triangle",
            ElementKind::Quadrilateral => "quadrilateral",
            ElementKind::Tetrahedron => "tetrahedron",
            ElementKind::Hexahedron => "hexahedron",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "interval" => Ok(ElementKind::Interval),
            "triangle" => Ok(ElementKind::Triangle),
            "quadrilateral" | "quad" => Ok(ElementKind::Quadrilateral),
            "tetrahedron" | "tet" => Ok(ElementKind::Tetrahedron),
            "hexahedron" | "hex" => Ok(ElementKind::Hexahedron),
            other => Err(Error::InvalidArgument(format!("unknown element kind `{other}`"))),
        }
    }
}

/// A facet shared by exactly two elements. `left < right` fixes the sign of
/// jumps: a jump is the right trace minus the left trace.
#[derive(Clone, Debug)]
pub struct Interface {
    pub id: usize,
    pub left: usize,
    pub right: usize,
    /// Local facet index in the left / right element.
    pub left_facet: usize,
    pub right_facet: usize,
    /// Global vertex ids of the facet, in the left element's local order.
    pub vertices: Vec<usize>,
    /// Evaluation point: the shared node (1D), edge midpoint (2D) or facet
    /// vertex average (3D).
    pub point: Vec3,
    /// Length or area of the facet; 1 for a node.
    pub measure: f64,
    /// Unit normal pointing from the left element into the right one.
    pub normal: Vec3,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    kind: ElementKind,
    vertices: Vec<Vec3>,
    elements: Vec<Vec<usize>>,
    h: f64,
    h_min: f64,
    centroids: Vec<Vec3>,
    diameters: Vec<f64>,
    interfaces: Vec<Interface>,
    /// `(element, local facet)` pairs on the domain boundary.
    boundary_facets: Vec<(usize, usize)>,
    /// Per element, per local facet: the interface id if the facet is interior.
    facet_interfaces: Vec<Vec<Option<usize>>>,
    origin: Option<StructuredOrigin>,
}

impl Mesh {
    /// Validates connectivity and geometry and builds the interface table.
    pub fn new(dim: usize, kind: ElementKind, vertices: Vec<Vec3>, elements: Vec<Vec<usize>>) -> Result<Self> {
        Self::build(dim, kind, vertices, elements, None, true)
    }

    pub(crate) fn build(
        dim: usize,
        kind: ElementKind,
        vertices: Vec<Vec3>,
        elements: Vec<Vec<usize>>,
        origin: Option<StructuredOrigin>,
        check_hanging: bool,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) || kind.dimension() != dim {
            return Err(Error::KindDimensionMismatch { kind, dim });
        }
        if elements.is_empty() {
            return Err(Error::Malformed("mesh has no elements".into()));
        }
        if let Some(bad) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::Malformed(format!("vertex {bad} has a non-finite coordinate")));
        }
        for (e, conn) in elements.iter().enumerate() {
            if conn.len() != kind.vertex_count() {
                return Err(Error::Malformed(format!(
                    "element {e} has {} vertices, {kind} needs {}",
                    conn.len(),
                    kind.vertex_count()
                )));
            }
            if let Some(&v) = conn.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Malformed(format!("element {e} references missing vertex {v}")));
            }
            let mut sorted = conn.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != conn.len() {
                return Err(Error::DegenerateElement {
                    element: e,
                    detail: "repeated vertex".into(),
                });
            }
        }

        let mut mesh = Mesh {
            dim,
            kind,
            vertices,
            elements,
            h: 0.0,
            h_min: f64::INFINITY,
            centroids: Vec::new(),
            diameters: Vec::new(),
            interfaces: Vec::new(),
            boundary_facets: Vec::new(),
            facet_interfaces: Vec::new(),
            origin,
        };
        mesh.compute_sizes();
        for e in 0..mesh.elements.len() {
            mesh.check_element(e)?;
        }
        mesh.match_facets()?;
        if check_hanging {
            mesh.check_hanging_nodes()?;
        }
        Ok(mesh)
    }

    fn compute_sizes(&mut self) {
        let mut centroids = Vec::with_capacity(self.elements.len());
        let mut diameters = Vec::with_capacity(self.elements.len());
        for conn in &self.elements {
            let pts: Vec<Vec3> = conn.iter().map(|&v| self.vertices[v]).collect();
            centroids.push(pts.iter().sum::<Vec3>() / pts.len() as f64);
            let mut diam: f64 = 0.0;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    diam = diam.max((pts[i] - pts[j]).norm());
                }
            }
            diameters.push(diam);
            for edge in self.kind.edges() {
                let len = (pts[edge[0]] - pts[edge[1]]).norm();
                self.h_min = self.h_min.min(len);
            }
        }
        self.h = diameters.iter().cloned().fold(0.0, f64::max);
        self.centroids = centroids;
        self.diameters = diameters;
    }

    fn check_element(&self, e: usize) -> Result<()> {
        let p = self.element_points(e);
        let diam = self.diameters[e];
        let tol = 1e-12;
        let degenerate = |detail: String| Error::DegenerateElement { element: e, detail };
        match self.kind {
            ElementKind::Interval => {
                if diam <= tol * self.h.max(f64::MIN_POSITIVE) {
                    return Err(degenerate("zero length".into()));
                }
            }
            ElementKind::Triangle => {
                let area = geometry::triangle_area(&p[0], &p[1], &p[2]);
                if area <= tol * diam * diam {
                    return Err(degenerate(format!("area {area:e}")));
                }
            }
            ElementKind::Quadrilateral => {
                let turns: Vec<f64> = (0..4)
                    .map(|i| {
                        let a = p[(i + 3) % 4];
                        let b = p[i];
                        let c = p[(i + 1) % 4];
                        let z = (b - a).cross(&(c - b));
                        z.z
                    })
                    .collect();
                let area = 0.5 * (p[2] - p[0]).cross(&(p[3] - p[1])).norm();
                if area <= tol * diam * diam {
                    return Err(degenerate(format!("area {area:e}")));
                }
                let all_pos = turns.iter().all(|&t| t > tol * diam * diam);
                let all_neg = turns.iter().all(|&t| t < -tol * diam * diam);
                if !(all_pos || all_neg) {
                    return Err(Error::NonConvexQuadrilateral {
                        element: e,
                        detail: "vertex turns change sign".into(),
                    });
                }
            }
            ElementKind::Tetrahedron => {
                let vol = geometry::signed_tet_volume(&p[0], &p[1], &p[2], &p[3]).abs();
                if vol <= tol * diam.powi(3) {
                    return Err(degenerate(format!("volume {vol:e}")));
                }
            }
            ElementKind::Hexahedron => {
                // corner tetrahedra must all have the same orientation
                let corners = [
                    [0, 1, 3, 4],
                    [1, 2, 0, 5],
                    [2, 3, 1, 6],
                    [3, 0, 2, 7],
                    [4, 7, 5, 0],
                    [5, 4, 6, 1],
                    [6, 5, 7, 2],
                    [7, 6, 4, 3],
                ];
                let vols: Vec<f64> = corners
                    .iter()
                    .map(|c| geometry::signed_tet_volume(&p[c[0]], &p[c[1]], &p[c[2]], &p[c[3]]))
                    .collect();
                let floor = tol * diam.powi(3);
                if !(vols.iter().all(|&v| v > floor) || vols.iter().all(|&v| v < -floor)) {
                    return Err(degenerate("corner Jacobians vanish or change sign".into()));
                }
            }
        }
        Ok(())
    }

    fn match_facets(&mut self) -> Result<()> {
        let mut owners: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (e, conn) in self.elements.iter().enumerate() {
            for (f, local) in self.kind.facets().iter().enumerate() {
                let mut key: Vec<usize> = local.iter().map(|&l| conn[l]).collect();
                key.sort_unstable();
                owners.entry(key).or_default().push((e, f));
            }
        }
        let mut pairs = Vec::new();
        let mut boundary = Vec::new();
        for (key, list) in owners {
            match list.len() {
                1 => boundary.push(list[0]),
                2 => {
                    let (a, b) = (list[0], list[1]);
                    if a.0 == b.0 {
                        return Err(Error::NonConforming(format!(
                            "element {} uses facet {key:?} twice",
                            a.0
                        )));
                    }
                    pairs.push(if a.0 < b.0 { (a, b) } else { (b, a) });
                }
                k => {
                    return Err(Error::NonConforming(format!(
                        "facet {key:?} is shared by {k} elements"
                    )))
                }
            }
        }
        pairs.sort_unstable_by_key(|(l, r)| (l.0, r.0, l.1));
        boundary.sort_unstable();

        let mut facet_interfaces: Vec<Vec<Option<usize>>> =
            vec![vec![None; self.kind.facets().len()]; self.elements.len()];
        let mut interfaces = Vec::with_capacity(pairs.len());
        for (id, ((left, lf), (right, rf))) in pairs.into_iter().enumerate() {
            let vertices: Vec<usize> = self.kind.facets()[lf]
                .iter()
                .map(|&l| self.elements[left][l])
                .collect();
            let pts: Vec<Vec3> = vertices.iter().map(|&v| self.vertices[v]).collect();
            let point = pts.iter().sum::<Vec3>() / pts.len() as f64;
            let (measure, mut normal) = match self.dim {
                1 => (1.0, Vec3::x()),
                2 => {
                    let t = pts[1] - pts[0];
                    (t.norm(), Vec3::new(-t.y, t.x, 0.0) / t.norm())
                }
                _ => {
                    if pts.len() == 3 {
                        let n = (pts[1] - pts[0]).cross(&(pts[2] - pts[0]));
                        (0.5 * n.norm(), n / n.norm())
                    } else {
                        let n = (pts[2] - pts[0]).cross(&(pts[3] - pts[1]));
                        (0.5 * n.norm(), n / n.norm())
                    }
                }
            };
            if normal.dot(&(self.centroids[right] - self.centroids[left])) < 0.0 {
                normal = -normal;
            }
            facet_interfaces[left][lf] = Some(id);
            facet_interfaces[right][rf] = Some(id);
            interfaces.push(Interface {
                id,
                left,
                right,
                left_facet: lf,
                right_facet: rf,
                vertices,
                point,
                measure,
                normal,
            });
        }
        self.interfaces = interfaces;
        self.boundary_facets = boundary;
        self.facet_interfaces = facet_interfaces;
        Ok(())
    }

    fn check_hanging_nodes(&self) -> Result<()> {
        let tol = 1e-12 * self.h;
        if self.dim == 1 {
            let mut spans: Vec<(f64, f64, usize)> = (0..self.elements.len())
                .map(|e| {
                    let p = self.element_points(e);
                    (p[0].x.min(p[1].x), p[0].x.max(p[1].x), e)
                })
                .collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 - tol {
                    return Err(Error::NonConforming(format!(
                        "intervals {} and {} overlap",
                        w[0].2, w[1].2
                    )));
                }
            }
        }
        // bucket vertices on a grid of cell size h
        let cell = self.h.max(f64::MIN_POSITIVE);
        let key = |p: &Vec3| -> [i64; 3] {
            [
                (p.x / cell).floor() as i64,
                (p.y / cell).floor() as i64,
                (p.z / cell).floor() as i64,
            ]
        };
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (v, p) in self.vertices.iter().enumerate() {
            grid.entry(key(p)).or_default().push(v);
        }
        for &(e, f) in &self.boundary_facets {
            let ids: Vec<usize> = self.kind.facets()[f].iter().map(|&l| self.elements[e][l]).collect();
            let pts: Vec<Vec3> = ids.iter().map(|&v| self.vertices[v]).collect();
            let mut lo = pts[0];
            let mut hi = pts[0];
            for p in &pts {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
            let (klo, khi) = (key(&(lo.add_scalar(-tol))), key(&(hi.add_scalar(tol))));
            for i in klo[0]..=khi[0] {
                for j in klo[1]..=khi[1] {
                    for k in klo[2]..=khi[2] {
                        let Some(cands) = grid.get(&[i, j, k]) else { continue };
                        for &v in cands {
                            if ids.contains(&v) {
                                continue;
                            }
                            let q = &self.vertices[v];
                            let dist = match pts.len() {
                                1 => (q - pts[0]).norm(),
                                2 => geometry::point_segment_distance(q, &pts[0], &pts[1]),
                                3 => geometry::point_triangle_distance(q, &pts[0], &pts[1], &pts[2]),
                                _ => geometry::point_triangle_distance(q, &pts[0], &pts[1], &pts[2])
                                    .min(geometry::point_triangle_distance(q, &pts[0], &pts[2], &pts[3])),
                            };
                            if dist <= tol {
                                return Err(Error::NonConforming(format!(
                                    "vertex {v} lies on boundary facet {ids:?} of element {e} (hanging node)"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Least edge length.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn quasi_uniformity_ratio(&self) -> f64 {
        self.h / self.h_min
    }

    pub fn structured_origin(&self) -> Option<&StructuredOrigin> {
        self.origin.as_ref()
    }

    /// Interior interfaces sorted by `(left, right)`.
    pub fn interior_interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn interface(&self, id: usize) -> &Interface {
        &self.interfaces[id]
    }

    pub fn boundary_facets(&self) -> &[(usize, usize)] {
        &self.boundary_facets
    }

    /// Interface id of local facet `f` of element `e`, or `None` on the boundary.
    pub fn facet_interface(&self, e: usize, f: usize) -> Option<usize> {
        self.facet_interfaces[e][f]
    }

    pub fn element_points(&self, e: usize) -> Vec<Vec3> {
        self.elements[e].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn facet_points(&self, e: usize, f: usize) -> Vec<Vec3> {
        self.kind.facets()[f]
            .iter()
            .map(|&l| self.vertices[self.elements[e][l]])
            .collect()
    }

    /// Vertex average; the expansion point of the per-element polynomial basis.
    pub fn centroid(&self, e: usize) -> Vec3 {
        self.centroids[e]
    }

    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    pub fn measure(&self, e: usize) -> f64 {
        let p = self.element_points(e);
        match self.kind {
            ElementKind::Interval => (p[1] - p[0]).norm(),
            ElementKind::Triangle => geometry::triangle_area(&p[0], &p[1], &p[2]),
            ElementKind::Tetrahedron => geometry::signed_tet_volume(&p[0], &p[1], &p[2], &p[3]).abs(),
            _ => self.element_quadrature(e, 2).measure(),
        }
    }

    /// Area/volume-weighted centroid.
    pub fn geometric_centroid(&self, e: usize) -> Vec3 {
        if self.kind.is_simplex() {
            return self.centroids[e];
        }
        let rule = self.element_quadrature(e, 2);
        let m = rule.measure();
        rule.points.iter().zip(&rule.weights).map(|(x, w)| x * *w).sum::<Vec3>() / m
    }

    pub fn element_quadrature(&self, e: usize, degree: usize) -> QuadratureRule {
        let p = self.element_points(e);
        match self.kind {
            ElementKind::Quadrilateral => quadrature::quadrilateral_rule(&p, degree),
            ElementKind::Hexahedron => quadrature::hexahedron_rule(&p, degree),
            _ => quadrature::simplex_rule(&p, degree),
        }
    }

    /// How far `x` lies outside element `e` (0 when inside or on the boundary).
    pub fn distance_outside(&self, e: usize, x: &Vec3) -> f64 {
        let p = self.element_points(e);
        let simplex_gap = |s: &[Vec3]| -> f64 {
            let lam = geometry::barycentric(x, s);
            let worst = lam.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut gap = (-worst).max(0.0) * self.diameters[e];
            if s.len() == 3 && self.dim == 3 {
                gap = gap.max(
                    (x - s[0]).dot(&geometry::plane_normal(&s[0], &s[1], &s[2]).unwrap_or_else(Vec3::z)).abs(),
                );
            }
            gap
        };
        let off_axes: f64 = (self.dim..3).map(|k| x[k].abs()).sum();
        let gap = match self.kind {
            ElementKind::Interval | ElementKind::Triangle | ElementKind::Tetrahedron => simplex_gap(&p),
            ElementKind::Quadrilateral => simplex_gap(&[p[0], p[1], p[2]]).min(simplex_gap(&[p[0], p[2], p[3]])),
            ElementKind::Hexahedron => HEX_TETS
                .iter()
                .map(|t| simplex_gap(&[p[t[0]], p[t[1]], p[t[2]], p[t[3]]]))
                .fold(f64::INFINITY, f64::min),
        };
        gap + off_axes
    }

    pub fn contains(&self, e: usize, x: &Vec3) -> bool {
        self.distance_outside(e, x) <= 1e-12 * self.h
    }

    /// Interval endpoints in increasing order (1D meshes only).
    pub(crate) fn interval_bounds(&self, e: usize) -> (f64, f64) {
        let a = self.vertices[self.elements[e][0]].x;
        let b = self.vertices[self.elements[e][1]].x;
        (a.min(b), a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    pub(crate) fn two_triangle_square() -> Mesh {
        let v = vec![
            point(&[0.0, 0.0]),
            point(&[1.0, 0.0]),
            point(&[1.0, 1.0]),
            point(&[0.0, 1.0]),
        ];
        Mesh::new(2, ElementKind::Triangle, v, vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap()
    }

    #[test]
    fn two_triangles_share_diagonal() {
        let m = two_triangle_square();
        assert_eq!(m.interior_interfaces().len(), 1);
        let i = &m.interior_interfaces()[0];
        assert_eq!((i.left, i.right), (0, 1));
        assert!((i.point - point(&[0.5, 0.5])).norm() < 1e-15);
        // normal points from element 0 (below the diagonal) into element 1
        assert!(i.normal.dot(&(m.centroid(1) - m.centroid(0))) > 0.0);
        assert!((i.measure - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.h_min(), 1.0);
        assert!((m.h() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_tets_share_face() {
        let v = vec![
            point(&[0.0, 0.0, 0.0]),
            point(&[1.0, 0.0, 0.0]),
            point(&[0.0, 1.0, 0.0]),
            point(&[0.0, 0.0, 1.0]),
            point(&[1.0, 1.0, 1.0]),
        ];
        let m = Mesh::new(3, ElementKind::Tetrahedron, v, vec![vec![0, 1, 2, 3], vec![1, 2, 3, 4]]).unwrap();
        assert_eq!(m.interior_interfaces().len(), 1);
        let x = m.interior_interfaces()[0].point;
        assert!((x - point(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])).norm() < 1e-15);
    }

    #[test]
    fn hanging_node_rejected() {
        let v = vec![
            point(&[0.0, 0.0]),
            point(&[1.0, 0.0]),
            point(&[1.0, 1.0]),
            point(&[0.0, 1.0]),
            point(&[0.5, 0.5]),
        ];
        let err = Mesh::new(
            2,
            ElementKind::Triangle,
            v,
            vec![vec![0, 1, 2], vec![0, 4, 3], vec![4, 2, 3]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("non-conforming"), "{err}");
    }

    #[test]
    fn zero_area_triangle_rejected() {
        let v = vec![point(&[0.0, 0.0]), point(&[1.0, 0.0]), point(&[2.0, 0.0])];
        let err = Mesh::new(2, ElementKind::Triangle, v, vec![vec![0, 1, 2]]).unwrap_err();
        assert!(err.to_string().contains("degenerate element"), "{err}");
    }

    #[test]
    fn facet_shared_three_times_rejected() {
        let v = vec![
            point(&[0.0, 0.0]),
            point(&[1.0, 0.0]),
            point(&[0.5, 1.0]),
            point(&[0.5, -1.0]),
            point(&[0.5, 2.0]),
        ];
        let err = Mesh::new(
            2,
            ElementKind::Triangle,
            v,
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConforming(_)));
    }

    #[test]
    fn non_convex_quad_rejected() {
        let v = vec![
            point(&[0.0, 0.0]),
            point(&[2.0, 0.0]),
            point(&[0.5, 0.5]),
            point(&[0.0, 2.0]),
        ];
        let err = Mesh::new(2, ElementKind::Quadrilateral, v, vec![vec![0, 1, 2, 3]]).unwrap_err();
        assert!(matches!(err, Error::NonConvexQuadrilateral { .. }));
    }

    #[test]
    fn containment_on_shared_edge() {
        let m = two_triangle_square();
        let mid = point(&[0.5, 0.5]);
        assert!(m.contains(0, &mid) && m.contains(1, &mid));
        assert!(!m.contains(0, &point(&[0.2, 0.8])));
    }
}
