use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};

use super::{ElementKind, Mesh};

/// Axis-aligned box `[lower_k, upper_k]` in the first `n` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl BoxDomain {
    pub fn new(lower: &[f64], upper: &[f64]) -> Self {
        let mut b = BoxDomain {
            lower: [0.0; 3],
            upper: [0.0; 3],
        };
        b.lower[..lower.len()].copy_from_slice(lower);
        b.upper[..upper.len()].copy_from_slice(upper);
        b
    }

    /// The unit interval, square or cube.
    pub fn unit(dim: usize) -> Self {
        let mut b = BoxDomain {
            lower: [0.0; 3],
            upper: [0.0; 3],
        };
        for k in 0..dim {
            b.upper[k] = 1.0;
        }
        b
    }
}

/// Recipe a structured mesh was generated from; refinement regenerates it.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredOrigin {
    pub domain: BoxDomain,
    pub divisions: Vec<usize>,
}

/// Kuhn subdivision of the unit cube: one tetrahedron per axis permutation,
/// all sharing the 000-111 diagonal. Corner bits: x = 1, y = 2, z = 4.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Uniform tensor grid on `domain`; triangles split each cell along the
/// lower-left to upper-right diagonal, tetrahedra use the six-tetrahedron
/// Kuhn split of each cube with positive orientation.
pub fn build_structured_mesh(domain: &BoxDomain, dim: usize, divisions: &[usize], kind: ElementKind) -> Result<Mesh> {
    if !(1..=3).contains(&dim) || kind.dimension() != dim {
        return Err(Error::KindDimensionMismatch { kind, dim });
    }
    if divisions.len() != dim || divisions.iter().any(|&d| d == 0) {
        return Err(Error::InvalidArgument(format!(
            "need {dim} positive division counts, got {divisions:?}"
        )));
    }
    for k in 0..dim {
        if !(domain.upper[k] > domain.lower[k]) {
            return Err(Error::InvalidArgument(format!("empty box along axis {k}")));
        }
    }
    let mut n = [1usize; 3];
    n[..dim].copy_from_slice(divisions);
    let stride = [1, n[0] + 1, (n[0] + 1) * (n[1] + 1)];
    let mut vertices = Vec::new();
    let coord = |k: usize, i: usize| {
        if i == n[k] {
            domain.upper[k]
        } else {
            domain.lower[k] + (domain.upper[k] - domain.lower[k]) * i as f64 / n[k] as f64
        }
    };
    let layers = |k: usize| if k < dim { n[k] + 1 } else { 1 };
    for kz in 0..layers(2) {
        for ky in 0..layers(1) {
            for kx in 0..layers(0) {
                let mut p = Vec3::zeros();
                p.x = coord(0, kx);
                if dim > 1 {
                    p.y = coord(1, ky);
                }
                if dim > 2 {
                    p.z = coord(2, kz);
                }
                vertices.push(p);
            }
        }
    }
    let id = |i: usize, j: usize, k: usize| i * stride[0] + j * stride[1] + k * stride[2];
    let mut elements = Vec::new();
    let cells = |k: usize| if k < dim { n[k] } else { 1 };
    for k in 0..cells(2) {
        for j in 0..cells(1) {
            for i in 0..cells(0) {
                let corner = |bits: usize| id(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                match kind {
                    ElementKind::Interval => elements.push(vec![corner(0), corner(1)]),
                    ElementKind::Quadrilateral => elements.push(vec![corner(0), corner(1), corner(3), corner(2)]),
                    ElementKind::Triangle => {
                        elements.push(vec![corner(0), corner(1), corner(3)]);
                        elements.push(vec![corner(0), corner(3), corner(2)]);
                    }
                    ElementKind::Hexahedron => elements.push(
                        [0, 1, 3, 2, 4, 5, 7, 6].iter().map(|&b| corner(b)).collect(),
                    ),
                    ElementKind::Tetrahedron => {
                        for t in KUHN {
                            let mut tet: Vec<usize> = t.iter().map(|&b| corner(b)).collect();
                            let p: Vec<Vec3> = tet.iter().map(|&v| vertices[v]).collect();
                            if geometry::signed_tet_volume(&p[0], &p[1], &p[2], &p[3]) < 0.0 {
                                tet.swap(2, 3);
                            }
                            elements.push(tet);
                        }
                    }
                }
            }
        }
    }
    let origin = StructuredOrigin {
        domain: *domain,
        divisions: divisions.to_vec(),
    };
    Mesh::build(dim, kind, vertices, elements, Some(origin), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_interval_four_cells() {
        let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[4], ElementKind::Interval).unwrap();
        assert_eq!(m.num_elements(), 4);
        assert_relative_eq!(m.h(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(m.h_min(), 0.25, epsilon = 1e-15);
        let xs: Vec<f64> = m.interior_interfaces().iter().map(|i| i.point.x).collect();
        assert_eq!(xs, vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn triangles_two_by_two() {
        let m = build_structured_mesh(&BoxDomain::unit(2), 2, &[2, 2], ElementKind::Triangle).unwrap();
        assert_eq!(m.num_elements(), 8);
        // 4 cell diagonals plus 2 edges on each of the two interior grid lines
        assert_eq!(m.interior_interfaces().len(), 8);
    }

    #[test]
    fn kind_mismatch() {
        let err = build_structured_mesh(&BoxDomain::unit(2), 2, &[1, 1], ElementKind::Tetrahedron).unwrap_err();
        assert!(matches!(err, Error::KindDimensionMismatch { .. }));
    }

    #[test]
    fn kuhn_tets_positive_and_fill_cube() {
        let m = build_structured_mesh(&BoxDomain::unit(3), 3, &[2, 1, 1], ElementKind::Tetrahedron).unwrap();
        assert_eq!(m.num_elements(), 12);
        let mut total = 0.0;
        for e in 0..m.num_elements() {
            let p = m.element_points(e);
            let v = geometry::signed_tet_volume(&p[0], &p[1], &p[2], &p[3]);
            assert!(v > 0.0);
            total += v;
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
    }
}
