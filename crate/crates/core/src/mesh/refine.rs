use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::{build_structured_mesh, ElementKind, Mesh};

/// One level of uniform refinement: every element splits into `2^n`
/// children and all edge lengths halve. Structured meshes are regenerated
/// with doubled divisions; other meshes are split by edge, face and cell
/// midpoints (not available for unstructured tetrahedra).
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    if let Some(origin) = mesh.structured_origin() {
        let divisions: Vec<usize> = origin.divisions.iter().map(|d| 2 * d).collect();
        return build_structured_mesh(&origin.domain, mesh.dimension(), &divisions, mesh.kind());
    }
    let mut b = Splitter {
        vertices: mesh.vertices().to_vec(),
        midpoints: HashMap::new(),
    };
    let mut elements = Vec::with_capacity(mesh.num_elements() << mesh.dimension());
    for conn in mesh.elements() {
        match mesh.kind() {
            ElementKind::Interval => {
                let m = b.center(&[conn[0], conn[1]]);
                elements.push(vec![conn[0], m]);
                elements.push(vec![m, conn[1]]);
            }
            ElementKind::Triangle => {
                let (a, c, d) = (conn[0], conn[1], conn[2]);
                let (ac, cd, da) = (b.center(&[a, c]), b.center(&[c, d]), b.center(&[d, a]));
                elements.push(vec![a, ac, da]);
                elements.push(vec![ac, c, cd]);
                elements.push(vec![da, cd, d]);
                elements.push(vec![ac, cd, da]);
            }
            ElementKind::Quadrilateral => {
                let v = conn;
                let e: Vec<usize> = (0..4).map(|i| b.center(&[v[i], v[(i + 1) % 4]])).collect();
                let c = b.center(v);
                elements.push(vec![v[0], e[0], c, e[3]]);
                elements.push(vec![e[0], v[1], e[1], c]);
                elements.push(vec![c, e[1], v[2], e[2]]);
                elements.push(vec![e[3], c, e[2], v[3]]);
            }
            ElementKind::Hexahedron => {
                // 3x3x3 lattice of corner, edge, face and cell points indexed by (i, j, k) in {0, 1, 2}
                let corner_of = |i: usize, j: usize, k: usize| {
                    let x = i / 2;
                    let y = j / 2;
                    let z = k / 2;
                    let local = [0, 1, 3, 2][x + 2 * y] + 4 * z;
                    conn[local]
                };
                let mut lattice = [[[0usize; 3]; 3]; 3];
                for (i, plane) in lattice.iter_mut().enumerate() {
                    for (j, row) in plane.iter_mut().enumerate() {
                        for (k, slot) in row.iter_mut().enumerate() {
                            let xs: &[usize] = if i == 1 { &[0, 2] } else { &[i, i] };
                            let ys: &[usize] = if j == 1 { &[0, 2] } else { &[j, j] };
                            let zs: &[usize] = if k == 1 { &[0, 2] } else { &[k, k] };
                            let mut ids = Vec::new();
                            for &x in xs {
                                for &y in ys {
                                    for &z in zs {
                                        ids.push(corner_of(x, y, z));
                                    }
                                }
                            }
                            ids.sort_unstable();
                            ids.dedup();
                            *slot = if ids.len() == 1 { ids[0] } else { b.center(&ids) };
                        }
                    }
                }
                for ci in 0..2 {
                    for cj in 0..2 {
                        for ck in 0..2 {
                            let at = |di: usize, dj: usize, dk: usize| lattice[ci + di][cj + dj][ck + dk];
                            elements.push(vec![
                                at(0, 0, 0),
                                at(1, 0, 0),
                                at(1, 1, 0),
                                at(0, 1, 0),
                                at(0, 0, 1),
                                at(1, 0, 1),
                                at(1, 1, 1),
                                at(0, 1, 1),
                            ]);
                        }
                    }
                }
            }
            ElementKind::Tetrahedron => {
                return Err(Error::Unsupported(
                    "uniform refinement of tetrahedral meshes without a structured origin".into(),
                ))
            }
        }
    }
    Mesh::build(mesh.dimension(), mesh.kind(), b.vertices, elements, None, false)
}

struct Splitter {
    vertices: Vec<Vec3>,
    midpoints: HashMap<Vec<usize>, usize>,
}

impl Splitter {
    /// Vertex at the average of the given vertices, shared between elements.
    fn center(&mut self, ids: &[usize]) -> usize {
        let mut key = ids.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.midpoints.get(&key) {
            return v;
        }
        let p = key.iter().map(|&v| self.vertices[v]).sum::<Vec3>() / key.len() as f64;
        self.vertices.push(p);
        let id = self.vertices.len() - 1;
        self.midpoints.insert(key, id);
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;
    use crate::mesh::{quality_metrics, BoxDomain};
    use approx::assert_relative_eq;

    #[test]
    fn interval_bisection() {
        let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[4], ElementKind::Interval).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.num_elements(), 8);
        assert_relative_eq!(r.h(), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn structured_tets_times_eight() {
        let m = build_structured_mesh(&BoxDomain::unit(3), 3, &[1, 1, 1], ElementKind::Tetrahedron).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.num_elements(), 8 * m.num_elements());
        assert_relative_eq!(r.h_min(), 0.5 * m.h_min(), max_relative = 1e-12);
    }

    #[test]
    fn unstructured_triangle_keeps_angles() {
        let v = vec![point(&[0.0, 0.0]), point(&[1.0, 0.2]), point(&[0.3, 0.9])];
        let m = Mesh::new(2, ElementKind::Triangle, v, vec![vec![0, 1, 2]]).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.num_elements(), 4);
        assert_eq!(r.interior_interfaces().len(), 3);
        let (q0, q1) = (quality_metrics(&m, 1.0), quality_metrics(&r, 1.0));
        assert_relative_eq!(q0.min_angle.unwrap(), q1.min_angle.unwrap(), max_relative = 1e-12);
        assert_relative_eq!(r.h(), 0.5 * m.h(), max_relative = 1e-12);
    }

    #[test]
    fn unstructured_hex_split() {
        let m = build_structured_mesh(&BoxDomain::unit(3), 3, &[1, 1, 1], ElementKind::Hexahedron).unwrap();
        let plain = Mesh::new(3, ElementKind::Hexahedron, m.vertices().to_vec(), m.elements().to_vec()).unwrap();
        let r = refine_uniform(&plain).unwrap();
        assert_eq!(r.num_elements(), 8);
        assert_eq!(r.interior_interfaces().len(), 12);
        let vol: f64 = (0..8).map(|e| r.measure(e)).sum();
        assert_relative_eq!(vol, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unstructured_tets_unsupported() {
        let v = vec![
            point(&[0.0, 0.0, 0.0]),
            point(&[1.0, 0.0, 0.0]),
            point(&[0.0, 1.0, 0.0]),
            point(&[0.0, 0.0, 1.0]),
        ];
        let m = Mesh::new(3, ElementKind::Tetrahedron, v, vec![vec![0, 1, 2, 3]]).unwrap();
        assert!(matches!(refine_uniform(&m), Err(Error::Unsupported(_))));
    }
}
