use approx::assert_relative_eq;
use proptest::prelude::*;
use smoothcheck::geometry::{point, Vec3};
use smoothcheck::mesh::{build_dual_covolume, build_structured_mesh, refine_uniform, safe_disk_radius, BoxDomain};
use smoothcheck::{ElementKind, Mesh};

fn jittered(dim: usize, kind: ElementKind, div: usize, amp: f64, seed: &[f64]) -> Mesh {
    let base = build_structured_mesh(&BoxDomain::unit(dim), dim, &vec![div; dim], kind).unwrap();
    let h = 1.0 / div as f64;
    let verts: Vec<Vec3> = base
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut w = *v;
            for k in 0..dim {
                let interior = v[k] > 1e-12 && v[k] < 1.0 - 1e-12;
                if interior {
                    w[k] += amp * h * seed[(i * dim + k) % seed.len()];
                }
            }
            w
        })
        .collect();
    Mesh::new(dim, kind, verts, base.elements().to_vec()).unwrap()
}

fn interface_count_oracle(mesh: &Mesh) -> usize {
    let f = mesh.kind().facets().len();
    (mesh.num_elements() * f - mesh.boundary_facets().len()) / 2
}

#[test]
fn interface_counts() {
    for (dim, kind) in [
        (1, ElementKind::Interval),
        (2, ElementKind::Triangle),
        (2, ElementKind::Quadrilateral),
        (3, ElementKind::Tetrahedron),
        (3, ElementKind::Hexahedron),
    ] {
        let m = build_structured_mesh(&BoxDomain::unit(dim), dim, &vec![3; dim], kind).unwrap();
        assert_eq!(m.interior_interfaces().len(), interface_count_oracle(&m), "{kind:?}");
    }
    // 1D: n elements have n-1 interior nodes
    let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[7], ElementKind::Interval).unwrap();
    assert_eq!(m.interior_interfaces().len(), 6);
    // 2D 2x2 squares split into triangles: 8 triangles, 16 edges, 8 on the boundary
    let m = build_structured_mesh(&BoxDomain::unit(2), 2, &[2, 2], ElementKind::Triangle).unwrap();
    assert_eq!(m.interior_interfaces().len(), 8);
}

#[test]
fn interface_normals_point_left_to_right() {
    let m = jittered(2, ElementKind::Triangle, 4, 0.2, &[0.3, -0.7, 0.1, 0.9, -0.4]);
    for i in m.interior_interfaces() {
        let d = m.centroid(i.right) - m.centroid(i.left);
        assert!(d.dot(&i.normal) > 0.0);
        assert_relative_eq!(i.normal.norm(), 1.0, epsilon = 1e-14);
    }
}

#[test]
fn refinement_halves_h() {
    for (dim, kind) in [(1, ElementKind::Interval), (2, ElementKind::Triangle), (3, ElementKind::Hexahedron)] {
        let m = build_structured_mesh(&BoxDomain::unit(dim), dim, &vec![2; dim], kind).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_relative_eq!(r.h(), m.h() / 2.0, max_relative = 1e-14);
        let total: f64 = (0..r.num_elements()).map(|e| r.measure(e)).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-13);
    }
}

#[test]
fn covolumes_of_1d_mesh() {
    let v = [0.0, 0.2, 0.5, 0.6, 1.0].iter().map(|&x| point(&[x])).collect();
    let m = Mesh::new(1, ElementKind::Interval, v, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]).unwrap();
    let d = build_dual_covolume(&m).unwrap();
    // each covolume runs between neighbouring element midpoints
    let expected = [0.25, 0.2, 0.25];
    for (c, e) in d.covolumes().iter().zip(expected) {
        assert_relative_eq!(c.measure(), e, epsilon = 1e-15);
    }
}

fn check_dual_partition(m: &Mesh, samples: &[Vec3]) {
    let d = build_dual_covolume(m).unwrap();
    let total: f64 = d.covolumes().iter().map(|c| c.measure()).sum();
    let domain: f64 = (0..m.num_elements()).map(|e| m.measure(e)).sum();
    assert!(total <= domain * (1.0 + 1e-12));
    for x in samples {
        let owners = d.covolumes().iter().filter(|c| c.strictly_contains(x, 1e-9)).count();
        assert!(owners <= 1, "point {x:?} in {owners} covolumes");
    }
}

fn check_safe_disk(m: &Mesh) {
    let r = match safe_disk_radius(m, 1.0) {
        Ok(r) => r,
        Err(_) => return,
    };
    let d = build_dual_covolume(m).unwrap();
    let dim = m.dimension();
    let dirs: Vec<Vec3> = match dim {
        1 => vec![point(&[1.0]), point(&[-1.0])],
        2 => (0..64)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 64.0;
                point(&[t.cos(), t.sin()])
            })
            .collect(),
        _ => (0..200)
            .map(|k| {
                let z = -1.0 + (2 * k + 1) as f64 / 200.0;
                let t = k as f64 * 2.399963229728653;
                let s = (1.0 - z * z).sqrt();
                point(&[s * t.cos(), s * t.sin(), z])
            })
            .collect(),
    };
    for c in d.covolumes() {
        let x = m.interface(c.interface).point;
        for u in &dirs {
            let y = x + u * r;
            assert!(c.contains(&y, 1e-10), "interface {}: {y:?} outside covolume", c.interface);
        }
    }
}

#[test]
fn safe_disk_inside_covolume_structured() {
    for (dim, kind) in [
        (1, ElementKind::Interval),
        (2, ElementKind::Triangle),
        (2, ElementKind::Quadrilateral),
        (3, ElementKind::Hexahedron),
    ] {
        let m = build_structured_mesh(&BoxDomain::unit(dim), dim, &vec![3; dim], kind).unwrap();
        check_safe_disk(&m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jittered_triangles_dual_and_disk(seed in prop::collection::vec(-1.0f64..1.0, 7)) {
        let m = jittered(2, ElementKind::Triangle, 4, 0.2, &seed);
        let samples: Vec<Vec3> = (0..400)
            .map(|k| point(&[((k * 37) % 101) as f64 / 101.0 + 0.003, ((k * 61) % 97) as f64 / 97.0 + 0.002]))
            .collect();
        check_dual_partition(&m, &samples);
        check_safe_disk(&m);
    }

    #[test]
    fn jittered_quads_dual_and_disk(seed in prop::collection::vec(-1.0f64..1.0, 5)) {
        let m = jittered(2, ElementKind::Quadrilateral, 3, 0.15, &seed);
        let samples: Vec<Vec3> = (0..300)
            .map(|k| point(&[((k * 13) % 89) as f64 / 89.0 + 0.004, ((k * 29) % 83) as f64 / 83.0 + 0.001]))
            .collect();
        check_dual_partition(&m, &samples);
        check_safe_disk(&m);
    }

    #[test]
    fn jittered_intervals_dual_and_disk(seed in prop::collection::vec(-1.0f64..1.0, 3)) {
        let m = jittered(1, ElementKind::Interval, 6, 0.3, &seed);
        let samples: Vec<Vec3> = (0..200).map(|k| point(&[(k as f64 + 0.37) / 200.0])).collect();
        check_dual_partition(&m, &samples);
        check_safe_disk(&m);
    }
}
