//! Small vector-geometry helpers shared by the mesh, quadrature and lemma code.
//!
//! Points of every dimension are stored as [`Vec3`]; unused trailing
//! coordinates are zero.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;

pub fn point(coords: &[f64]) -> Vec3 {
    let mut p = Vec3::zeros();
    for (k, c) in coords.iter().take(3).enumerate() {
        p[k] = *c;
    }
    p
}

/// Unsigned angle between two vectors, robust near 0 and pi.
pub fn angle_between(u: &Vec3, v: &Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v))
}

/// Interior angle at `at` of the corner formed with `a` and `b`.
pub fn corner_angle(at: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    angle_between(&(a - at), &(b - at))
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn signed_tet_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

pub fn incircle_radius(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let perimeter = (b - a).norm() + (c - b).norm() + (a - c).norm();
    2.0 * triangle_area(a, b, c) / perimeter
}

pub fn insphere_radius(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    let faces = triangle_area(b, c, d)
        + triangle_area(a, c, d)
        + triangle_area(a, b, d)
        + triangle_area(a, b, c);
    3.0 * signed_tet_volume(a, b, c, d).abs() / faces
}

/// Unit normal of the plane through three points, or `None` if they are collinear.
pub fn plane_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Vec3> {
    let n = (b - a).cross(&(c - a));
    let scale = (b - a).norm() * (c - a).norm();
    if scale == 0.0 || n.norm() <= 1e-14 * scale {
        None
    } else {
        Some(n / n.norm())
    }
}

/// Barycentric coordinates of `p` with respect to a segment, triangle or
/// tetrahedron. For a triangle in 3D the point is first projected onto the
/// triangle's plane.
pub fn barycentric(p: &Vec3, simplex: &[Vec3]) -> Vec<f64> {
    match simplex.len() {
        2 => {
            let d = simplex[1] - simplex[0];
            let t = (p - simplex[0]).dot(&d) / d.norm_squared();
            vec![1.0 - t, t]
        }
        3 => {
            let (a, b, c) = (&simplex[0], &simplex[1], &simplex[2]);
            let n = (b - a).cross(&(c - a));
            let area2 = n.norm_squared();
            let l1 = (c - b).cross(&(p - b)).dot(&n) / area2;
            let l2 = (a - c).cross(&(p - c)).dot(&n) / area2;
            vec![l1, l2, 1.0 - l1 - l2]
        }
        4 => {
            let (a, b, c, d) = (&simplex[0], &simplex[1], &simplex[2], &simplex[3]);
            let vol = signed_tet_volume(a, b, c, d);
            let l0 = signed_tet_volume(p, b, c, d) / vol;
            let l1 = signed_tet_volume(a, p, c, d) / vol;
            let l2 = signed_tet_volume(a, b, p, d) / vol;
            vec![l0, l1, l2, 1.0 - l0 - l1 - l2]
        }
        k => panic!("barycentric coordinates need 2..=4 vertices, got {k}"),
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Distance from `p` to the closed triangle `abc` in 3D.
pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let lambda = barycentric(p, &[*a, *b, *c]);
    if lambda.iter().all(|&l| l >= 0.0) {
        let n = (b - a).cross(&(c - a));
        (p - a).dot(&n).abs() / n.norm()
    } else {
        point_segment_distance(p, a, b)
            .min(point_segment_distance(p, b, c))
            .min(point_segment_distance(p, c, a))
    }
}

/// Orthogonal reflection taking the first coordinate axis onto `normal`.
pub fn reflection_onto(normal: &Vec3) -> Matrix3<f64> {
    let nu = normal / normal.norm();
    let w = Vec3::x() - nu;
    if w.norm() < 1e-14 {
        return Matrix3::identity();
    }
    Matrix3::identity() - 2.0 * (w * w.transpose()) / w.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn right_isoceles_incircle() {
        let r = incircle_radius(&point(&[0.0, 0.0]), &point(&[1.0, 0.0]), &point(&[0.0, 1.0]));
        assert_relative_eq!(r, (2.0 - 2f64.sqrt()) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn reflection_maps_axis_to_normal() {
        let n = Vec3::new(0.3, -0.4, 0.5).normalize();
        let r = reflection_onto(&n);
        assert_relative_eq!(r * Vec3::x(), n, epsilon = 1e-15);
        assert_relative_eq!((r * r.transpose()), Matrix3::identity(), epsilon = 1e-15);
        let r = reflection_onto(&Vec3::x());
        assert_eq!(r, Matrix3::identity());
    }

    #[test]
    fn barycentric_reproduces_point() {
        let tet = [
            point(&[0.0, 0.0, 0.0]),
            point(&[1.0, 0.1, 0.0]),
            point(&[0.2, 1.0, 0.0]),
            point(&[0.1, 0.3, 1.2]),
        ];
        let p = point(&[0.2, 0.3, 0.25]);
        let l = barycentric(&p, &tet);
        let back: Vec3 = tet.iter().zip(&l).map(|(v, w)| v * *w).sum();
        assert_relative_eq!(back, p, epsilon = 1e-14);
    }
}
