//! Numerical checks of the two dihedral-angle relations used to bound the 3D
//! safe radius.
//!
//! Dihedral angles are taken between unoriented plane normals, so they lie in
//! `[0, π/2]`.

use nalgebra::Matrix3;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleIdentity {
    /// Angle between the planes ADC and ADG.
    pub theta_f: f64,
    /// Angle HKx, with x the barycenter of ADC, K its foot on AD and H its
    /// projection onto the plane ADG.
    pub theta_s: f64,
    /// `|cos θ_f − cos θ_s / 3|`.
    pub residual: f64,
    /// `|cos θ_f − cos θ_s|`, reported alongside.
    pub direct_residual: f64,
}

fn plane_angle(n1: &Vec3, n2: &Vec3) -> f64 {
    let c = (n1.dot(n2) / (n1.norm() * n2.norm())).abs().min(1.0);
    c.acos()
}

fn checked_normal(a: &Vec3, b: &Vec3, c: &Vec3, what: &str) -> Result<Vec3> {
    geometry::plane_normal(a, b, c)
        .ok_or_else(|| Error::DegenerateConfiguration(format!("points {what} are collinear")))
}

fn check_not_coplanar(a: &Vec3, d: &Vec3, c: &Vec3, g: &Vec3) -> Result<()> {
    let vol = geometry::signed_tet_volume(a, d, c, g).abs();
    let scale = [(d - a).norm(), (c - a).norm(), (g - a).norm()]
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    if vol <= 1e-12 * scale.powi(3) {
        return Err(Error::DegenerateConfiguration(format!(
            "the four points are coplanar (volume {vol:.3e})"
        )));
    }
    Ok(())
}

/// Evaluates both sides of `cos θ_f = cos θ_s / 3` for the configuration
/// `A, D, C, G` sharing the edge AD.
pub fn verify_angle_identity(a: &Vec3, d: &Vec3, c: &Vec3, g: &Vec3) -> Result<AngleIdentity> {
    let n_adc = checked_normal(a, d, c, "A, D, C")?;
    let n_adg = checked_normal(a, d, g, "A, D, G")?;
    check_not_coplanar(a, d, c, g)?;
    let x = (a + d + c) / 3.0;
    let axis = (d - a).normalize();
    let k = a + axis * (x - a).dot(&axis);
    let h = x - n_adg * (x - a).dot(&n_adg);
    let theta_f = plane_angle(&n_adc, &n_adg);
    // H collapses onto K when the planes are perpendicular; the angle tends to π/2 there
    let theta_s = if (h - k).norm() <= 1e-12 * (x - k).norm() {
        std::f64::consts::FRAC_PI_2
    } else {
        geometry::angle_between(&(h - k), &(x - k))
    };
    let (cf, cs) = (theta_f.cos(), theta_s.cos());
    Ok(AngleIdentity {
        theta_f,
        theta_s,
        residual: (cf - cs / 3.0).abs(),
        direct_residual: (cf - cs).abs(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleInequality {
    /// Angle between ADC and ADG, G the vertex average of ADCE.
    pub theta_f: f64,
    /// Angle between ADC and ADE.
    pub theta_ext: f64,
    /// `cos θ_f / cos θ_ext`, the empirical γ.
    pub ratio: f64,
    /// Coordinates of C and E in the frame with A at the origin, AD on the
    /// positive third axis and C in the half-plane of positive first
    /// coordinate and zero second coordinate.
    pub c1: f64,
    pub e1: f64,
    pub e2: f64,
    /// False when `e1 <= 0`, i.e. outside the regime the relation covers.
    pub applicable: bool,
    /// `ratio > 1` (strict left inequality); only meaningful when applicable.
    pub lower_holds: bool,
}

/// Frame with `a` at the origin, `d - a` along the third axis and `c` in the
/// first-coordinate half-plane. Returns the rotation whose rows are the axes.
fn canonical_frame(a: &Vec3, d: &Vec3, c: &Vec3) -> Result<Matrix3<f64>> {
    let z = (d - a).normalize();
    let mut x = c - a;
    x -= z * x.dot(&z);
    if x.norm() <= 1e-14 * (c - a).norm() {
        return Err(Error::DegenerateConfiguration("A, D, C are collinear".into()));
    }
    x.normalize_mut();
    let y = z.cross(&x);
    Ok(Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]))
}

/// Compares the dihedral angle at AD between ADC and ADG (G the barycenter
/// of the tetrahedron ADCE) with the exterior angle between ADC and ADE.
pub fn verify_angle_inequality(a: &Vec3, d: &Vec3, c: &Vec3, e: &Vec3) -> Result<AngleInequality> {
    check_not_coplanar(a, d, c, e)?;
    let n_adc = checked_normal(a, d, c, "A, D, C")?;
    let n_ade = checked_normal(a, d, e, "A, D, E")?;
    let g = (a + d + c + e) / 4.0;
    let n_adg = checked_normal(a, d, &g, "A, D, G")?;
    let theta_f = plane_angle(&n_adc, &n_adg);
    let theta_ext = plane_angle(&n_adc, &n_ade);
    let frame = canonical_frame(a, d, c)?;
    let cl = frame * (c - a);
    let el = frame * (e - a);
    let ratio = theta_f.cos() / theta_ext.cos();
    let applicable = el.x > 0.0;
    Ok(AngleInequality {
        theta_f,
        theta_ext,
        ratio,
        c1: cl.x,
        e1: el.x,
        e2: el.y,
        applicable,
        lower_holds: ratio > 1.0,
    })
}

fn random_point<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn well_shaped(p: &[Vec3; 4]) -> bool {
    let vol = geometry::signed_tet_volume(&p[0], &p[1], &p[2], &p[3]).abs();
    let mut longest: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            longest = longest.max((p[i] - p[j]).norm());
        }
    }
    vol > 1e-3 * longest.powi(3)
}

/// Random non-degenerate `A, D, C, G` in `[-1, 1]^3`.
pub fn random_identity_config<R: Rng + ?Sized>(rng: &mut R) -> [Vec3; 4] {
    loop {
        let p = [random_point(rng), random_point(rng), random_point(rng), random_point(rng)];
        if well_shaped(&p) {
            return p;
        }
    }
}

/// Random non-degenerate `A, D, C, E` inside the relation's regime (`e1 > 0`).
pub fn random_inequality_config<R: Rng + ?Sized>(rng: &mut R) -> [Vec3; 4] {
    loop {
        let p = [random_point(rng), random_point(rng), random_point(rng), random_point(rng)];
        if !well_shaped(&p) {
            continue;
        }
        if let Ok(r) = verify_angle_inequality(&p[0], &p[1], &p[2], &p[3]) {
            if r.applicable {
                return p;
            }
        }
    }
}
