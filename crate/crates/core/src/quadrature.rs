//! Quadrature rules on intervals, simplices, tensor cells and half-balls.
//!
//! Simplex rules are collapsed (Duffy) Gauss–Legendre products, exact for
//! total degree up to the requested `degree`. Tensor cells use Gauss–Legendre
//! products through the multilinear map. Half-balls use polar (2D) or
//! spherical (3D) products; the 3D rule is exact, the 2D angular factor is
//! oversampled until it is exact to round-off for the supported degrees.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::Matrix3;

use crate::geometry::{reflection_onto, Vec3};

#[derive(Clone, Debug, Default)]
pub struct QuadratureRule {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate<F: FnMut(&Vec3) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn extend(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }

    fn mapped(&self, origin: &Vec3, linear: &Matrix3<f64>, scale: f64) -> QuadratureRule {
        QuadratureRule {
            points: self.points.iter().map(|p| origin + linear * p).collect(),
            weights: self.weights.iter().map(|w| w * scale).collect(),
        }
    }
}

type Nodes = Arc<(Vec<f64>, Vec<f64>)>;

fn gl_cache() -> &'static Mutex<HashMap<usize, Nodes>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Nodes>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` with `m` points.
pub fn gauss_legendre(m: usize) -> Nodes {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one point");
    if let Some(rule) = gl_cache().lock().unwrap().get(&m) {
        return rule.clone();
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_m and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    let rule = Arc::new((nodes, weights));
    gl_cache().lock().unwrap().insert(m, rule.clone());
    rule
}

/// Gauss–Legendre rule on `[a, b]` exact for polynomials of `degree`.
pub fn interval_rule(a: f64, b: f64, degree: usize) -> QuadratureRule {
    let gl = gauss_legendre(degree / 2 + 1);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    QuadratureRule {
        points: gl.0.iter().map(|t| Vec3::new(mid + half * t, 0.0, 0.0)).collect(),
        weights: gl.1.iter().map(|w| w * half.abs()).collect(),
    }
}

fn unit_interval(m: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(m);
    (
        gl.0.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        gl.1.iter().map(|w| 0.5 * w).collect(),
    )
}

type RuleCache = Mutex<HashMap<(u8, usize, usize), Arc<QuadratureRule>>>;

fn rule_cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(tag: u8, dim: usize, degree: usize, build: impl FnOnce() -> QuadratureRule) -> Arc<QuadratureRule> {
    let key = (tag, dim, degree);
    if let Some(rule) = rule_cache().lock().unwrap().get(&key) {
        return rule.clone();
    }
    let rule = Arc::new(build());
    rule_cache().lock().unwrap().insert(key, rule.clone());
    rule
}

/// Rule on the reference simplex `{x_k >= 0, sum x_k <= 1}` of dimension `dim`.
pub fn reference_simplex_rule(dim: usize, degree: usize) -> Arc<QuadratureRule> {
    cached(0, dim, degree, || match dim {
        1 => {
            let (x, w) = unit_interval(degree / 2 + 1);
            QuadratureRule {
                points: x.iter().map(|&t| Vec3::new(t, 0.0, 0.0)).collect(),
                weights: w,
            }
        }
        2 => {
            let (x, w) = unit_interval((degree + 3) / 2);
            let mut rule = QuadratureRule::default();
            for (xi, wi) in x.iter().zip(&w) {
                for (eta, we) in x.iter().zip(&w) {
                    rule.points.push(Vec3::new(*xi, eta * (1.0 - xi), 0.0));
                    rule.weights.push(wi * we * (1.0 - xi));
                }
            }
            rule
        }
        3 => {
            let (x, w) = unit_interval((degree + 4) / 2);
            let mut rule = QuadratureRule::default();
            for (xi, wi) in x.iter().zip(&w) {
                for (eta, we) in x.iter().zip(&w) {
                    for (zeta, wz) in x.iter().zip(&w) {
                        rule.points.push(Vec3::new(
                            *xi,
                            eta * (1.0 - xi),
                            zeta * (1.0 - xi) * (1.0 - eta),
                        ));
                        rule.weights
                            .push(wi * we * wz * (1.0 - xi) * (1.0 - xi) * (1.0 - eta));
                    }
                }
            }
            rule
        }
        _ => panic!("simplex dimension must be 1, 2 or 3"),
    })
}

/// Rule on the simplex spanned by `vertices` (2, 3 or 4 points).
pub fn simplex_rule(vertices: &[Vec3], degree: usize) -> QuadratureRule {
    let dim = vertices.len() - 1;
    let origin = vertices[0];
    let mut linear = Matrix3::zeros();
    for k in 0..dim {
        linear.set_column(k, &(vertices[k + 1] - origin));
    }
    let jac = match dim {
        1 => linear.column(0).norm(),
        2 => linear.column(0).cross(&linear.column(1)).norm(),
        _ => linear.determinant().abs(),
    };
    reference_simplex_rule(dim, degree).mapped(&origin, &linear, jac)
}

/// Gauss product rule on a quadrilateral (vertices in cyclic order) through
/// the bilinear map from `[-1, 1]^2`.
pub fn quadrilateral_rule(v: &[Vec3], degree: usize) -> QuadratureRule {
    let gl = gauss_legendre(degree / 2 + 2);
    let mut rule = QuadratureRule::default();
    for (s, ws) in gl.0.iter().zip(&gl.1) {
        for (t, wt) in gl.0.iter().zip(&gl.1) {
            let n = [
                0.25 * (1.0 - s) * (1.0 - t),
                0.25 * (1.0 + s) * (1.0 - t),
                0.25 * (1.0 + s) * (1.0 + t),
                0.25 * (1.0 - s) * (1.0 + t),
            ];
            let ds = [-0.25 * (1.0 - t), 0.25 * (1.0 - t), 0.25 * (1.0 + t), -0.25 * (1.0 + t)];
            let dt = [-0.25 * (1.0 - s), -0.25 * (1.0 + s), 0.25 * (1.0 + s), 0.25 * (1.0 - s)];
            let x: Vec3 = (0..4).map(|k| v[k] * n[k]).sum();
            let xs: Vec3 = (0..4).map(|k| v[k] * ds[k]).sum();
            let xt: Vec3 = (0..4).map(|k| v[k] * dt[k]).sum();
            rule.points.push(x);
            rule.weights.push(ws * wt * xs.cross(&xt).norm());
        }
    }
    rule
}

/// Gauss product rule on a hexahedron (standard vertex order: bottom face
/// counter-clockwise, then top face) through the trilinear map.
pub fn hexahedron_rule(v: &[Vec3], degree: usize) -> QuadratureRule {
    const SIGNS: [[f64; 3]; 8] = [
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ];
    let gl = gauss_legendre(degree / 2 + 2);
    let mut rule = QuadratureRule::default();
    for (a, wa) in gl.0.iter().zip(&gl.1) {
        for (b, wb) in gl.0.iter().zip(&gl.1) {
            for (c, wc) in gl.0.iter().zip(&gl.1) {
                let r = [*a, *b, *c];
                let mut x = Vec3::zeros();
                let mut jac = Matrix3::zeros();
                for (k, sg) in SIGNS.iter().enumerate() {
                    let f = [1.0 + sg[0] * r[0], 1.0 + sg[1] * r[1], 1.0 + sg[2] * r[2]];
                    x += v[k] * (f[0] * f[1] * f[2] / 8.0);
                    let grads = [
                        sg[0] * f[1] * f[2] / 8.0,
                        sg[1] * f[0] * f[2] / 8.0,
                        sg[2] * f[0] * f[1] / 8.0,
                    ];
                    for (d, g) in grads.iter().enumerate() {
                        let col = jac.column(d) + v[k] * *g;
                        jac.set_column(d, &col);
                    }
                }
                rule.points.push(x);
                rule.weights.push(wa * wb * wc * jac.determinant().abs());
            }
        }
    }
    rule
}

/// Rule on the unit half-ball `{|x| < 1, x_1 > 0}` in `dim` dimensions.
pub fn reference_half_ball_rule(dim: usize, degree: usize) -> Arc<QuadratureRule> {
    cached(1, dim, degree, || match dim {
        1 => {
            let (x, w) = unit_interval(degree / 2 + 1);
            QuadratureRule {
                points: x.iter().map(|&t| Vec3::new(t, 0.0, 0.0)).collect(),
                weights: w,
            }
        }
        2 => {
            let (r, wr) = unit_interval((degree + 3) / 2);
            let theta = gauss_legendre((2 * degree + 12).max(24));
            let mut rule = QuadratureRule::default();
            for (ri, wri) in r.iter().zip(&wr) {
                for (t, wt) in theta.0.iter().zip(&theta.1) {
                    let angle = 0.5 * PI * t;
                    rule.points.push(Vec3::new(ri * angle.cos(), ri * angle.sin(), 0.0));
                    rule.weights.push(wri * wt * 0.5 * PI * ri);
                }
            }
            rule
        }
        3 => {
            let (r, wr) = unit_interval((degree + 4) / 2);
            let (t, wt) = unit_interval(degree / 2 + 1);
            let azimuths = degree + 2;
            let mut rule = QuadratureRule::default();
            for (ri, wri) in r.iter().zip(&wr) {
                for (ti, wti) in t.iter().zip(&wt) {
                    let s = (1.0 - ti * ti).sqrt();
                    for k in 0..azimuths {
                        let phi = 2.0 * PI * k as f64 / azimuths as f64;
                        rule.points.push(Vec3::new(
                            ri * ti,
                            ri * s * phi.cos(),
                            ri * s * phi.sin(),
                        ));
                        rule.weights
                            .push(wri * wti * ri * ri * 2.0 * PI / azimuths as f64);
                    }
                }
            }
            rule
        }
        _ => panic!("ball dimension must be 1, 2 or 3"),
    })
}

/// Rule on the half-ball `{|x - center| < radius, (x - center) . normal > 0}`.
pub fn half_ball_rule(dim: usize, center: &Vec3, radius: f64, normal: &Vec3, degree: usize) -> QuadratureRule {
    let linear = reflection_onto(normal) * radius;
    reference_half_ball_rule(dim, degree).mapped(center, &linear, radius.powi(dim as i32))
}

/// Both halves of a ball split by the hyperplane with the given normal;
/// returns `(minus_side, plus_side)`.
pub fn split_ball_rule(
    dim: usize,
    center: &Vec3,
    radius: f64,
    normal: &Vec3,
    degree: usize,
) -> (QuadratureRule, QuadratureRule) {
    (
        half_ball_rule(dim, center, radius, &(-normal), degree),
        half_ball_rule(dim, center, radius, normal, degree),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(k: u32) -> f64 {
        (1..=k).map(f64::from).product()
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for m in 1..12usize {
            let gl = gauss_legendre(m);
            for k in 0..(2 * m) as i32 {
                let got: f64 = gl.0.iter().zip(&gl.1).map(|(x, w)| w * x.powi(k)).sum();
                let exact = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
                assert!((got - exact).abs() < 1e-14, "m={m} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn reference_triangle_exactness() {
        // closed form: a! b! / (a + b + 2)!
        for degree in 0..=12usize {
            let rule = reference_simplex_rule(2, degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let got = rule.integrate(|x| x.x.powi(a as i32) * x.y.powi(b as i32));
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert_relative_eq!(got, exact, max_relative = 1e-13);
                }
            }
        }
    }

    #[test]
    fn reference_tet_exactness() {
        for degree in 0..=10usize {
            let rule = reference_simplex_rule(3, degree);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    for c in 0..=(degree as u32 - a - b) {
                        let got = rule.integrate(|x| {
                            x.x.powi(a as i32) * x.y.powi(b as i32) * x.z.powi(c as i32)
                        });
                        let exact =
                            factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
                        assert_relative_eq!(got, exact, max_relative = 1e-13);
                    }
                }
            }
        }
    }

    // Integral of x^a y^b over the unit half disk {x > 0}: radial part 1/(a+b+2)
    // times the angular integral, evaluated by a fine independent midpoint sum.
    fn half_disk_monomial(a: i32, b: i32) -> f64 {
        let n = 200_000;
        let h = PI / n as f64;
        let angular: f64 = (0..n)
            .map(|k| {
                let t = -0.5 * PI + (k as f64 + 0.5) * h;
                t.cos().powi(a) * t.sin().powi(b)
            })
            .sum::<f64>()
            * h;
        angular / (a + b + 2) as f64
    }

    #[test]
    fn half_disk_exactness() {
        for degree in [2usize, 6, 10] {
            let rule = reference_half_ball_rule(2, degree);
            assert_relative_eq!(rule.measure(), PI / 2.0, max_relative = 1e-14);
            for a in 0..=degree as i32 {
                for b in 0..=(degree as i32 - a) {
                    let got = rule.integrate(|x| x.x.powi(a) * x.y.powi(b));
                    let exact = half_disk_monomial(a, b);
                    assert!((got - exact).abs() < 1e-9 * (1.0 + exact.abs()), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn half_ball_3d_volume_and_moments() {
        let rule = reference_half_ball_rule(3, 8);
        assert_relative_eq!(rule.measure(), 2.0 * PI / 3.0, max_relative = 1e-14);
        // int x over half ball = pi/4, int y^2 = (1/2)(4 pi/15) = 2 pi/15
        assert_relative_eq!(rule.integrate(|x| x.x), PI / 4.0, max_relative = 1e-14);
        assert_relative_eq!(rule.integrate(|x| x.y * x.y), 2.0 * PI / 15.0, max_relative = 1e-14);
        assert!(rule.integrate(|x| x.y * x.z.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn mapped_half_ball_side() {
        let n = Vec3::new(1.0, 1.0, 0.0).normalize();
        let c = Vec3::new(0.3, 0.2, 0.0);
        let rule = half_ball_rule(2, &c, 0.1, &n, 4);
        assert!(rule.points.iter().all(|p| (p - c).dot(&n) > 0.0 && (p - c).norm() < 0.1));
        assert_relative_eq!(rule.measure(), PI * 0.01 / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn bilinear_quad_area() {
        let v = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(1.5, 1.0, 0.0),
            Vec3::new(0.2, 0.8, 0.0),
        ];
        let area = 0.5 * ((v[2] - v[0]).cross(&(v[3] - v[1]))).norm();
        assert_relative_eq!(quadrilateral_rule(&v, 2).measure(), area, max_relative = 1e-14);
    }
}
