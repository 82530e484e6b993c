use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::{ElementKind, Mesh, HEX_TETS};
use crate::quadrature::{self, QuadratureRule};

use super::{multi_indices_of_order, MultiIndex, NormExponent, PiecewisePolyField, TargetFunction};

/// Extra quadrature degree on top of the `2p + 2` floor.
const EXTRA_DEGREE: usize = 6;

/// Where an error norm is taken.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Domain,
    Element(usize),
    /// Ball around an interface point, split by the interface hyperplane:
    /// the half opposite the normal uses the left element's polynomial, the
    /// other half the right one's.
    InterfaceBall { interface: usize, radius: f64 },
    /// Ball evaluated by locating every sample in the mesh.
    Ball { center: Vec3, radius: f64 },
}

/// Samples per axis of the lattice added to the quadrature nodes for `L^∞`
/// norms of degree-`p` fields: ten times the `p + 2` Gauss points per axis.
pub fn linf_samples_per_axis(p: usize) -> usize {
    10 * (p + 2)
}

fn cut(a: &Vec3, b: &Vec3, level: f64) -> Vec3 {
    let t = (level - a.x) / (b.x - a.x);
    a + (b - a) * t
}

fn prism(bottom: [Vec3; 3], top: [Vec3; 3]) -> Vec<Vec<Vec3>> {
    vec![
        vec![bottom[0], bottom[1], bottom[2], top[0]],
        vec![bottom[1], bottom[2], top[0], top[1]],
        vec![bottom[2], top[0], top[1], top[2]],
    ]
}

/// Splits a simplex along the plane `x_1 = level` into simplices.
fn clip_simplex(s: &[Vec3], level: f64) -> Vec<Vec<Vec3>> {
    let pos: Vec<usize> = (0..s.len()).filter(|&i| s[i].x > level).collect();
    let neg: Vec<usize> = (0..s.len()).filter(|&i| s[i].x < level).collect();
    if pos.is_empty() || neg.is_empty() {
        return vec![s.to_vec()];
    }
    // vertices exactly on the plane join the smaller side
    let on: Vec<usize> = (0..s.len()).filter(|&i| s[i].x == level).collect();
    let (mut a, mut b) = (pos, neg);
    if a.len() > b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    a.extend(on);
    match s.len() {
        2 => {
            let m = cut(&s[0], &s[1], level);
            vec![vec![s[0], m], vec![m, s[1]]]
        }
        3 => {
            let (lone, pair) = if a.len() == 1 { (a[0], b) } else { (b[0], a) };
            let p1 = cut(&s[lone], &s[pair[0]], level);
            let p2 = cut(&s[lone], &s[pair[1]], level);
            vec![
                vec![s[lone], p1, p2],
                vec![s[pair[0]], s[pair[1]], p2],
                vec![s[pair[0]], p2, p1],
            ]
        }
        _ => {
            if a.len() == 1 || b.len() == 1 {
                let (lone, rest) = if a.len() == 1 { (a[0], b) } else { (b[0], a) };
                let c: Vec<Vec3> = rest.iter().map(|&j| cut(&s[lone], &s[j], level)).collect();
                let mut out = vec![vec![s[lone], c[0], c[1], c[2]]];
                out.extend(prism([s[rest[0]], s[rest[1]], s[rest[2]]], [c[0], c[1], c[2]]));
                out
            } else {
                let (a0, a1, b0, b1) = (a[0], a[1], b[0], b[1]);
                let p00 = cut(&s[a0], &s[b0], level);
                let p01 = cut(&s[a0], &s[b1], level);
                let p10 = cut(&s[a1], &s[b0], level);
                let p11 = cut(&s[a1], &s[b1], level);
                let mut out = prism([s[a0], p00, p01], [s[a1], p10, p11]);
                out.extend(prism([s[b0], p00, p10], [s[b1], p01, p11]));
                out
            }
        }
    }
}

/// Composite rule over simplices, each cut along the planes `x_1 = b`.
pub(crate) fn simplices_rule(
    simplices: impl IntoIterator<Item = Vec<Vec3>>,
    degree: usize,
    breaks: &[f64],
) -> QuadratureRule {
    let mut pieces: Vec<Vec<Vec3>> = simplices.into_iter().collect();
    for &level in breaks {
        pieces = pieces.iter().flat_map(|s| clip_simplex(s, level)).collect();
    }
    let mut rule = QuadratureRule::default();
    for s in &pieces {
        rule.extend(quadrature::simplex_rule(s, degree));
    }
    rule
}

fn element_simplices(mesh: &Mesh, e: usize) -> Vec<Vec<Vec3>> {
    let p = mesh.element_points(e);
    match mesh.kind() {
        ElementKind::Quadrilateral => vec![vec![p[0], p[1], p[2]], vec![p[0], p[2], p[3]]],
        ElementKind::Hexahedron => HEX_TETS
            .iter()
            .map(|t| t.iter().map(|&k| p[k]).collect())
            .collect(),
        _ => vec![p],
    }
}

/// Quadrature on element `e`; elements crossed by a breakpoint plane are cut
/// along it so that piecewise-smooth integrands are integrated accurately.
pub(crate) fn element_rule(mesh: &Mesh, e: usize, degree: usize, breaks: &[f64]) -> QuadratureRule {
    let p = mesh.element_points(e);
    let lo = p.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let hi = p.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * mesh.diameter(e);
    let inside: Vec<f64> = breaks.iter().cloned().filter(|&b| b > lo + tol && b < hi - tol).collect();
    if inside.is_empty() {
        mesh.element_quadrature(e, degree)
    } else {
        simplices_rule(element_simplices(mesh, e), degree, &inside)
    }
}

fn multilinear(v: &[Vec3], r: &[f64; 3]) -> Vec3 {
    // reference coordinates in [0, 1]
    match v.len() {
        4 => {
            let (s, t) = (r[0], r[1]);
            v[0] * ((1.0 - s) * (1.0 - t)) + v[1] * (s * (1.0 - t)) + v[2] * (s * t) + v[3] * ((1.0 - s) * t)
        }
        _ => {
            let f = |k: usize| {
                let bits = [k & 1, (k >> 1) & 1, (k >> 2) & 1];
                (0..3)
                    .map(|d| if bits[d] == 1 { r[d] } else { 1.0 - r[d] })
                    .product::<f64>()
            };
            // lattice corner bits to standard hexahedron ordering
            const ORDER: [usize; 8] = [0, 1, 3, 2, 4, 5, 7, 6];
            (0..8).map(|k| v[ORDER[k]] * f(k)).sum()
        }
    }
}

/// Uniform sampling lattice with `n` subdivisions per axis on element `e`.
pub(crate) fn element_lattice(mesh: &Mesh, e: usize, n: usize) -> Vec<Vec3> {
    let p = mesh.element_points(e);
    let nf = n as f64;
    let mut out = Vec::new();
    match mesh.kind() {
        ElementKind::Interval => {
            for i in 0..=n {
                out.push(p[0] + (p[1] - p[0]) * (i as f64 / nf));
            }
        }
        ElementKind::Triangle => {
            for i in 0..=n {
                for j in 0..=n - i {
                    let (a, b) = (i as f64 / nf, j as f64 / nf);
                    out.push(p[0] + (p[1] - p[0]) * a + (p[2] - p[0]) * b);
                }
            }
        }
        ElementKind::Tetrahedron => {
            for i in 0..=n {
                for j in 0..=n - i {
                    for k in 0..=n - i - j {
                        let (a, b, c) = (i as f64 / nf, j as f64 / nf, k as f64 / nf);
                        out.push(p[0] + (p[1] - p[0]) * a + (p[2] - p[0]) * b + (p[3] - p[0]) * c);
                    }
                }
            }
        }
        ElementKind::Quadrilateral => {
            for i in 0..=n {
                for j in 0..=n {
                    out.push(multilinear(&p, &[i as f64 / nf, j as f64 / nf, 0.0]));
                }
            }
        }
        ElementKind::Hexahedron => {
            for i in 0..=n {
                for j in 0..=n {
                    for k in 0..=n {
                        out.push(multilinear(&p, &[i as f64 / nf, j as f64 / nf, k as f64 / nf]));
                    }
                }
            }
        }
    }
    out
}

/// Partial accumulator: `(Σ w |f|, Σ w f², max |f|)`.
#[derive(Clone, Copy, Default)]
struct Acc {
    l1: f64,
    l2sq: f64,
    max: f64,
}

impl Acc {
    fn add(&mut self, w: f64, v: f64) {
        self.l1 += w * v.abs();
        self.l2sq += w * v * v;
        self.max = self.max.max(v.abs());
    }

    fn sample(&mut self, v: f64) {
        self.max = self.max.max(v.abs());
    }

    fn merge(self, o: Acc) -> Acc {
        Acc {
            l1: self.l1 + o.l1,
            l2sq: self.l2sq + o.l2sq,
            max: self.max.max(o.max),
        }
    }

    fn finish(self, s: NormExponent) -> f64 {
        match s {
            NormExponent::One => self.l1,
            NormExponent::Two => self.l2sq.sqrt(),
            NormExponent::Inf => self.max,
        }
    }
}

/// Accumulates `g` over element `e` with cut quadrature and, for `s = ∞`,
/// the sampling lattice.
fn element_acc(
    mesh: &Mesh,
    e: usize,
    degree: usize,
    lattice: usize,
    breaks: &[f64],
    s: NormExponent,
    g: &(dyn Fn(usize, &Vec3) -> f64 + Sync),
) -> Acc {
    let rule = element_rule(mesh, e, degree, breaks);
    let mut acc = Acc::default();
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        acc.add(*w, g(e, x));
    }
    if s == NormExponent::Inf {
        for x in element_lattice(mesh, e, lattice) {
            acc.sample(g(e, &x));
        }
    }
    acc
}

/// Sums element accumulators in element order, independent of scheduling.
fn domain_acc(
    mesh: &Mesh,
    degree: usize,
    lattice: usize,
    breaks: &[f64],
    s: NormExponent,
    g: &(dyn Fn(usize, &Vec3) -> f64 + Sync),
) -> Acc {
    let parts: Vec<Acc> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| element_acc(mesh, e, degree, lattice, breaks, s, g))
        .collect();
    parts.into_iter().fold(Acc::default(), Acc::merge)
}

fn locate(mesh: &Mesh, x: &Vec3) -> Option<usize> {
    (0..mesh.num_elements())
        .filter(|&e| (mesh.centroid(e) - x).norm() <= mesh.diameter(e))
        .find(|&e| mesh.contains(e, x))
}

/// `‖u − u_h‖_{L^s(region)}`. Finite `s` uses composite quadrature of degree
/// at least `2p + 2`; `s = ∞` is the maximum over the quadrature nodes and
/// a lattice of [`linf_samples_per_axis`] points per axis.
pub fn error_norm(
    u: &dyn TargetFunction,
    field: &PiecewisePolyField<'_>,
    s: NormExponent,
    region: &Region,
) -> Result<f64> {
    let mesh = field.mesh();
    let p = field.degree();
    let degree = 2 * p + 2 + EXTRA_DEGREE;
    let lattice = linf_samples_per_axis(p);
    let breaks = u.breakpoints();
    let g = |e: usize, x: &Vec3| u.value(x) - field.value_unchecked(e, x);
    let acc = match region {
        Region::Domain => domain_acc(mesh, degree, lattice, &breaks, s, &g),
        Region::Element(e) => {
            if *e >= mesh.num_elements() {
                return Err(Error::InvalidArgument(format!("element {e} does not exist")));
            }
            element_acc(mesh, *e, degree, lattice, &breaks, s, &g)
        }
        Region::InterfaceBall { interface, radius } => {
            let i = mesh.interior_interfaces().get(*interface).ok_or_else(|| {
                Error::InvalidArgument(format!("interface {interface} does not exist"))
            })?;
            let mut acc = Acc::default();
            let mut degrees = vec![degree];
            if s == NormExponent::Inf {
                degrees.push(lattice);
            }
            for (k, deg) in degrees.into_iter().enumerate() {
                let (minus, plus) = quadrature::split_ball_rule(mesh.dimension(), &i.point, *radius, &i.normal, deg);
                for (rule, e) in [(minus, i.left), (plus, i.right)] {
                    for (x, w) in rule.points.iter().zip(&rule.weights) {
                        if k == 0 {
                            acc.add(*w, g(e, x));
                        } else {
                            acc.sample(g(e, x));
                        }
                    }
                }
            }
            acc
        }
        Region::Ball { center, radius } => {
            let mut acc = Acc::default();
            let mut degrees = vec![degree];
            if s == NormExponent::Inf {
                degrees.push(lattice);
            }
            for (k, deg) in degrees.into_iter().enumerate() {
                let (minus, plus) = quadrature::split_ball_rule(mesh.dimension(), center, *radius, &Vec3::x(), deg);
                for rule in [minus, plus] {
                    for (x, w) in rule.points.iter().zip(&rule.weights) {
                        let e = locate(mesh, x).ok_or_else(|| {
                            Error::InvalidArgument(format!("ball sample {:?} lies outside the mesh", x.as_slice()))
                        })?;
                        if k == 0 {
                            acc.add(*w, g(e, x));
                        } else {
                            acc.sample(g(e, x));
                        }
                    }
                }
            }
            acc
        }
    };
    Ok(acc.finish(s))
}

/// `|u|_{W^k_s}` over the mesh domain, by quadrature of the order-`k`
/// partial derivatives (classical derivatives away from breakpoints).
/// Aggregation over multi-indices: sum for `s = 1`, root-sum-of-squares for
/// `s = 2`, maximum for `s = ∞`.
pub fn sobolev_seminorm(u: &dyn TargetFunction, mesh: &Mesh, order: u32, s: NormExponent) -> Result<f64> {
    if let Some(avail) = u.max_derivative_order() {
        if avail < order {
            return Err(Error::MissingSeminorm {
                target: u.name(),
                available: avail,
                needed: order,
            });
        }
    }
    let degree = 2 * order as usize + 2 + EXTRA_DEGREE;
    let lattice = linf_samples_per_axis(order as usize);
    let breaks = u.breakpoints();
    let parts: Vec<f64> = multi_indices_of_order(mesh.dimension(), order as usize)
        .iter()
        .map(|alpha: &MultiIndex| {
            let g = |_e: usize, x: &Vec3| u.derivative(x, alpha);
            domain_acc(mesh, degree, lattice, &breaks, s, &g).finish(s)
        })
        .collect();
    Ok(match s {
        NormExponent::One => parts.iter().sum(),
        NormExponent::Two => parts.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormExponent::Inf => parts.iter().cloned().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{self, point};
    use crate::mesh::{build_structured_mesh, BoxDomain};
    use crate::poly::{PolyTarget, Sine, SinPiX};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_interval(n: usize) -> Mesh {
        build_structured_mesh(&BoxDomain::unit(1), 1, &[n], ElementKind::Interval).unwrap()
    }

    #[test]
    fn linear_target_against_zero_field() {
        let m = unit_interval(3);
        let f = PiecewisePolyField::zeros(&m, 1);
        let u = PolyTarget::new(1, vec![0.0, 1.0]).unwrap();
        let l2 = error_norm(&u, &f, NormExponent::Two, &Region::Domain).unwrap();
        assert_relative_eq!(l2, 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        let linf = error_norm(&u, &f, NormExponent::Inf, &Region::Domain).unwrap();
        assert_relative_eq!(linf, 1.0, epsilon = 1e-15);
        let l1 = error_norm(&u, &f, NormExponent::One, &Region::Domain).unwrap();
        assert_relative_eq!(l1, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn seminorm_examples() {
        // x^(p+1)/(p+1)! has unit top derivative
        let m = unit_interval(4);
        let u = PolyTarget::new(1, vec![0.0, 0.0, 0.0, 1.0 / 6.0]).unwrap();
        assert_relative_eq!(sobolev_seminorm(&u, &m, 3, NormExponent::Inf).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(sobolev_seminorm(&u, &m, 4, NormExponent::Two).unwrap(), 0.0);
        // sin on (0, π), first derivative: sqrt(∫cos²) = sqrt(π/2)
        let m = build_structured_mesh(&BoxDomain::new(&[0.0], &[PI]), 1, &[8], ElementKind::Interval).unwrap();
        let u = Sine {
            omega: [1.0, 0.0, 0.0],
            phase: 0.0,
        };
        assert_relative_eq!(sobolev_seminorm(&u, &m, 1, NormExponent::Two).unwrap(), (PI / 2.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn seminorm_matches_closed_form_on_square() {
        let m = build_structured_mesh(&BoxDomain::unit(2), 2, &[4, 4], ElementKind::Triangle).unwrap();
        let u = SinPiX { dim: 2 };
        for s in NormExponent::all() {
            let exact = u.exact_seminorm(2, s, &BoxDomain::unit(2)).unwrap();
            let got = sobolev_seminorm(&u, &m, 2, s).unwrap();
            let tol = if s == NormExponent::Inf { 1e-3 } else { 1e-9 };
            assert_relative_eq!(got, exact, max_relative = tol);
        }
    }

    #[test]
    fn clipping_preserves_measure() {
        let tri = vec![point(&[0.0, 0.0]), point(&[1.0, 0.2]), point(&[0.3, 0.9])];
        let pieces = clip_simplex(&tri, 0.45);
        let area: f64 = pieces.iter().map(|s| geometry::triangle_area(&s[0], &s[1], &s[2])).sum();
        assert_relative_eq!(area, geometry::triangle_area(&tri[0], &tri[1], &tri[2]), epsilon = 1e-15);
        assert!(pieces.iter().all(|s| s.iter().all(|p| p.x <= 0.45 + 1e-15) || s.iter().all(|p| p.x >= 0.45 - 1e-15)));
        let tet = vec![
            point(&[0.0, 0.0, 0.0]),
            point(&[1.0, 0.1, 0.0]),
            point(&[0.2, 1.0, 0.1]),
            point(&[0.7, 0.3, 1.0]),
        ];
        let full = geometry::signed_tet_volume(&tet[0], &tet[1], &tet[2], &tet[3]).abs();
        for level in [0.1, 0.35, 0.5, 0.8] {
            let pieces = clip_simplex(&tet, level);
            let vol: f64 = pieces
                .iter()
                .map(|s| geometry::signed_tet_volume(&s[0], &s[1], &s[2], &s[3]).abs())
                .sum();
            assert_relative_eq!(vol, full, max_relative = 1e-13);
            for s in &pieces {
                assert!(s.iter().all(|p| p.x <= level + 1e-14) || s.iter().all(|p| p.x >= level - 1e-14));
            }
        }
    }

    #[test]
    fn ball_region_splits_by_element() {
        let m = unit_interval(2);
        let f = PiecewisePolyField::new(&m, 0, vec![vec![-0.5], vec![0.5]]).unwrap();
        let zero = PolyTarget::new(1, vec![0.0]).unwrap();
        let r = error_norm(&zero, &f, NormExponent::Two, &Region::InterfaceBall { interface: 0, radius: 0.125 }).unwrap();
        assert_relative_eq!(r * r, 0.25 * 0.25, epsilon = 1e-15);
        let b = error_norm(&zero, &f, NormExponent::Two, &Region::Ball { center: point(&[0.5]), radius: 0.125 }).unwrap();
        assert_relative_eq!(b, r, epsilon = 1e-15);
    }
}
