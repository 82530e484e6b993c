use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::{DualMesh, Mesh};
use crate::quadrature::QuadratureRule;

use super::norms::{element_rule, simplices_rule};
use super::{basis_derivatives, enumerate_multi_indices, LocalPoly, MultiIndex, PiecewisePolyField, TargetFunction};

/// Extra quadrature degree on top of `2p` for integrals against
/// non-polynomial targets.
const EXTRA_DEGREE: usize = 8;

/// Piecewise Lagrange interpolant on a 1D mesh at `p + 1` equispaced nodes
/// per element including both endpoints; `p = 0` uses the left endpoint.
pub fn lagrange_interpolant_1d<'m>(u: &dyn TargetFunction, mesh: &'m Mesh, p: usize) -> Result<PiecewisePolyField<'m>> {
    if mesh.dimension() != 1 {
        return Err(Error::InvalidArgument("Lagrange interpolation is implemented for 1D meshes".into()));
    }
    let indices = enumerate_multi_indices(1, p);
    let coeffs: Result<Vec<Vec<f64>>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let (a, b) = mesh.interval_bounds(e);
            let (c, s) = (mesh.centroid(e), mesh.diameter(e));
            let nodes: Vec<f64> = if p == 0 {
                vec![a]
            } else {
                (0..=p)
                    .map(|j| if j == p { b } else { a + (b - a) * j as f64 / p as f64 })
                    .collect()
            };
            let mut vander = DMatrix::zeros(p + 1, p + 1);
            let mut rhs = DVector::zeros(p + 1);
            for (r, &x) in nodes.iter().enumerate() {
                let pt = Vec3::new(x, 0.0, 0.0);
                let row = basis_derivatives(&indices, p, &c, s, &pt, &MultiIndex::zero());
                for (k, v) in row.into_iter().enumerate() {
                    vander[(r, k)] = v;
                }
                rhs[r] = u.value(&pt);
            }
            let sol = vander.lu().solve(&rhs).ok_or_else(|| Error::SingularGram {
                context: format!("interpolation on element {e}"),
                condition: f64::INFINITY,
            })?;
            Ok(sol.iter().cloned().collect())
        })
        .collect();
    PiecewisePolyField::new(mesh, p, coeffs?)
}

/// Gram matrix and right-hand side of the L² projection onto the basis
/// `((x - center)/scale)^β`.
fn normal_equations(
    u: &dyn TargetFunction,
    rule: &QuadratureRule,
    indices: &[MultiIndex],
    p: usize,
    center: &Vec3,
    scale: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let m = indices.len();
    let mut gram = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let phi = basis_derivatives(indices, p, center, scale, x, &MultiIndex::zero());
        let ux = u.value(x);
        for i in 0..m {
            rhs[i] += w * ux * phi[i];
            for j in 0..=i {
                gram[(i, j)] += w * phi[i] * phi[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    (gram, rhs)
}

fn condition_number(gram: &DMatrix<f64>) -> f64 {
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn solve_spd(gram: DMatrix<f64>, rhs: &DVector<f64>, context: impl Fn() -> String) -> Result<Vec<f64>> {
    match gram.clone().cholesky() {
        Some(ch) => Ok(ch.solve(rhs).iter().cloned().collect()),
        None => Err(Error::SingularGram {
            context: context(),
            condition: condition_number(&gram),
        }),
    }
}

/// Element-wise L² best approximation in `P_p`. The quadrature cuts each
/// element along the target's breakpoint planes.
pub fn element_l2_fit<'m>(u: &dyn TargetFunction, mesh: &'m Mesh, p: usize) -> Result<PiecewisePolyField<'m>> {
    let indices = enumerate_multi_indices(mesh.dimension(), p);
    let breaks = u.breakpoints();
    let coeffs: Result<Vec<Vec<f64>>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let rule = element_rule(mesh, e, 2 * p + EXTRA_DEGREE, &breaks);
            let (gram, rhs) = normal_equations(u, &rule, &indices, p, &mesh.centroid(e), mesh.diameter(e));
            solve_spd(gram, &rhs, || format!("element {e}"))
        })
        .collect();
    PiecewisePolyField::new(mesh, p, coeffs?)
}

/// Polynomial per covolume of a dual mesh, expanded about the interface
/// point and scaled by the covolume diameter.
#[derive(Clone, Debug)]
pub struct DualField {
    pub degree: usize,
    pub polys: Vec<LocalPoly>,
    /// Condition number of each local Gram matrix.
    pub gram_conditions: Vec<f64>,
}

impl DualField {
    pub fn value(&self, covolume: usize, x: &Vec3) -> f64 {
        self.polys[covolume].value(x)
    }

    pub fn max_condition(&self) -> f64 {
        self.gram_conditions.iter().cloned().fold(0.0, f64::max)
    }

    /// `‖u − u^I‖_{L²}` over the union of the covolumes.
    pub fn l2_error(&self, u: &dyn TargetFunction, dual: &DualMesh<'_>) -> f64 {
        let breaks = u.breakpoints();
        let parts: Vec<f64> = (0..self.polys.len())
            .into_par_iter()
            .map(|i| {
                let rule = simplices_rule(
                    dual.covolume(i).halves.iter().flat_map(|h| h.simplices.iter().cloned()),
                    2 * self.degree + EXTRA_DEGREE,
                    &breaks,
                );
                rule.integrate(|x| (u.value(x) - self.polys[i].value(x)).powi(2))
            })
            .collect();
        parts.iter().sum::<f64>().sqrt()
    }

    /// Largest `|⟨u − u^I, q⟩| / (‖u‖ ‖q‖)` over basis functions `q` on
    /// covolume `i`; zero up to round-off for an exact projection.
    pub fn orthogonality_residual(&self, u: &dyn TargetFunction, dual: &DualMesh<'_>, i: usize) -> f64 {
        let poly = &self.polys[i];
        let indices = enumerate_multi_indices(poly.dim, poly.degree);
        let breaks = u.breakpoints();
        let rule = simplices_rule(
            dual.covolume(i).halves.iter().flat_map(|h| h.simplices.iter().cloned()),
            2 * poly.degree + EXTRA_DEGREE,
            &breaks,
        );
        let u_norm = rule.integrate(|x| u.value(x).powi(2)).sqrt();
        let mut worst: f64 = 0.0;
        for (k, _) in indices.iter().enumerate() {
            let q = |x: &Vec3| basis_derivatives(&indices, poly.degree, &poly.center, poly.scale, x, &MultiIndex::zero())[k];
            let inner = rule.integrate(|x| (u.value(x) - poly.value(x)) * q(x));
            let q_norm = rule.integrate(|x| q(x).powi(2)).sqrt();
            worst = worst.max(inner.abs() / (u_norm * q_norm).max(f64::MIN_POSITIVE));
        }
        worst
    }
}

/// Local L² projection of `u` onto `P_p` on every covolume.
pub fn local_l2_project_dual(u: &dyn TargetFunction, dual: &DualMesh<'_>, p: usize) -> Result<DualField> {
    let mesh = dual.parent();
    let dim = mesh.dimension();
    let indices = enumerate_multi_indices(dim, p);
    let breaks = u.breakpoints();
    let results: Result<Vec<(LocalPoly, f64)>> = dual
        .covolumes()
        .par_iter()
        .map(|cov| {
            let center = mesh.interface(cov.interface).point;
            let scale = cov.diameter();
            let rule = simplices_rule(
                cov.halves.iter().flat_map(|h| h.simplices.iter().cloned()),
                2 * p + EXTRA_DEGREE,
                &breaks,
            );
            let (gram, rhs) = normal_equations(u, &rule, &indices, p, &center, scale);
            let cond = condition_number(&gram);
            if !cond.is_finite() || cond > 1e14 {
                return Err(Error::SingularGram {
                    context: format!("covolume of interface {}", cov.interface),
                    condition: cond,
                });
            }
            let coeffs = solve_spd(gram, &rhs, || format!("covolume of interface {}", cov.interface))?;
            Ok((
                LocalPoly {
                    dim,
                    degree: p,
                    center,
                    scale,
                    coeffs,
                },
                cond,
            ))
        })
        .collect();
    let (polys, gram_conditions) = results?.into_iter().unzip();
    Ok(DualField {
        degree: p,
        polys,
        gram_conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_dual_covolume, build_structured_mesh, BoxDomain, ElementKind};
    use crate::poly::{error_norm, NormExponent, PolyTarget, Region, SinPiX};
    use approx::assert_relative_eq;

    #[test]
    fn interpolant_reproduces_quadratic() {
        let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[4], ElementKind::Interval).unwrap();
        let u = PolyTarget::new(1, vec![0.0, 0.0, 1.0]).unwrap();
        let f = lagrange_interpolant_1d(&u, &m, 2).unwrap();
        assert!(error_norm(&u, &f, NormExponent::Two, &Region::Domain).unwrap() <= 1e-13);
        assert!(error_norm(&u, &f, NormExponent::Inf, &Region::Domain).unwrap() <= 1e-13);
    }

    #[test]
    fn interpolant_error_below_remainder_bound() {
        let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[4], ElementKind::Interval).unwrap();
        let u = SinPiX { dim: 1 };
        let f = lagrange_interpolant_1d(&u, &m, 1).unwrap();
        let err = error_norm(&u, &f, NormExponent::Inf, &Region::Domain).unwrap();
        let h = 0.25 * std::f64::consts::PI;
        assert!(err <= h * h / 8.0, "{err}");
    }

    #[test]
    fn p0_interpolant_uses_left_node() {
        let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[4], ElementKind::Interval).unwrap();
        let u = SinPiX { dim: 1 };
        let f = lagrange_interpolant_1d(&u, &m, 0).unwrap();
        for e in 0..4 {
            let (a, _) = m.interval_bounds(e);
            assert_relative_eq!(f.element_coefficients(e)[0], u.value(&Vec3::new(a, 0.0, 0.0)), epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let m = build_structured_mesh(&BoxDomain::unit(2), 2, &[3, 3], ElementKind::Triangle).unwrap();
        let d = build_dual_covolume(&m).unwrap();
        let u = PolyTarget::new(2, vec![1.0, -0.5, 2.0, 0.3, 0.7, -1.1]).unwrap();
        let proj = local_l2_project_dual(&u, &d, 2).unwrap();
        for (i, cov) in d.covolumes().iter().enumerate() {
            let rule = cov.quadrature(6);
            for x in &rule.points {
                assert!((proj.value(i, x) - u.value(x)).abs() < 1e-12);
            }
        }
        assert!(proj.max_condition() < 1e6);
    }

    #[test]
    fn projection_of_constant() {
        let m = build_structured_mesh(&BoxDomain::unit(1), 1, &[5], ElementKind::Interval).unwrap();
        let d = build_dual_covolume(&m).unwrap();
        let u = PolyTarget::new(1, vec![2.5]).unwrap();
        let proj = local_l2_project_dual(&u, &d, 1).unwrap();
        for (i, cov) in d.covolumes().iter().enumerate() {
            for x in cov.vertices() {
                assert_relative_eq!(proj.value(i, &x), 2.5, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn projection_orthogonality() {
        let m = build_structured_mesh(&BoxDomain::unit(2), 2, &[2, 2], ElementKind::Triangle).unwrap();
        let d = build_dual_covolume(&m).unwrap();
        let u = SinPiX { dim: 2 };
        let proj = local_l2_project_dual(&u, &d, 2).unwrap();
        for i in 0..d.covolumes().len() {
            assert!(proj.orthogonality_residual(&u, &d, i) < 1e-10);
        }
    }
}
