use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::{Interface, Mesh};

use super::{enumerate_multi_indices, eval_expansion, poly_dim, raw_to_scaled, MultiIndex};

/// Piecewise polynomial of total degree `p`: on element `T` it is
/// `Σ_β c_{T,β} ((x - x_T)/h_T)^β`, with `x_T` the vertex average and `h_T`
/// the element diameter.
#[derive(Clone, Debug)]
pub struct PiecewisePolyField<'m> {
    mesh: &'m Mesh,
    degree: usize,
    indices: Vec<MultiIndex>,
    coeffs: Vec<Vec<f64>>,
}

impl<'m> PiecewisePolyField<'m> {
    pub fn new(mesh: &'m Mesh, degree: usize, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != mesh.num_elements() {
            return Err(Error::LengthMismatch {
                expected: mesh.num_elements(),
                got: coeffs.len(),
            });
        }
        let dim = poly_dim(mesh.dimension(), degree);
        if let Some(bad) = coeffs.iter().find(|c| c.len() != dim) {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(PiecewisePolyField {
            mesh,
            degree,
            indices: enumerate_multi_indices(mesh.dimension(), degree),
            coeffs,
        })
    }

    pub fn zeros(mesh: &'m Mesh, degree: usize) -> Self {
        let dim = poly_dim(mesh.dimension(), degree);
        Self::new(mesh, degree, vec![vec![0.0; dim]; mesh.num_elements()]).unwrap()
    }

    /// Field given per element by coefficients of the raw monomials `x^γ`.
    pub fn from_raw_monomials(mesh: &'m Mesh, degree: usize, raw: &[Vec<f64>]) -> Result<Self> {
        let n = mesh.dimension();
        let coeffs = raw
            .iter()
            .enumerate()
            .map(|(e, r)| {
                if e < mesh.num_elements() {
                    raw_to_scaled(n, degree, r, &mesh.centroid(e), mesh.diameter(e))
                } else {
                    r.clone()
                }
            })
            .collect();
        Self::new(mesh, degree, coeffs)
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn element_coefficients(&self, e: usize) -> &[f64] {
        &self.coeffs[e]
    }

    /// `∂^α` of the element-`e` polynomial, extended beyond the element.
    pub fn eval_derivative_unchecked(&self, e: usize, x: &Vec3, alpha: &MultiIndex) -> f64 {
        eval_expansion(
            &self.indices,
            self.degree,
            &self.mesh.centroid(e),
            self.mesh.diameter(e),
            &self.coeffs[e],
            x,
            alpha,
        )
    }

    /// `∂^α` of the field restricted to element `e`; `x` must lie in the
    /// closed element (tolerance `1e-12 h`).
    pub fn eval_derivative(&self, e: usize, x: &Vec3, alpha: &MultiIndex) -> Result<f64> {
        let gap = self.mesh.distance_outside(e, x);
        if gap > 1e-12 * self.mesh.h() {
            return Err(Error::PointOutsideElement { element: e, distance: gap });
        }
        Ok(self.eval_derivative_unchecked(e, x, alpha))
    }

    pub fn value_unchecked(&self, e: usize, x: &Vec3) -> f64 {
        self.eval_derivative_unchecked(e, x, &MultiIndex::zero())
    }

    /// `⟦∂^α u⟧ = ∂^α u|_right − ∂^α u|_left` at the interface point.
    pub fn interface_jump(&self, interface: &Interface, alpha: &MultiIndex) -> f64 {
        let x = &interface.point;
        self.eval_derivative_unchecked(interface.right, x, alpha)
            - self.eval_derivative_unchecked(interface.left, x, alpha)
    }

    pub fn scaled(&self, t: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.iter().map(|v| v * t).collect())
            .collect();
        PiecewisePolyField {
            coeffs,
            ..self.clone()
        }
    }

    /// Adds `value` to the field on element `e` only.
    pub fn with_element_offset(&self, e: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[e][0] += value;
        out
    }
}
