//! The jump quadratic form `Q(Δ)`: the least two-sided L² residual of the
//! antisymmetric jump polynomial `±½ Σ_α Δ_α ξ^α/α!` on the two halves of a
//! ball of radius `r̂`, minimized over a common correction `v̂ ∈ P_p`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::poly::{basis_derivatives, enumerate_multi_indices, poly_dim, MultiIndex};
use crate::quadrature::{half_ball_rule, QuadratureRule};

/// Half-ball pair `{|ξ| < r̂, ±ξ·normal > 0}` in `n` dimensions and the
/// polynomial degree of the jumps.
#[derive(Clone, Debug, PartialEq)]
pub struct QFormSpec {
    pub n: usize,
    pub p: usize,
    pub r_hat: f64,
    /// Unit normal of the splitting hyperplane, pointing into `Ω̂_+`.
    pub normal: Vec3,
}

impl QFormSpec {
    pub fn new(n: usize, p: usize, r_hat: f64) -> Result<Self> {
        Self::with_normal(n, p, r_hat, Vec3::x())
    }

    pub fn with_normal(n: usize, p: usize, r_hat: f64, normal: Vec3) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidArgument(format!("dimension {n} is not 1, 2 or 3")));
        }
        if !(r_hat > 0.0 && r_hat < 1.0) {
            return Err(Error::InvalidArgument(format!("r_hat = {r_hat} is outside (0, 1)")));
        }
        let norm = normal.norm();
        if !(norm > 0.0) || normal.iter().skip(n).any(|c| *c != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "normal {:?} is not a nonzero vector in {n} dimensions",
                normal.as_slice()
            )));
        }
        Ok(QFormSpec {
            n,
            p,
            r_hat,
            normal: normal / norm,
        })
    }

    pub fn dim(&self) -> usize {
        poly_dim(self.n, self.p)
    }
}

/// `Q(Δ) = Δᵀ M Δ` with `M = r̂ⁿ W S W`, where `S` is the Schur complement
/// of the half-ball Gram system in unit-ball coordinates and
/// `W = diag(r̂^{|α|}/(2 α!))`.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    spec: QFormSpec,
    indices: Vec<MultiIndex>,
    weights: Vec<f64>,
    schur: DMatrix<f64>,
    matrix: DMatrix<f64>,
    cp: f64,
    condition: f64,
    gram_condition: f64,
}

impl QuadraticForm {
    pub fn spec(&self) -> &QFormSpec {
        &self.spec
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// The reduced matrix `M` in the jump variables.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn cp(&self) -> f64 {
        self.cp
    }

    /// `λ_max(M)/λ_min(M)`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Condition estimate of the joint Gram matrix `G_− + G_+`.
    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }
}

fn monomial_rows(indices: &[MultiIndex], p: usize, rule: &QuadratureRule) -> Vec<Vec<f64>> {
    let zero = Vec3::zeros();
    rule.points
        .iter()
        .map(|x| basis_derivatives(indices, p, &zero, 1.0, x, &MultiIndex::zero()))
        .collect()
}

fn gram(indices: &[MultiIndex], p: usize, rule: &QuadratureRule) -> DMatrix<f64> {
    let m = indices.len();
    let rows = monomial_rows(indices, p, rule);
    let mut g = DMatrix::zeros(m, m);
    for (row, w) in rows.iter().zip(&rule.weights) {
        for i in 0..m {
            for j in 0..=i {
                g[(i, j)] += w * row[i] * row[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::try_new(m.clone(), 1e-15, 0).expect("symmetric eigensolver did not converge");
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn assemble_qform(spec: &QFormSpec) -> Result<QuadraticForm> {
    let (n, p) = (spec.n, spec.p);
    let indices = enumerate_multi_indices(n, p);
    let degree = 2 * p + 2;
    let origin = Vec3::zeros();
    let plus = half_ball_rule(n, &origin, 1.0, &spec.normal, degree);
    let minus = half_ball_rule(n, &origin, 1.0, &(-spec.normal), degree);
    let gp = gram(&indices, p, &plus);
    let gm = gram(&indices, p, &minus);
    let a = &gm + &gp;
    let b = &gm - &gp;

    let (a_lo, a_hi) = extreme_eigenvalues(&a);
    let gram_condition = a_hi / a_lo;
    let chol = a.clone().cholesky().ok_or(Error::SingularGram {
        context: format!("half-ball pair (n={n}, p={p})"),
        condition: gram_condition,
    })?;
    let mut schur = &a - &b * chol.solve(&b);
    symmetrize(&mut schur);

    let weights: Vec<f64> = indices
        .iter()
        .map(|al| spec.r_hat.powi(al.order() as i32) / (2.0 * al.factorial()))
        .collect();
    let rn = spec.r_hat.powi(n as i32);
    let dim = indices.len();
    let matrix = DMatrix::from_fn(dim, dim, |i, j| rn * weights[i] * schur[(i, j)] * weights[j]);

    // λ_min(M) = 1/λ_max(M⁻¹), with M⁻¹ = r̂⁻ⁿ W⁻¹ S⁻¹ W⁻¹ built from the
    // well-scaled S so the small end of the spectrum keeps relative accuracy
    let (s_lo, _) = extreme_eigenvalues(&schur);
    if !(s_lo > 0.0) {
        return Err(Error::PositivityViolated(s_lo));
    }
    let s_chol = schur.clone().cholesky().ok_or(Error::PositivityViolated(s_lo))?;
    let s_inv = s_chol.inverse();
    let mut m_inv = DMatrix::from_fn(dim, dim, |i, j| s_inv[(i, j)] / (rn * weights[i] * weights[j]));
    symmetrize(&mut m_inv);
    let (mi_lo, mi_hi) = extreme_eigenvalues(&m_inv);
    if !(mi_lo > 0.0 && mi_hi.is_finite()) {
        return Err(Error::PositivityViolated(1.0 / mi_hi));
    }
    let cp = 1.0 / mi_hi;
    let (_, m_hi) = extreme_eigenvalues(&matrix);

    Ok(QuadraticForm {
        spec: spec.clone(),
        indices,
        weights,
        schur,
        matrix,
        cp,
        condition: m_hi * mi_hi,
        gram_condition,
    })
}

/// `Q(Δ)` for a jump vector ordered like [`enumerate_multi_indices`].
pub fn eval_q(qf: &QuadraticForm, delta: &[f64]) -> Result<f64> {
    if delta.len() != qf.indices.len() {
        return Err(Error::LengthMismatch {
            expected: qf.indices.len(),
            got: delta.len(),
        });
    }
    let d = DVector::from_iterator(delta.len(), delta.iter().zip(&qf.weights).map(|(x, w)| x * w));
    let v = d.dot(&(&qf.schur * &d)) * qf.spec.r_hat.powi(qf.spec.n as i32);
    Ok(v.max(0.0))
}

/// Smallest eigenvalue of the reduced matrix; `Q(Δ) ≥ C_p ‖Δ‖²`.
pub fn cp_constant(qf: &QuadraticForm) -> Result<f64> {
    if qf.cp > 0.0 {
        Ok(qf.cp)
    } else {
        Err(Error::PositivityViolated(qf.cp))
    }
}

/// Direct evaluation of the two-piece minimum: samples both half-balls of
/// radius `r̂` in the unscaled variable `ξ`, solves the normal equations for
/// the correction `v̂` and sums the squared residual.
pub fn brute_force_q_min(spec: &QFormSpec, delta: &[f64]) -> Result<f64> {
    let (n, p) = (spec.n, spec.p);
    let indices = enumerate_multi_indices(n, p);
    if delta.len() != indices.len() {
        return Err(Error::LengthMismatch {
            expected: indices.len(),
            got: delta.len(),
        });
    }
    let origin = Vec3::zeros();
    let degree = 2 * p + 2;
    let sides = [
        (half_ball_rule(n, &origin, spec.r_hat, &(-spec.normal), degree), 1.0),
        (half_ball_rule(n, &origin, spec.r_hat, &spec.normal, degree), -1.0),
    ];
    let m = indices.len();
    let mut normal = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut samples = Vec::new();
    for (rule, sign) in &sides {
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let row = basis_derivatives(&indices, p, &origin, 1.0, x, &MultiIndex::zero());
            let g: f64 = indices
                .iter()
                .zip(delta)
                .zip(&row)
                .map(|((al, d), r)| d * r / al.factorial())
                .sum::<f64>()
                * 0.5
                * sign;
            // residual v̂(ξ) + g(ξ): target is −g
            for i in 0..m {
                rhs[i] -= w * row[i] * g;
                for j in 0..m {
                    normal[(i, j)] += w * row[i] * row[j];
                }
            }
            samples.push((row, g, *w));
        }
    }
    // diagonal equilibration keeps the raw-coordinate system solvable for small r̂
    let scale: Vec<f64> = (0..m).map(|i| normal[(i, i)].sqrt().recip()).collect();
    let scaled = DMatrix::from_fn(m, m, |i, j| normal[(i, j)] * scale[i] * scale[j]);
    let scaled_rhs = DVector::from_fn(m, |i, _| rhs[i] * scale[i]);
    let y = scaled
        .clone()
        .cholesky()
        .map(|c| c.solve(&scaled_rhs))
        .or_else(|| scaled.lu().solve(&scaled_rhs))
        .ok_or(Error::SingularGram {
            context: "brute-force half-ball system".into(),
            condition: f64::INFINITY,
        })?;
    let v: Vec<f64> = (0..m).map(|i| y[i] * scale[i]).collect();
    Ok(samples
        .iter()
        .map(|(row, g, w)| {
            let r: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + g;
            w * r * r
        })
        .sum())
}

/// One row of a `C_p` table.
#[derive(Clone, Debug, PartialEq)]
pub struct CpRow {
    pub n: usize,
    pub p: usize,
    pub r_hat: f64,
    pub cp: f64,
    pub matrix_dim: usize,
    pub condition: f64,
}

pub fn cp_table(ns: &[usize], ps: &[usize], r_hats: &[f64]) -> Result<Vec<CpRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &p in ps {
            for &r_hat in r_hats {
                let qf = assemble_qform(&QFormSpec::new(n, p, r_hat)?)?;
                rows.push(CpRow {
                    n,
                    p,
                    r_hat,
                    cp: cp_constant(&qf)?,
                    matrix_dim: qf.indices.len(),
                    condition: qf.condition,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV body (header line included) with columns `n,p,r_hat,C_p,matrix_dim,cond`.
pub fn cp_table_csv(rows: &[CpRow]) -> String {
    let mut out = String::from("n,p,r_hat,C_p,matrix_dim,cond\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{},{:.16e}\n",
            r.n, r.p, r.r_hat, r.cp, r.matrix_dim, r.condition
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_jump_closed_form() {
        // min_c (c + 1/2)² r̂ + (c − 1/2)² r̂ at c = 0 gives r̂/2
        for r in [0.25, 0.5] {
            let qf = assemble_qform(&QFormSpec::new(1, 0, r).unwrap()).unwrap();
            assert_relative_eq!(qf.matrix()[(0, 0)], r / 2.0, max_relative = 1e-14);
            assert_relative_eq!(cp_constant(&qf).unwrap(), r / 2.0, max_relative = 1e-14);
            assert_relative_eq!(eval_q(&qf, &[1.0]).unwrap(), r / 2.0, max_relative = 1e-14);
            let spec = qf.spec().clone();
            assert_relative_eq!(brute_force_q_min(&spec, &[1.0]).unwrap(), r / 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn linear_jump_closed_form() {
        // Δ = (0, 1): both residuals are a ∓ bt − t/2 in t = |ξ|, so b = 0,
        // a = r/4 and the minimum is 2 ∫₀^r (t/2 − r/4)² dt = r³/24
        let r: f64 = 0.25;
        let qf = assemble_qform(&QFormSpec::new(1, 1, r).unwrap()).unwrap();
        assert_relative_eq!(eval_q(&qf, &[0.0, 1.0]).unwrap(), r.powi(3) / 24.0, max_relative = 1e-12);
    }

    #[test]
    fn length_checked() {
        let qf = assemble_qform(&QFormSpec::new(2, 1, 0.25).unwrap()).unwrap();
        assert!(matches!(eval_q(&qf, &[1.0]), Err(Error::LengthMismatch { expected: 3, got: 1 })));
    }

    #[test]
    fn invalid_specs() {
        assert!(QFormSpec::new(4, 1, 0.25).is_err());
        assert!(QFormSpec::new(2, 1, 1.5).is_err());
        assert!(QFormSpec::with_normal(2, 1, 0.25, Vec3::new(0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn table_csv_layout() {
        let rows = cp_table(&[1], &[0], &[0.25]).unwrap();
        let csv = cp_table_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,p,r_hat,C_p,matrix_dim,cond"));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&fields[..3], &["1", "0", "2.5000000000000000e-1"]);
        assert_relative_eq!(fields[3].parse::<f64>().unwrap(), 0.125, max_relative = 1e-13);
        assert_eq!(fields[4], "1");
    }
}
