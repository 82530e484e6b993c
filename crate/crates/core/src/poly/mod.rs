//! Multi-index polynomial calculus for piecewise fields: derivatives and
//! one-sided traces, target functions, interpolation, element-wise and
//! covolume L² projections, and error norms.

mod field;
mod fit;
mod io;
mod norms;
mod target;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub use fit::{element_l2_fit, lagrange_interpolant_1d, local_l2_project_dual, DualField};
pub use field::PiecewisePolyField;
pub use io::{field_from_json, field_to_json, load_field, save_field, FieldData, FieldFile};
pub use norms::{error_norm, linf_samples_per_axis, sobolev_seminorm, Region};
pub use target::{
    build_target, AbsKink, PolyTarget, SinPiX, Sine, Step, TargetFunction, TargetSpec,
};

/// Multi-index `α = (α₁, α₂, α₃)`; unused trailing entries are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub [u32; 3]);

impl MultiIndex {
    pub fn new(components: &[u32]) -> Self {
        let mut a = [0u32; 3];
        a[..components.len()].copy_from_slice(components);
        MultiIndex(a)
    }

    pub fn zero() -> Self {
        MultiIndex([0; 3])
    }

    /// `|α|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }

    pub fn dominates(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Dimension of `P_p` in `n` variables, `C(p + n, n)`.
pub fn poly_dim(n: usize, p: usize) -> usize {
    binomial(p + n, n)
}

/// All `α` with `|α| <= p` in `n` variables, ordered by total degree and,
/// within a degree, by descending leading components.
pub fn enumerate_multi_indices(n: usize, p: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(poly_dim(n, p));
    for k in 0..=p as u32 {
        match n {
            1 => out.push(MultiIndex([k, 0, 0])),
            2 => {
                for a in (0..=k).rev() {
                    out.push(MultiIndex([a, k - a, 0]));
                }
            }
            3 => {
                for a in (0..=k).rev() {
                    for b in (0..=k - a).rev() {
                        out.push(MultiIndex([a, b, k - a - b]));
                    }
                }
            }
            _ => panic!("dimension must be 1, 2 or 3"),
        }
    }
    out
}

/// Multi-indices of exactly order `k`.
pub fn multi_indices_of_order(n: usize, k: usize) -> Vec<MultiIndex> {
    enumerate_multi_indices(n, k)
        .into_iter()
        .filter(|a| a.order() as usize == k)
        .collect()
}

/// Derivative of the monomial `t^β` in the variable `t`, evaluated from
/// precomputed powers: `β!/(β-α)! t^(β-α)`, zero unless `β >= α`.
fn monomial_derivative(beta: &MultiIndex, alpha: &MultiIndex, powers: &[Vec<f64>; 3]) -> f64 {
    let mut v = 1.0;
    for k in 0..3 {
        let (b, a) = (beta.0[k], alpha.0[k]);
        if b < a {
            return 0.0;
        }
        for j in (b - a + 1)..=b {
            v *= j as f64;
        }
        v *= powers[k][(b - a) as usize];
    }
    v
}

fn powers_of(t: &Vec3, p: usize) -> [Vec<f64>; 3] {
    let mut out = [vec![1.0; p + 1], vec![1.0; p + 1], vec![1.0; p + 1]];
    for (k, row) in out.iter_mut().enumerate() {
        for j in 1..=p {
            row[j] = row[j - 1] * t[k];
        }
    }
    out
}

/// Values of `∂^α` applied to each basis monomial `((x - c)/s)^β`.
pub fn basis_derivatives(
    indices: &[MultiIndex],
    p: usize,
    center: &Vec3,
    scale: f64,
    x: &Vec3,
    alpha: &MultiIndex,
) -> Vec<f64> {
    let t = (x - center) / scale;
    let powers = powers_of(&t, p);
    let factor = scale.powi(-(alpha.order() as i32));
    indices
        .iter()
        .map(|b| factor * monomial_derivative(b, alpha, &powers))
        .collect()
}

/// One polynomial in the centered-scaled monomial basis of degree `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalPoly {
    pub dim: usize,
    pub degree: usize,
    pub center: Vec3,
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

/// `∂^α` of `Σ c_β ((x - center)/scale)^β` at `x`.
pub(crate) fn eval_expansion(
    indices: &[MultiIndex],
    degree: usize,
    center: &Vec3,
    scale: f64,
    coeffs: &[f64],
    x: &Vec3,
    alpha: &MultiIndex,
) -> f64 {
    if alpha.order() as usize > degree {
        return 0.0;
    }
    let t = (x - center) / scale;
    let powers = powers_of(&t, degree);
    let sum: f64 = indices
        .iter()
        .zip(coeffs)
        .map(|(b, c)| c * monomial_derivative(b, alpha, &powers))
        .sum();
    sum * scale.powi(-(alpha.order() as i32))
}

impl LocalPoly {
    pub fn derivative(&self, x: &Vec3, alpha: &MultiIndex) -> f64 {
        let indices = enumerate_multi_indices(self.dim, self.degree);
        eval_expansion(&indices, self.degree, &self.center, self.scale, &self.coeffs, x, alpha)
    }

    pub fn value(&self, x: &Vec3) -> f64 {
        self.derivative(x, &MultiIndex::zero())
    }
}

/// Converts coefficients of raw monomials `x^γ` into the basis
/// `((x - c)/s)^β` by binomial expansion of `x_k = c_k + s t_k`.
pub fn raw_to_scaled(n: usize, p: usize, raw: &[f64], center: &Vec3, scale: f64) -> Vec<f64> {
    let indices = enumerate_multi_indices(n, p);
    let position = |b: &MultiIndex| indices.iter().position(|a| a == b).unwrap();
    let mut out = vec![0.0; indices.len()];
    for (gamma, &coef) in indices.iter().zip(raw) {
        if coef == 0.0 {
            continue;
        }
        // expand each factor (c_k + s t_k)^γ_k
        let mut terms: Vec<(MultiIndex, f64)> = vec![(MultiIndex::zero(), coef)];
        for k in 0..3 {
            let g = gamma.0[k];
            if g == 0 {
                continue;
            }
            let mut next = Vec::new();
            for (b, w) in &terms {
                for j in 0..=g {
                    let mut nb = *b;
                    nb.0[k] = j;
                    let c = binomial(g as usize, j as usize) as f64
                        * center[k].powi((g - j) as i32)
                        * scale.powi(j as i32);
                    next.push((nb, w * c));
                }
            }
            terms = next;
        }
        for (b, w) in terms {
            out[position(&b)] += w;
        }
    }
    out
}

/// Norm exponent `s` of the `L^s` and `W^{k}_s` norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormExponent {
    One,
    Two,
    Inf,
}

impl NormExponent {
    pub fn as_str(self) -> &'static str {
        match self {
            NormExponent::One => "1",
            NormExponent::Two => "2",
            NormExponent::Inf => "inf",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            NormExponent::One => 1.0,
            NormExponent::Two => 2.0,
            NormExponent::Inf => f64::INFINITY,
        }
    }

    pub fn all() -> [NormExponent; 3] {
        [NormExponent::One, NormExponent::Two, NormExponent::Inf]
    }
}

impl fmt::Display for NormExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(NormExponent::One),
            "2" => Ok(NormExponent::Two),
            "inf" | "infinity" | "∞" => Ok(NormExponent::Inf),
            other => Err(Error::UnsupportedNorm(other.to_string())),
        }
    }
}
