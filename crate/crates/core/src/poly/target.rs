use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::BoxDomain;

use super::{enumerate_multi_indices, multi_indices_of_order, poly_dim, MultiIndex, NormExponent};

/// Analytic function with partial derivatives of every order used by the
/// checks. Piecewise-smooth targets return classical derivatives away from
/// their breakpoints.
pub trait TargetFunction: Send + Sync {
    fn name(&self) -> String;

    fn derivative(&self, x: &Vec3, alpha: &MultiIndex) -> f64;

    fn value(&self, x: &Vec3) -> f64 {
        self.derivative(x, &MultiIndex::zero())
    }

    /// Highest derivative order available, `None` for all orders.
    fn max_derivative_order(&self) -> Option<u32> {
        None
    }

    /// Closed-form `|u|_{W^k_s}` on `domain`, when known.
    fn exact_seminorm(&self, _order: u32, _s: NormExponent, _domain: &BoxDomain) -> Option<f64> {
        None
    }

    /// First-coordinate positions of planes where the target is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `Π_{k<n} sin(π x_k)`.
#[derive(Clone, Copy, Debug)]
pub struct SinPiX {
    pub dim: usize,
}

fn shifted_sin(arg: f64, order: u32) -> f64 {
    match order % 4 {
        0 => arg.sin(),
        1 => arg.cos(),
        2 => -arg.sin(),
        _ => -arg.cos(),
    }
}

impl TargetFunction for SinPiX {
    fn name(&self) -> String {
        "sin_pi_x".into()
    }

    fn derivative(&self, x: &Vec3, alpha: &MultiIndex) -> f64 {
        (0..self.dim)
            .map(|k| PI.powi(alpha.0[k] as i32) * shifted_sin(PI * x[k], alpha.0[k]))
            .product()
    }

    fn exact_seminorm(&self, order: u32, s: NormExponent, domain: &BoxDomain) -> Option<f64> {
        if *domain != BoxDomain::unit(self.dim) {
            return None;
        }
        let count = multi_indices_of_order(self.dim, order as usize).len() as f64;
        let k = order as i32;
        let n = self.dim as i32;
        Some(match s {
            NormExponent::Inf => PI.powi(k),
            NormExponent::Two => (count * PI.powi(2 * k) / 2f64.powi(n)).sqrt(),
            NormExponent::One => count * PI.powi(k) * (2.0 / PI).powi(n),
        })
    }
}

/// `sin(ω·x + φ)`.
#[derive(Clone, Copy, Debug)]
pub struct Sine {
    pub omega: [f64; 3],
    pub phase: f64,
}

impl TargetFunction for Sine {
    fn name(&self) -> String {
        format!("sin({},{},{};{})", self.omega[0], self.omega[1], self.omega[2], self.phase)
    }

    fn derivative(&self, x: &Vec3, alpha: &MultiIndex) -> f64 {
        let arg = self.omega[0] * x.x + self.omega[1] * x.y + self.omega[2] * x.z + self.phase;
        let factor: f64 = (0..3).map(|k| self.omega[k].powi(alpha.0[k] as i32)).product();
        factor * shifted_sin(arg, alpha.order())
    }
}

/// Unit step in the first coordinate: 0 left of `location`, 1 from it on.
#[derive(Clone, Copy, Debug)]
pub struct Step {
    pub location: f64,
}

impl TargetFunction for Step {
    fn name(&self) -> String {
        format!("step({})", self.location)
    }

    fn derivative(&self, x: &Vec3, alpha: &MultiIndex) -> f64 {
        if alpha.order() > 0 || x.x < self.location {
            0.0
        } else {
            1.0
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.location]
    }
}

/// `|x_1 − location|`.
#[derive(Clone, Copy, Debug)]
pub struct AbsKink {
    pub location: f64,
}

impl TargetFunction for AbsKink {
    fn name(&self) -> String {
        format!("abs_kink({})", self.location)
    }

    fn derivative(&self, x: &Vec3, alpha: &MultiIndex) -> f64 {
        let d = x.x - self.location;
        match (alpha.0[0], alpha.0[1] + alpha.0[2]) {
            (0, 0) => d.abs(),
            (1, 0) => {
                if d < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
            _ => 0.0,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.location]
    }
}

/// `Σ_γ a_γ x^γ` over graded-lex multi-indices.
#[derive(Clone, Debug)]
pub struct PolyTarget {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl PolyTarget {
    pub fn new(dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        let degree = (0..=32)
            .find(|&q| poly_dim(dim, q) == coeffs.len())
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "{} coefficients do not fill a complete polynomial space in {dim} variables",
                    coeffs.len()
                ))
            })?;
        Ok(PolyTarget { dim, degree, coeffs })
    }
}

impl TargetFunction for PolyTarget {
    fn name(&self) -> String {
        let c: Vec<String> = self.coeffs.iter().map(|v| v.to_string()).collect();
        format!("poly({})", c.join(","))
    }

    fn derivative(&self, x: &Vec3, alpha: &MultiIndex) -> f64 {
        enumerate_multi_indices(self.dim, self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(g, _)| g.dominates(alpha))
            .map(|(g, c)| {
                let mut v = *c;
                for k in 0..3 {
                    for j in (g.0[k] - alpha.0[k] + 1)..=g.0[k] {
                        v *= j as f64;
                    }
                    v *= x[k].powi((g.0[k] - alpha.0[k]) as i32);
                }
                v
            })
            .sum()
    }

    fn exact_seminorm(&self, order: u32, _s: NormExponent, _domain: &BoxDomain) -> Option<f64> {
        if order as usize > self.degree {
            Some(0.0)
        } else {
            None
        }
    }
}

/// Target name with optional numeric parameters, written `name` or
/// `name:a,b,...`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub name: String,
    pub params: Vec<f64>,
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let params = match rest {
            Some(r) if !r.trim().is_empty() => r
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad target parameter `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        Ok(TargetSpec {
            name: name.trim().to_string(),
            params,
        })
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            let p: Vec<String> = self.params.iter().map(|v| v.to_string()).collect();
            write!(f, ":{}", p.join(","))?;
        }
        Ok(())
    }
}

/// Built-in targets: `sin_pi_x`, `sin:ω₁,…[,φ]`, `step[:a]`,
/// `abs_kink[:a]`, `poly:c…`. Steps and kinks default to
/// `a = 0.5 + coarse_h/3`, which keeps them off the skeleton of every
/// bisection of a mesh with element size `coarse_h` along the first axis.
pub fn build_target(spec: &TargetSpec, dim: usize, coarse_h: f64) -> Result<Box<dyn TargetFunction>> {
    let p = &spec.params;
    let location = || p.first().copied().unwrap_or(0.5 + coarse_h / 3.0);
    match spec.name.as_str() {
        "sin_pi_x" => Ok(Box::new(SinPiX { dim })),
        "sin" => {
            let mut omega = [0.0; 3];
            for (k, w) in omega.iter_mut().enumerate().take(dim) {
                *w = p.get(k).copied().unwrap_or(1.0);
            }
            let phase = p.get(dim).copied().unwrap_or(0.0);
            Ok(Box::new(Sine { omega, phase }))
        }
        "step" => Ok(Box::new(Step { location: location() })),
        "abs_kink" => Ok(Box::new(AbsKink { location: location() })),
        "poly" => Ok(Box::new(PolyTarget::new(dim, p.clone())?)),
        other => Err(Error::InvalidArgument(format!(
            "unknown target `{other}` (expected sin_pi_x, sin, step, abs_kink or poly)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // finite differences of order-k derivatives against order-(k+1) derivatives
    fn check_consistency(u: &dyn TargetFunction, dim: usize, x: &Vec3) {
        let step = 1e-6;
        for alpha in enumerate_multi_indices(dim, 3) {
            for k in 0..dim {
                let mut e = Vec3::zeros();
                e[k] = step;
                let fd = (u.derivative(&(x + e), &alpha) - u.derivative(&(x - e), &alpha)) / (2.0 * step);
                let mut next = alpha;
                next.0[k] += 1;
                let exact = u.derivative(x, &next);
                assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{alpha} {k}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn derivative_consistency() {
        let x = Vec3::new(0.31, 0.47, 0.73);
        check_consistency(&SinPiX { dim: 3 }, 3, &x);
        check_consistency(
            &Sine {
                omega: [1.3, -0.7, 2.0],
                phase: 0.2,
            },
            3,
            &x,
        );
        check_consistency(&PolyTarget::new(2, vec![1.0, -2.0, 0.5, 3.0, 1.5, -1.0]).unwrap(), 2, &x);
        check_consistency(&AbsKink { location: 0.1 }, 2, &x);
    }

    #[test]
    fn spec_parsing() {
        let s: TargetSpec = "step:0.6".parse().unwrap();
        assert_eq!(s.name, "step");
        assert_eq!(s.params, vec![0.6]);
        assert_eq!(s.to_string(), "step:0.6");
        let u = build_target(&"step".parse().unwrap(), 1, 0.25).unwrap();
        assert_eq!(u.breakpoints(), vec![0.5 + 0.25 / 3.0]);
        assert!(build_target(&"bogus".parse().unwrap(), 1, 0.25).is_err());
        assert!(build_target(&"poly:1,2".parse().unwrap(), 2, 0.25).is_err());
    }
}
