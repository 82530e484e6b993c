//! Scaled derivative jumps across interfaces (Type A) and scaled interior
//! derivative errors (Type I), their aggregated indicators, and reports.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::{Interface, Mesh};
use crate::poly::{MultiIndex, NormExponent, PiecewisePolyField, TargetFunction};

/// Jumps of all derivatives of order `<= p` at one interface point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpVector {
    pub interface: usize,
    pub point: Vec<f64>,
    /// `J^α = ⟦∂^α u_h⟧`.
    pub raw: Vec<f64>,
    /// `D^α = J^α / h^{p+1-|α|}`.
    pub d: Vec<f64>,
    /// `D̃^α = J^α h_min^{|α|} / h^{p+1}`.
    pub d_tilde: Vec<f64>,
    /// Euclidean norm of `D`.
    pub norm: f64,
    pub norm_tilde: f64,
    /// Euclidean norm of the order-`k` block of `D`, `k = 0..=p`.
    pub order_norms: Vec<f64>,
    pub max_abs: f64,
}

fn coords(x: &Vec3, n: usize) -> Vec<f64> {
    x.iter().take(n).copied().collect()
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn order_norms(values: &[f64], indices: &[MultiIndex], p: usize) -> Vec<f64> {
    let mut acc = vec![0.0; p + 1];
    for (v, a) in values.iter().zip(indices) {
        acc[a.order() as usize] += v * v;
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Both scalings of the jump vector at `interface.point`.
pub fn scaled_jump_vector(field: &PiecewisePolyField<'_>, interface: &Interface) -> JumpVector {
    let mesh = field.mesh();
    let p = field.degree();
    let (h, h_min) = (mesh.h(), mesh.h_min());
    let indices = field.indices();
    let raw: Vec<f64> = indices.iter().map(|a| field.interface_jump(interface, a)).collect();
    let d: Vec<f64> = raw
        .iter()
        .zip(indices)
        .map(|(j, a)| j / h.powi((p + 1) as i32 - a.order() as i32))
        .collect();
    let d_tilde: Vec<f64> = raw
        .iter()
        .zip(indices)
        .map(|(j, a)| j * h_min.powi(a.order() as i32) / h.powi(p as i32 + 1))
        .collect();
    JumpVector {
        interface: interface.id,
        point: coords(&interface.point, mesh.dimension()),
        norm: euclid(&d),
        norm_tilde: euclid(&d_tilde),
        order_norms: order_norms(&d, indices, p),
        max_abs: d.iter().fold(0.0, |m, v| m.max(v.abs())),
        raw,
        d,
        d_tilde,
    }
}

/// Jump vectors of every interior interface, ordered by interface id.
pub fn jump_vectors(field: &PiecewisePolyField<'_>) -> Vec<JumpVector> {
    field
        .mesh()
        .interior_interfaces()
        .par_iter()
        .map(|i| scaled_jump_vector(field, i))
        .collect()
}

/// `Σ h^n x_i^s` for finite `s`, `max x_i` for `s = ∞`.
pub fn aggregate(norms: &[f64], h: f64, n: usize, s: NormExponent) -> f64 {
    match s {
        NormExponent::Inf => norms.iter().fold(0.0, |m, &v| m.max(v)),
        _ => {
            let e = s.value();
            h.powi(n as i32) * norms.iter().map(|v| v.powf(e)).sum::<f64>()
        }
    }
}

/// Type A indicator: `Σ_i h^n ‖D_i‖^s`, or `max_i ‖D_i‖` for `s = ∞`.
pub fn type_a_indicator(field: &PiecewisePolyField<'_>, s: NormExponent) -> f64 {
    let mesh = field.mesh();
    let norms: Vec<f64> = jump_vectors(field).iter().map(|j| j.norm).collect();
    aggregate(&norms, mesh.h(), mesh.dimension(), s)
}

/// Scaled derivative errors and derivative magnitudes at one sample point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteriorVector {
    pub element: usize,
    pub point: Vec<f64>,
    /// `∂^α(u - u_h)(x_i)`, when a target is given.
    pub raw: Option<Vec<f64>>,
    /// `F^α = ∂^α(u - u_h)(x_i) / h^{p+1-|α|}`.
    pub f: Option<Vec<f64>>,
    pub norm: Option<f64>,
    /// `M^α = |∂^α u_h(x_i)|`.
    pub magnitudes: Vec<f64>,
}

pub fn interior_vector(
    field: &PiecewisePolyField<'_>,
    u: Option<&dyn TargetFunction>,
    element: usize,
    x: &Vec3,
) -> Result<InteriorVector> {
    let mesh = field.mesh();
    let p = field.degree();
    let h = mesh.h();
    let indices = field.indices();
    let uh = indices
        .iter()
        .map(|a| field.eval_derivative(element, x, a))
        .collect::<Result<Vec<f64>>>()?;
    let (raw, f, norm) = match u {
        Some(u) => {
            let raw: Vec<f64> = indices.iter().zip(&uh).map(|(a, v)| u.derivative(x, a) - v).collect();
            let f: Vec<f64> = raw
                .iter()
                .zip(indices)
                .map(|(r, a)| r / h.powi((p + 1) as i32 - a.order() as i32))
                .collect();
            let norm = euclid(&f);
            (Some(raw), Some(f), Some(norm))
        }
        None => (None, None, None),
    };
    Ok(InteriorVector {
        element,
        point: coords(x, mesh.dimension()),
        raw,
        f,
        norm,
        magnitudes: uh.iter().map(|v| v.abs()).collect(),
    })
}

/// One sample point per element.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleRule {
    /// Geometric centroid.
    Centroid,
    VertexAverage,
    Points(Vec<Vec3>),
}

impl SampleRule {
    pub fn name(&self) -> &'static str {
        match self {
            SampleRule::Centroid => "centroid",
            SampleRule::VertexAverage => "vertex-average",
            SampleRule::Points(_) => "user-points",
        }
    }

    pub fn points(&self, mesh: &Mesh) -> Result<Vec<Vec3>> {
        match self {
            SampleRule::Centroid => Ok((0..mesh.num_elements()).map(|e| mesh.geometric_centroid(e)).collect()),
            SampleRule::VertexAverage => Ok((0..mesh.num_elements()).map(|e| mesh.centroid(e)).collect()),
            SampleRule::Points(pts) => {
                if pts.len() != mesh.num_elements() {
                    return Err(Error::LengthMismatch {
                        expected: mesh.num_elements(),
                        got: pts.len(),
                    });
                }
                Ok(pts.clone())
            }
        }
    }
}

pub fn interior_vectors(
    field: &PiecewisePolyField<'_>,
    u: Option<&dyn TargetFunction>,
    rule: &SampleRule,
) -> Result<Vec<InteriorVector>> {
    let points = rule.points(field.mesh())?;
    points
        .par_iter()
        .enumerate()
        .map(|(e, x)| interior_vector(field, u, e, x))
        .collect()
}

/// Type I indicator: `Σ_i h^n ‖F_i‖^s`, or `max_i ‖F_i‖` for `s = ∞`.
pub fn type_i_indicator(
    field: &PiecewisePolyField<'_>,
    u: Option<&dyn TargetFunction>,
    s: NormExponent,
    rule: &SampleRule,
) -> Result<f64> {
    let u = u.ok_or(Error::MissingTarget)?;
    let mesh = field.mesh();
    let norms: Vec<f64> = interior_vectors(field, Some(u), rule)?
        .iter()
        .map(|v| v.norm.unwrap_or(0.0))
        .collect();
    Ok(aggregate(&norms, mesh.h(), mesh.dimension(), s))
}

/// Flagging policy. `None` for the jump threshold means ten times the
/// median of `‖D_i‖`; `None` for the magnitude threshold disables it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Thresholds {
    pub jump: Option<f64>,
    pub magnitude: Option<f64>,
}

pub const DEFAULT_MEDIAN_FACTOR: f64 = 10.0;

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndicatorValue {
    pub s: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessSummary {
    pub type_a: Vec<IndicatorValue>,
    pub type_a_tilde: Vec<IndicatorValue>,
    pub type_i: Option<Vec<IndicatorValue>>,
    /// `max_i M^α_i` per multi-index.
    pub max_magnitudes: Vec<f64>,
    pub max_jump_norm: f64,
    pub jump_threshold: f64,
    pub magnitude_threshold: Option<f64>,
    pub flagged_interfaces: Vec<usize>,
    pub flagged_elements: Vec<usize>,
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub p: usize,
    pub n: usize,
    pub h: f64,
    pub h_min: f64,
    pub sample_rule: String,
    pub multi_indices: Vec<String>,
    pub summary: SmoothnessSummary,
    pub interfaces: Vec<JumpVector>,
    pub elements: Vec<InteriorVector>,
}

pub fn smoothness_report(
    field: &PiecewisePolyField<'_>,
    u: Option<&dyn TargetFunction>,
    rule: &SampleRule,
    thresholds: Thresholds,
) -> Result<SmoothnessReport> {
    let mesh = field.mesh();
    let (h, n) = (mesh.h(), mesh.dimension());
    let jumps = jump_vectors(field);
    let interiors = interior_vectors(field, u, rule)?;
    let norms: Vec<f64> = jumps.iter().map(|j| j.norm).collect();
    let norms_tilde: Vec<f64> = jumps.iter().map(|j| j.norm_tilde).collect();
    let per_s = |values: &[f64]| {
        NormExponent::all()
            .iter()
            .map(|&s| IndicatorValue {
                s: s.as_str().to_string(),
                value: aggregate(values, h, n, s),
            })
            .collect::<Vec<_>>()
    };
    let type_i = u.map(|_| {
        let f: Vec<f64> = interiors.iter().map(|v| v.norm.unwrap_or(0.0)).collect();
        per_s(&f)
    });
    let mut max_magnitudes = vec![0.0; field.indices().len()];
    for v in &interiors {
        for (m, x) in max_magnitudes.iter_mut().zip(&v.magnitudes) {
            *m = f64::max(*m, *x);
        }
    }
    let jump_threshold = thresholds.jump.unwrap_or(DEFAULT_MEDIAN_FACTOR * median(&norms));
    let flagged_interfaces: Vec<usize> = jumps
        .iter()
        .filter(|j| j.norm > jump_threshold)
        .map(|j| j.interface)
        .collect();
    let flagged_elements: Vec<usize> = match thresholds.magnitude {
        Some(t) => interiors
            .iter()
            .filter(|v| v.magnitudes.iter().any(|m| *m > t))
            .map(|v| v.element)
            .collect(),
        None => Vec::new(),
    };
    let verdict = if flagged_interfaces.is_empty() && flagged_elements.is_empty() {
        "smooth"
    } else {
        "flagged"
    };
    Ok(SmoothnessReport {
        p: field.degree(),
        n,
        h,
        h_min: mesh.h_min(),
        sample_rule: rule.name().to_string(),
        multi_indices: field.indices().iter().map(|a| a.to_string()).collect(),
        summary: SmoothnessSummary {
            type_a: per_s(&norms),
            type_a_tilde: per_s(&norms_tilde),
            type_i,
            max_jump_norm: norms.iter().fold(0.0, |m, &v| m.max(v)),
            max_magnitudes,
            jump_threshold,
            magnitude_threshold: thresholds.magnitude,
            flagged_interfaces,
            flagged_elements,
            verdict: verdict.to_string(),
        },
        interfaces: jumps,
        elements: interiors,
    })
}

impl SmoothnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per interface: id, point coordinates, `‖D‖`, `max_α |D^α|`, flag.
    pub fn interfaces_csv(&self) -> String {
        let axes = ["x", "y", "z"];
        let mut out = String::from("id");
        for a in axes.iter().take(self.n) {
            let _ = write!(out, ",{a}");
        }
        out.push_str(",norm_D,max_abs_D,flag\n");
        for j in &self.interfaces {
            let _ = write!(out, "{}", j.interface);
            for c in &j.point {
                let _ = write!(out, ",{c:.16e}");
            }
            let flag = self.summary.flagged_interfaces.binary_search(&j.interface).is_ok();
            let _ = writeln!(out, ",{:.16e},{:.16e},{}", j.norm, j.max_abs, u8::from(flag));
        }
        out
    }
}
