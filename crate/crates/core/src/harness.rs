//! Verification harness: the local jump lower bound on safe balls, the
//! global lower-bound bracket, refinement studies with fitted rates, the
//! necessary-condition verdict and the 1D jump bound.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};
use crate::mesh::{build_structured_mesh, refine_uniform, BoxDomain, ElementKind, Interface, Mesh};
use crate::poly::{
    basis_derivatives, build_target, element_l2_fit, enumerate_multi_indices, error_norm,
    lagrange_interpolant_1d, load_field, sobolev_seminorm, DualField, MultiIndex, NormExponent,
    PiecewisePolyField, Region, TargetFunction, TargetSpec,
};
use crate::qform::{assemble_qform, eval_q, QFormSpec, QuadraticForm};
use crate::quadrature::split_ball_rule;
use crate::smoothness::{aggregate, interior_vectors, jump_vectors, SampleRule};

/// Quantities below this are treated as exact zeros in rate fits and
/// ratio tests.
pub const FLOOR: f64 = 1e-13;

/// Both sides of the local lower bound at one interface.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalBound {
    pub interface: usize,
    pub radius: f64,
    /// `‖u^I − u^R‖²` on the ball.
    pub lhs: f64,
    /// `min_{v ∈ P_p} ‖v − u^R‖²` on the ball.
    pub min_residual: f64,
    /// `h_minⁿ h^{2p+2} Q(D̃)`.
    pub q_value: f64,
    /// `min_residual / q_value`, 1 when both vanish.
    pub ratio: f64,
    /// `|min_residual − q_value| / max(min_residual, q_value)`.
    pub identity_error: f64,
    pub inequality_holds: bool,
}

fn facet_distance(mesh: &Mesh, e: usize, f: usize, x: &Vec3) -> f64 {
    let pts = mesh.facet_points(e, f);
    match pts.len() {
        1 => (pts[0] - x).norm(),
        2 => geometry::point_segment_distance(x, &pts[0], &pts[1]),
        3 => geometry::point_triangle_distance(x, &pts[0], &pts[1], &pts[2]),
        _ => geometry::point_triangle_distance(x, &pts[0], &pts[1], &pts[2])
            .min(geometry::point_triangle_distance(x, &pts[0], &pts[2], &pts[3])),
    }
}

/// Whether the ball of radius `delta` around the interface point stays in
/// the union of the two adjacent elements without touching their other
/// facets.
pub fn ball_is_admissible(mesh: &Mesh, interface: &Interface, delta: f64) -> bool {
    let x = &interface.point;
    let nf = mesh.kind().facets().len();
    [(interface.left, interface.left_facet), (interface.right, interface.right_facet)]
        .iter()
        .all(|&(e, own)| (0..nf).filter(|&f| f != own).all(|f| facet_distance(mesh, e, f, x) >= delta))
}

/// Quadratic form for an interface: same degree as the field, scaled radius
/// `delta / h_min` and the interface normal.
pub fn qform_for_interface(mesh: &Mesh, interface: &Interface, p: usize, delta: f64) -> Result<QuadraticForm> {
    let spec = QFormSpec::with_normal(mesh.dimension(), p, delta / mesh.h_min(), interface.normal)?;
    assemble_qform(&spec)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares `‖u^I − u^R‖²`, the best `P_p` residual of `u^R` and
/// `h_minⁿ h^{2p+2} Q(D̃)` on the ball of radius `delta` centred at the
/// interface point. `u^I` is the covolume polynomial of this interface.
pub fn local_lower_bound_check(
    field: &PiecewisePolyField<'_>,
    dual_field: &DualField,
    interface: &Interface,
    delta: f64,
    qf: &QuadraticForm,
) -> Result<LocalBound> {
    let mesh = field.mesh();
    let (n, p) = (mesh.dimension(), field.degree());
    let (h, h_min) = (mesh.h(), mesh.h_min());
    let r_hat = delta / h_min;
    let spec = qf.spec();
    if spec.p != p || spec.n != n {
        return Err(Error::InvalidArgument(format!(
            "quadratic form built for n={}, p={}; field has n={n}, p={p}",
            spec.n, spec.p
        )));
    }
    if relative_gap(spec.r_hat, r_hat) > 1e-12 {
        return Err(Error::RadiusMismatch {
            expected: spec.r_hat,
            got: r_hat,
        });
    }
    if (spec.normal.dot(&interface.normal).abs() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "quadratic form normal does not match interface {}",
            interface.id
        )));
    }
    if !ball_is_admissible(mesh, interface, delta) {
        return Err(Error::DiskCrossesInterface {
            interface: interface.id,
            radius: delta,
        });
    }
    let x0 = interface.point;
    let (minus, plus) = split_ball_rule(n, &x0, delta, &interface.normal, 2 * p + 2);
    let sides = [(minus, interface.left), (plus, interface.right)];

    let ui = &dual_field.polys[interface.id];
    let lhs: f64 = sides
        .iter()
        .map(|(rule, e)| rule.integrate(|x| (ui.value(x) - field.value_unchecked(*e, x)).powi(2)))
        .sum();

    let indices = enumerate_multi_indices(n, p);
    let m = indices.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut samples = Vec::new();
    for (rule, e) in &sides {
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let row = basis_derivatives(&indices, p, &x0, delta, x, &MultiIndex::zero());
            let target = field.value_unchecked(*e, x);
            for i in 0..m {
                rhs[i] += w * row[i] * target;
                for j in 0..m {
                    gram[(i, j)] += w * row[i] * row[j];
                }
            }
            samples.push((row, target, *w));
        }
    }
    let coef = gram.cholesky().map(|c| c.solve(&rhs)).ok_or(Error::SingularGram {
        context: format!("ball around interface {}", interface.id),
        condition: f64::INFINITY,
    })?;
    let min_residual: f64 = samples
        .iter()
        .map(|(row, t, w)| {
            let v: f64 = row.iter().zip(coef.iter()).map(|(a, b)| a * b).sum();
            w * (v - t).powi(2)
        })
        .sum();

    let d_tilde: Vec<f64> = indices
        .iter()
        .map(|a| field.interface_jump(interface, a) * h_min.powi(a.order() as i32) / h.powi(p as i32 + 1))
        .collect();
    let q_value = h_min.powi(n as i32) * h.powi(2 * p as i32 + 2) * eval_q(qf, &d_tilde)?;
    let ratio = if min_residual == 0.0 && q_value == 0.0 {
        1.0
    } else {
        min_residual / q_value
    };
    Ok(LocalBound {
        interface: interface.id,
        radius: delta,
        lhs,
        min_residual,
        q_value,
        ratio,
        identity_error: relative_gap(min_residual, q_value),
        inequality_holds: lhs >= min_residual * (1.0 - 1e-10) - 1e-300,
    })
}

/// Local checks over every interior interface whose ball is admissible;
/// returns the checks and the number of interfaces skipped.
pub fn local_lower_bound_sweep(
    field: &PiecewisePolyField<'_>,
    dual_field: &DualField,
    delta: f64,
) -> Result<(Vec<LocalBound>, usize)> {
    let mesh = field.mesh();
    let mut forms: Vec<QuadraticForm> = Vec::new();
    let mut jobs = Vec::new();
    let mut skipped = 0;
    for i in mesh.interior_interfaces() {
        if !ball_is_admissible(mesh, i, delta) {
            skipped += 1;
            continue;
        }
        let k = match forms
            .iter()
            .position(|q| (q.spec().normal.dot(&i.normal).abs() - 1.0).abs() <= 1e-12)
        {
            Some(k) => k,
            None => {
                forms.push(qform_for_interface(mesh, i, field.degree(), delta)?);
                forms.len() - 1
            }
        };
        jobs.push((i, k));
    }
    let checks = jobs
        .par_iter()
        .map(|(i, k)| local_lower_bound_check(field, dual_field, i, delta, &forms[*k]))
        .collect::<Result<Vec<_>>>()?;
    Ok((checks, skipped))
}

/// The global lower-bound bracket `(Σ hⁿ‖D_i‖^s)^{1/s} − |u|_{W^{p+1}_s}`
/// next to the measured error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalBound {
    pub s: String,
    pub error: f64,
    pub indicator_term: f64,
    pub seminorm: f64,
    pub bracket: f64,
    /// `error / (h^{p+1} bracket)`, absent when `bracket <= 0`.
    pub ratio: Option<f64>,
    pub note: String,
    pub cp: f64,
}

fn domain_of(mesh: &Mesh) -> Option<BoxDomain> {
    mesh.structured_origin().map(|o| o.domain)
}

fn seminorm(u: &dyn TargetFunction, mesh: &Mesh, order: u32, s: NormExponent) -> Result<f64> {
    if let Some(d) = domain_of(mesh) {
        if let Some(v) = u.exact_seminorm(order, s, &d) {
            return Ok(v);
        }
    }
    sobolev_seminorm(u, mesh, order, s)
}

pub fn global_lower_bound_report(
    u: &dyn TargetFunction,
    field: &PiecewisePolyField<'_>,
    s: NormExponent,
    qf: &QuadraticForm,
) -> Result<GlobalBound> {
    let mesh = field.mesh();
    let p = field.degree();
    let h = mesh.h();
    let error = error_norm(u, field, s, &Region::Domain)?;
    let norms: Vec<f64> = jump_vectors(field).iter().map(|j| j.norm).collect();
    let agg = aggregate(&norms, h, mesh.dimension(), s);
    let indicator_term = match s {
        NormExponent::Inf => agg,
        _ => agg.powf(1.0 / s.value()),
    };
    let semi = seminorm(u, mesh, p as u32 + 1, s)?;
    let bracket = indicator_term - semi;
    let (ratio, note) = if bracket > 0.0 {
        (Some(error / (h.powi(p as i32 + 1) * bracket)), "bracket > 0".to_string())
    } else {
        (None, "bracket <= 0".to_string())
    };
    Ok(GlobalBound {
        s: s.as_str().into(),
        error,
        indicator_term,
        seminorm: semi,
        bracket,
        ratio,
        note,
        cp: qf.cp(),
    })
}

/// How each level's `u^R` is produced.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    /// Piecewise Lagrange interpolation (1D only).
    Interpolant,
    /// Element-wise L² best approximation.
    ElementL2,
    /// One field file per level, coarse to fine.
    FieldFiles(Vec<PathBuf>),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Interpolant => "interpolant",
            Method::ElementL2 => "l2",
            Method::FieldFiles(_) => "files",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub target: TargetSpec,
    pub dim: usize,
    pub kind: ElementKind,
    pub p: usize,
    pub method: Method,
    pub levels: usize,
    /// Divisions per axis of the coarsest mesh on the unit box.
    pub coarse_divisions: usize,
    pub norms: Vec<NormExponent>,
    /// Constant added to the field on one element per level.
    pub corruption: Option<f64>,
    pub sample_rule: SampleRule,
}

impl StudyConfig {
    pub fn new(target: TargetSpec, dim: usize, kind: ElementKind, p: usize, method: Method, levels: usize) -> Self {
        StudyConfig {
            target,
            dim,
            kind,
            p,
            method,
            levels,
            coarse_divisions: 4,
            norms: NormExponent::all().to_vec(),
            corruption: None,
            sample_rule: SampleRule::Centroid,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.levels < 3 {
            return Err(Error::InsufficientLevels {
                need: 3,
                got: self.levels,
            });
        }
        if self.kind.dimension() != self.dim {
            return Err(Error::KindDimensionMismatch {
                kind: self.kind,
                dim: self.dim,
            });
        }
        if self.method == Method::Interpolant && self.dim != 1 {
            return Err(Error::InvalidArgument("the interpolant method needs a 1D mesh".into()));
        }
        if let Method::FieldFiles(files) = &self.method {
            if files.len() != self.levels {
                return Err(Error::InvalidArgument(format!(
                    "{} field files given for {} levels",
                    files.len(),
                    self.levels
                )));
            }
        }
        if self.norms.is_empty() {
            return Err(Error::InvalidArgument("at least one norm exponent is required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SValue {
    pub s: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub h_min: f64,
    pub elements: usize,
    pub errors: Vec<SValue>,
    pub type_a: Vec<SValue>,
    pub type_i: Vec<SValue>,
    /// `max_i max_{|α| = k} |J_i^{(α)}|` for `k = 0..=p`.
    pub max_jump_by_order: Vec<f64>,
    /// `max_i ‖D_i‖`.
    pub max_jump_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rate {
    pub quantity: String,
    /// Slope of `log q` against `log h`; absent when fewer than two levels
    /// stay above the floor.
    pub rate: Option<f64>,
    /// Root-mean-square residual of the log-log fit.
    pub residual: Option<f64>,
    pub levels_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyResult {
    pub target: String,
    pub dim: usize,
    pub kind: String,
    pub p: usize,
    pub method: String,
    pub levels: Vec<LevelResult>,
    pub rates: Vec<Rate>,
}

/// Least-squares slope on the finest `max(L − 1, 3)` levels, skipping
/// values below [`FLOOR`].
pub fn fit_rate(quantity: &str, h: &[f64], q: &[f64]) -> Rate {
    let l = h.len();
    let take = (l.saturating_sub(1)).max(3).min(l);
    let pts: Vec<(f64, f64)> = h[l - take..]
        .iter()
        .zip(&q[l - take..])
        .filter(|(_, v)| v.is_finite() && **v >= FLOOR)
        .map(|(h, v)| (h.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Rate {
            quantity: quantity.into(),
            rate: None,
            residual: None,
            levels_used: pts.len(),
        };
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / k).sqrt();
    Rate {
        quantity: quantity.into(),
        rate: Some(slope),
        residual: Some(rms),
        levels_used: pts.len(),
    }
}

impl StudyResult {
    pub fn rate(&self, quantity: &str) -> Option<&Rate> {
        self.rates.iter().find(|r| r.quantity == quantity)
    }

    pub fn series(&self, quantity: &str) -> Option<Vec<f64>> {
        self.levels.iter().map(|l| l.quantity(quantity)).collect()
    }

    pub fn h(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.h).collect()
    }
}

impl LevelResult {
    /// Value of a named column: `error_L{s}`, `typeA_{s}`, `typeI_{s}`,
    /// `maxJ_k{k}` or `max_norm_D`.
    pub fn quantity(&self, name: &str) -> Option<f64> {
        let find = |v: &[SValue], s: &str| v.iter().find(|x| x.s == s).map(|x| x.value);
        if let Some(s) = name.strip_prefix("error_L") {
            find(&self.errors, s)
        } else if let Some(s) = name.strip_prefix("typeA_") {
            find(&self.type_a, s)
        } else if let Some(s) = name.strip_prefix("typeI_") {
            find(&self.type_i, s)
        } else if let Some(k) = name.strip_prefix("maxJ_k") {
            k.parse::<usize>().ok().and_then(|k| self.max_jump_by_order.get(k).copied())
        } else if name == "max_norm_D" {
            Some(self.max_jump_norm)
        } else {
            None
        }
    }

    fn columns(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for v in &self.errors {
            out.push((format!("error_L{}", v.s), v.value));
        }
        for v in &self.type_a {
            out.push((format!("typeA_{}", v.s), v.value));
        }
        for v in &self.type_i {
            out.push((format!("typeI_{}", v.s), v.value));
        }
        for (k, v) in self.max_jump_by_order.iter().enumerate() {
            out.push((format!("maxJ_k{k}"), *v));
        }
        out.push(("max_norm_D".into(), self.max_jump_norm));
        out
    }
}

fn level_result(
    level: usize,
    u: &dyn TargetFunction,
    field: &PiecewisePolyField<'_>,
    cfg: &StudyConfig,
) -> Result<LevelResult> {
    let mesh = field.mesh();
    let (h, n, p) = (mesh.h(), mesh.dimension(), field.degree());
    let errors = cfg
        .norms
        .iter()
        .map(|&s| {
            Ok(SValue {
                s: s.as_str().into(),
                value: error_norm(u, field, s, &Region::Domain)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let jumps = jump_vectors(field);
    let norms: Vec<f64> = jumps.iter().map(|j| j.norm).collect();
    let interiors = interior_vectors(field, Some(u), &cfg.sample_rule)?;
    let f_norms: Vec<f64> = interiors.iter().map(|v| v.norm.unwrap_or(0.0)).collect();
    let per_s = |vals: &[f64]| {
        cfg.norms
            .iter()
            .map(|&s| SValue {
                s: s.as_str().into(),
                value: aggregate(vals, h, n, s),
            })
            .collect::<Vec<_>>()
    };
    let mut max_jump_by_order = vec![0.0f64; p + 1];
    for j in &jumps {
        for (v, a) in j.raw.iter().zip(field.indices()) {
            let k = a.order() as usize;
            max_jump_by_order[k] = max_jump_by_order[k].max(v.abs());
        }
    }
    Ok(LevelResult {
        level,
        h,
        h_min: mesh.h_min(),
        elements: mesh.num_elements(),
        errors,
        type_a: per_s(&norms),
        type_i: per_s(&f_norms),
        max_jump_by_order,
        max_jump_norm: norms.iter().fold(0.0, |m, &v| m.max(v)),
    })
}

fn build_field<'m>(u: &dyn TargetFunction, mesh: &'m Mesh, cfg: &StudyConfig) -> Result<PiecewisePolyField<'m>> {
    let field = match cfg.method {
        Method::Interpolant => lagrange_interpolant_1d(u, mesh, cfg.p)?,
        Method::ElementL2 => element_l2_fit(u, mesh, cfg.p)?,
        Method::FieldFiles(_) => unreachable!("field files carry their own meshes"),
    };
    Ok(corrupt(field, cfg.corruption))
}

fn corrupt(field: PiecewisePolyField<'_>, amount: Option<f64>) -> PiecewisePolyField<'_> {
    match amount {
        Some(a) => {
            let e = field.mesh().num_elements() / 2;
            field.with_element_offset(e, a)
        }
        None => field,
    }
}

/// Refinement study on the unit box (or on user field files): builds each
/// level's field, evaluates errors, indicators and jump maxima, and fits
/// rates. Levels are processed in parallel; results are ordered by level.
pub fn convergence_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let levels: Vec<LevelResult> = match &cfg.method {
        Method::FieldFiles(files) => {
            let data = files.iter().map(load_field).collect::<Result<Vec<_>>>()?;
            let coarse_h = data[0].mesh.h();
            let u = build_target(&cfg.target, cfg.dim, coarse_h)?;
            data.par_iter()
                .enumerate()
                .map(|(l, d)| {
                    if d.mesh.dimension() != cfg.dim || d.degree != cfg.p {
                        return Err(Error::InvalidArgument(format!(
                            "field file for level {l} has dimension {} and degree {}",
                            d.mesh.dimension(),
                            d.degree
                        )));
                    }
                    let field = corrupt(d.field()?, cfg.corruption);
                    level_result(l, u.as_ref(), &field, cfg)
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => {
            let divisions = vec![cfg.coarse_divisions; cfg.dim];
            let mut meshes = vec![build_structured_mesh(&BoxDomain::unit(cfg.dim), cfg.dim, &divisions, cfg.kind)?];
            for _ in 1..cfg.levels {
                let next = refine_uniform(meshes.last().unwrap())?;
                meshes.push(next);
            }
            let u = build_target(&cfg.target, cfg.dim, meshes[0].h())?;
            meshes
                .par_iter()
                .enumerate()
                .map(|(l, m)| {
                    let field = build_field(u.as_ref(), m, cfg)?;
                    level_result(l, u.as_ref(), &field, cfg)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let rates = levels[0]
        .columns()
        .iter()
        .map(|(name, _)| {
            let q: Vec<f64> = levels.iter().map(|l| l.quantity(name).unwrap()).collect();
            fit_rate(name, &h, &q)
        })
        .collect();
    Ok(StudyResult {
        target: cfg.target.to_string(),
        dim: cfg.dim,
        kind: cfg.kind.to_string(),
        p: cfg.p,
        method: cfg.method.name().into(),
        levels,
        rates,
    })
}

/// Tolerances of the verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerdictTolerances {
    /// Slack on rate comparisons.
    pub rate: f64,
    /// Allowed growth `q_{l+1}/q_l − 1` between consecutive levels.
    pub ratio: f64,
}

impl Default for VerdictTolerances {
    fn default() -> Self {
        VerdictTolerances { rate: 0.2, ratio: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Boundedness {
    pub quantity: String,
    /// Consecutive ratios over the last three levels.
    pub ratios: Vec<f64>,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub verdict: Outcome,
    pub error_quantity: String,
    pub error_rate: Option<f64>,
    pub optimal_rate: f64,
    /// Error converges at the optimal order.
    pub optimal_convergence: Option<bool>,
    pub indicators: Vec<Boundedness>,
    pub indicators_bounded: bool,
    /// Optimal convergence implies bounded indicators.
    pub implication_holds: Option<bool>,
    pub indicator_rate: Option<f64>,
    /// `max ‖D_i‖` grows at least like `1/h`.
    pub blow_up: Option<bool>,
    /// Blow-up implies suboptimal convergence.
    pub remark_holds: Option<bool>,
    pub tolerances: VerdictTolerances,
}

fn boundedness(result: &StudyResult, quantity: &str, tol: f64) -> Option<Boundedness> {
    let q = result.series(quantity)?;
    let tail = &q[q.len().saturating_sub(3)..];
    let ratios: Vec<f64> = tail
        .windows(2)
        .map(|w| {
            if w[0] < FLOOR && w[1] < FLOOR {
                1.0
            } else {
                w[1] / w[0]
            }
        })
        .collect();
    let bounded = ratios.iter().all(|r| *r <= 1.0 + tol);
    Some(Boundedness {
        quantity: quantity.into(),
        ratios,
        bounded,
    })
}

/// Evaluates "optimal convergence ⇒ bounded indicators" and "indicator
/// blow-up ⇒ suboptimal convergence" on the study numbers. The L² error is
/// used when present.
pub fn necessary_condition_verdict(result: &StudyResult, tol: VerdictTolerances) -> Result<Verdict> {
    if result.levels.len() < 3 {
        return Err(Error::InsufficientLevels {
            need: 3,
            got: result.levels.len(),
        });
    }
    let first = &result.levels[0];
    let s = if first.errors.iter().any(|v| v.s == "2") {
        "2".to_string()
    } else {
        first.errors[0].s.clone()
    };
    let error_quantity = format!("error_L{s}");
    let optimal = result.p as f64 + 1.0;
    let errors = result.series(&error_quantity).unwrap();
    let error_rate = result.rate(&error_quantity).and_then(|r| r.rate);
    let optimal_convergence = match error_rate {
        Some(r) => Some(r >= optimal - tol.rate),
        None if errors.iter().all(|e| *e < FLOOR) => Some(true),
        None => None,
    };
    let names: Vec<String> = first
        .type_a
        .iter()
        .map(|v| format!("typeA_{}", v.s))
        .chain(first.type_i.iter().map(|v| format!("typeI_{}", v.s)))
        .collect();
    let indicators: Vec<Boundedness> = names
        .iter()
        .filter_map(|n| boundedness(result, n, tol.ratio))
        .collect();
    let indicators_bounded = indicators.iter().all(|b| b.bounded);
    let implication_holds = optimal_convergence.map(|a| !a || indicators_bounded);

    let d = result.series("max_norm_D").unwrap();
    let indicator_rate = result.rate("max_norm_D").and_then(|r| r.rate);
    let blow_up = match indicator_rate {
        Some(r) => Some(r <= -1.0 + tol.rate),
        None if d.iter().all(|v| *v < FLOOR) => Some(false),
        None => None,
    };
    let suboptimal = error_rate.map(|r| r < optimal - tol.rate);
    let remark_holds = match (blow_up, suboptimal) {
        (Some(false), _) => Some(true),
        (Some(true), Some(sub)) => Some(sub),
        (Some(true), None) => optimal_convergence.map(|o| !o),
        (None, _) => None,
    };
    let verdict = match (implication_holds, remark_holds) {
        (Some(true), Some(true)) => Outcome::Pass,
        (Some(false), _) | (_, Some(false)) => Outcome::Fail,
        _ => Outcome::Inconclusive,
    };
    Ok(Verdict {
        verdict,
        error_quantity,
        error_rate,
        optimal_rate: optimal,
        optimal_convergence,
        indicators,
        indicators_bounded,
        implication_holds,
        indicator_rate,
        blow_up,
        remark_holds,
        tolerances: tol,
    })
}

/// One level of the 1D jump bound
/// `|J^{(k)}| ≤ C h^{−k}(h^{p+1}|u|_{W^{p+1}_∞} + ‖u_R − u‖_∞)` with `C = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpBound {
    pub k: usize,
    pub h: f64,
    pub max_jump: f64,
    pub bound: f64,
    /// `max_jump / bound`; absent when the jumps vanish (trivially satisfied).
    pub ratio: Option<f64>,
}

pub fn appendix_jump_bound_check(
    u: &dyn TargetFunction,
    field: &PiecewisePolyField<'_>,
    k: usize,
) -> Result<JumpBound> {
    let mesh = field.mesh();
    if mesh.dimension() != 1 {
        return Err(Error::InvalidArgument("the jump bound check is one-dimensional".into()));
    }
    let p = field.degree();
    if k > p {
        return Err(Error::InvalidArgument(format!("derivative order {k} exceeds degree {p}")));
    }
    let h = mesh.h();
    let alpha = MultiIndex::new(&[k as u32]);
    let max_jump = mesh
        .interior_interfaces()
        .iter()
        .map(|i| field.interface_jump(i, &alpha).abs())
        .fold(0.0, f64::max);
    let semi = seminorm(u, mesh, p as u32 + 1, NormExponent::Inf)?;
    let err = error_norm(u, field, NormExponent::Inf, &Region::Domain)?;
    let bound = h.powi(-(k as i32)) * (h.powi(p as i32 + 1) * semi + err);
    // jumps at round-off level relative to the field scale count as zero
    let scale = field
        .coefficients()
        .iter()
        .flatten()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        * h.powi(-(k as i32));
    let ratio = if max_jump <= FLOOR * scale.max(1.0) {
        None
    } else {
        Some(max_jump / bound)
    };
    Ok(JumpBound {
        k,
        h,
        max_jump,
        bound,
        ratio,
    })
}

/// `max/min` of the defined ratios; `None` when none are defined.
pub fn ratio_band(bounds: &[JumpBound]) -> Option<f64> {
    let r: Vec<f64> = bounds.iter().filter_map(|b| b.ratio).collect();
    if r.is_empty() {
        return None;
    }
    let hi = r.iter().cloned().fold(f64::MIN, f64::max);
    let lo = r.iter().cloned().fold(f64::MAX, f64::min);
    Some(hi / lo)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per level. `header` lines are written first as `# key: value`
/// comments.
pub fn study_csv(result: &StudyResult, header: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let cols = result.levels[0].columns();
    out.push_str("level,h,h_min,elements");
    for (name, _) in &cols {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for l in &result.levels {
        let _ = write!(out, "{},{},{},{}", l.level, fmt_f(l.h), fmt_f(l.h_min), l.elements);
        for (_, v) in l.columns() {
            let _ = write!(out, ",{}", fmt_f(v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_dual_covolume;
    use crate::poly::{local_l2_project_dual, SinPiX};
    use approx::assert_relative_eq;

    fn unit_interval(n: usize) -> Mesh {
        build_structured_mesh(&BoxDomain::unit(1), 1, &[n], ElementKind::Interval).unwrap()
    }

    #[test]
    fn half_step_closed_form() {
        // u^R = ∓1/2 around the midpoint, h = 1/4, δ = h/4: min residual δ/4 · 2 = h/8
        let m = unit_interval(4);
        let f = PiecewisePolyField::new(&m, 0, vec![vec![-0.5], vec![-0.5], vec![0.5], vec![0.5]]).unwrap();
        let dual = build_dual_covolume(&m).unwrap();
        let u = SinPiX { dim: 1 };
        let df = local_l2_project_dual(&u, &dual, 0).unwrap();
        let i = &m.interior_interfaces()[1];
        let delta = m.h_min() / 4.0;
        let qf = qform_for_interface(&m, i, 0, delta).unwrap();
        let b = local_lower_bound_check(&f, &df, i, delta, &qf).unwrap();
        assert_relative_eq!(b.min_residual, 0.25 / 8.0, max_relative = 1e-14);
        assert_relative_eq!(b.q_value, 0.25 / 8.0, max_relative = 1e-14);
        assert!(b.inequality_holds);
    }

    #[test]
    fn continuous_field_has_zero_bound() {
        let m = unit_interval(4);
        let u = SinPiX { dim: 1 };
        let f = PiecewisePolyField::from_raw_monomials(&m, 1, &vec![vec![1.0, 2.0]; 4]).unwrap();
        let dual = build_dual_covolume(&m).unwrap();
        let df = local_l2_project_dual(&u, &dual, 1).unwrap();
        let (checks, skipped) = local_lower_bound_sweep(&f, &df, m.h_min() / 4.0).unwrap();
        assert_eq!(skipped, 0);
        for c in checks {
            assert!(c.q_value.abs() < 1e-25 && c.min_residual < 1e-25, "{c:?}");
        }
    }

    #[test]
    fn mismatched_radius_rejected() {
        let m = unit_interval(4);
        let f = PiecewisePolyField::zeros(&m, 0);
        let dual = build_dual_covolume(&m).unwrap();
        let df = local_l2_project_dual(&SinPiX { dim: 1 }, &dual, 0).unwrap();
        let i = &m.interior_interfaces()[0];
        let qf = qform_for_interface(&m, i, 0, m.h_min() / 4.0).unwrap();
        assert!(matches!(
            local_lower_bound_check(&f, &df, i, m.h_min() / 8.0, &qf),
            Err(Error::RadiusMismatch { .. })
        ));

        let m2 = build_structured_mesh(&BoxDomain::unit(2), 2, &[2, 2], ElementKind::Triangle).unwrap();
        let f2 = PiecewisePolyField::zeros(&m2, 0);
        let dual2 = build_dual_covolume(&m2).unwrap();
        let df2 = local_l2_project_dual(&SinPiX { dim: 2 }, &dual2, 0).unwrap();
        let i2 = &m2.interior_interfaces()[0];
        let delta = 0.9 * m2.h_min();
        let wide = qform_for_interface(&m2, i2, 0, delta).unwrap();
        assert!(matches!(
            local_lower_bound_check(&f2, &df2, i2, delta, &wide),
            Err(Error::DiskCrossesInterface { .. })
        ));
    }

    #[test]
    fn rate_of_exact_power() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let q: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        let r = fit_rate("q", &h, &q);
        assert_relative_eq!(r.rate.unwrap(), 2.0, epsilon = 1e-12);
        assert!(r.residual.unwrap() < 1e-12);
        assert_eq!(r.levels_used, 3);
        let zero = fit_rate("z", &h, &[0.0; 4]);
        assert!(zero.rate.is_none());
    }

    #[test]
    fn polynomial_target_reproduced() {
        let cfg = StudyConfig::new("poly:1,2,-1".parse().unwrap(), 1, ElementKind::Interval, 2, Method::Interpolant, 3);
        let r = convergence_study(&cfg).unwrap();
        for l in &r.levels {
            assert!(l.errors.iter().all(|e| e.value < 1e-12));
            assert!(l.max_jump_by_order.iter().all(|j| *j < 1e-12));
        }
        let v = necessary_condition_verdict(&r, VerdictTolerances::default()).unwrap();
        assert_eq!(v.verdict, Outcome::Pass);
    }

    #[test]
    fn too_few_levels() {
        let cfg = StudyConfig::new("sin_pi_x".parse().unwrap(), 1, ElementKind::Interval, 1, Method::Interpolant, 2);
        assert!(matches!(convergence_study(&cfg), Err(Error::InsufficientLevels { .. })));
    }
}
