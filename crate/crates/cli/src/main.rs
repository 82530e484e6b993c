use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use smoothcheck::harness::{
    convergence_study, global_lower_bound_report, local_lower_bound_sweep, necessary_condition_verdict,
    qform_for_interface, study_csv, Method, Outcome, StudyConfig, VerdictTolerances,
};
use smoothcheck::mesh::lemmas::{
    random_identity_config, random_inequality_config, verify_angle_identity, verify_angle_inequality,
};
use smoothcheck::mesh::{
    build_dual_covolume, build_structured_mesh, load_mesh, quality_metrics, safe_disk_radius, BoxDomain,
    ElementKind, Mesh,
};
use smoothcheck::poly::{
    build_target, element_l2_fit, lagrange_interpolant_1d, local_l2_project_dual, FieldFile, NormExponent,
    PiecewisePolyField, TargetSpec,
};
use smoothcheck::qform::{cp_table, cp_table_csv};
use smoothcheck::smoothness::{smoothness_report, SampleRule, Thresholds};
use smoothcheck::Error as CoreError;

const EXIT_PASS: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_FAIL: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "smoothcheck", version, about = "Numerical smoothness indicators and refinement studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a mesh and report its quality metrics and safe radius.
    CheckMesh {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Type A / Type I indicators of a field.
    Indicator {
        #[arg(long)]
        field: PathBuf,
        /// Mesh to use instead of the one named in the field file.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Target for the Type I quantities, e.g. `sin_pi_x` or `step:0.6`.
        #[arg(long)]
        target: Option<String>,
        /// Norm exponents to list in the summary (the report always holds all three).
        #[arg(long, value_delimiter = ',', default_values_t = vec!["inf".to_string()])]
        s: Vec<String>,
        #[arg(long)]
        jump_threshold: Option<f64>,
        #[arg(long)]
        magnitude_threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = Sample::Centroid)]
        sample: Sample,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-interface CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Table of the positivity constant of the jump quadratic form.
    CpTable {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<usize>,
        #[arg(long = "r-hat", value_delimiter = ',', required = true)]
        r_hat: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-configuration checks of the two dihedral-angle relations.
    VerifyLemmas {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local and global lower bounds for one field.
    LowerBound {
        #[arg(long)]
        target: String,
        /// Field file; without it the field is built with `--method`.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "interval")]
        kind: String,
        #[arg(long, default_value_t = 8)]
        divisions: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, value_enum, default_value_t = FieldMethod::L2)]
        method: FieldMethod,
        #[arg(long, default_value = "2")]
        s: String,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study with fitted rates and the necessary-condition verdict.
    Study {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "interval")]
        kind: String,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        levels: usize,
        #[arg(long, value_enum)]
        method: StudyMethod,
        /// Field files, coarse to fine, for `--method files`.
        #[arg(long, value_delimiter = ',')]
        fields: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        coarse: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec!["1".to_string(), "2".to_string(), "inf".to_string()])]
        s: Vec<String>,
        /// Constant added to one element per level.
        #[arg(long)]
        corrupt: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        rate_tol: f64,
        #[arg(long, default_value_t = 0.5)]
        ratio_tol: f64,
        /// Study CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verdict JSON; standard error when absent.
        #[arg(long)]
        verdict: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sample {
    Centroid,
    VertexAverage,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FieldMethod {
    Interpolant,
    L2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StudyMethod {
    Interpolant,
    L2,
    Files,
}

/// Usage problems found after argument parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<CoreError>() {
        Some(
            CoreError::InvalidArgument(_)
            | CoreError::UnsupportedNorm(_)
            | CoreError::KindDimensionMismatch { .. }
            | CoreError::InsufficientLevels { .. }
            | CoreError::MissingTarget,
        ) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SMOOTHCHECK_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("SMOOTHCHECK_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(usage("SMOOTHCHECK_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

/// Tool version, command line, options and input hashes.
struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    fn new(command: &str) -> Self {
        let args: Vec<String> = std::env::args().skip(1).collect();
        Provenance {
            entries: vec![
                ("tool".into(), format!("smoothcheck {}", env!("CARGO_PKG_VERSION"))),
                ("command".into(), command.into()),
                ("command_line".into(), args.join(" ")),
            ],
        }
    }

    fn option(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((format!("option.{key}"), value.to_string()));
        self
    }

    fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.entries
            .push((format!("sha256.{}", path.display()), digest));
        Ok(self)
    }

    fn json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.entries {
            map.insert(k.clone(), Value::String(v.clone()));
        }
        Value::Object(map)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn parse_norm(s: &str) -> Result<NormExponent> {
    s.parse::<NormExponent>().map_err(|e| usage(e.to_string()))
}

fn parse_kind(kind: &str, dim: usize) -> Result<ElementKind> {
    let k: ElementKind = kind.parse().map_err(|e: CoreError| usage(e.to_string()))?;
    if k.dimension() != dim {
        return Err(usage(format!("element kind `{k}` does not live in dimension {dim}")));
    }
    Ok(k)
}

fn parse_target(spec: &str) -> Result<TargetSpec> {
    spec.parse::<TargetSpec>().map_err(|e| usage(e.to_string()))
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::CheckMesh { mesh, gamma, out } => {
            if !(gamma > 0.0) {
                return Err(usage("--gamma must be positive"));
            }
            let mut prov = Provenance::new("check-mesh");
            prov.option("gamma", gamma).input(&mesh)?;
            let m = load_mesh(&mesh)?;
            let q = quality_metrics(&m, gamma);
            let report = json!({
                "provenance": prov.json(),
                "dimension": m.dimension(),
                "kind": m.kind().as_str(),
                "vertices": m.vertices().len(),
                "elements": m.num_elements(),
                "interior_interfaces": m.interior_interfaces().len(),
                "boundary_facets": m.boundary_facets().len(),
                "quality": q,
            });
            emit(out.as_deref(), &pretty(&report))?;
            Ok(EXIT_PASS)
        }
        Command::Indicator {
            field,
            mesh,
            target,
            s,
            jump_threshold,
            magnitude_threshold,
            sample,
            out,
            csv,
        } => {
            let norms = s.iter().map(|x| parse_norm(x)).collect::<Result<Vec<_>>>()?;
            let target = target.as_deref().map(parse_target).transpose()?;
            let mut prov = Provenance::new("indicator");
            prov.option("s", s.join(","))
                .option("target", target.as_ref().map(|t| t.to_string()).unwrap_or_default())
                .option("jump_threshold", fmt_opt(jump_threshold))
                .option("magnitude_threshold", fmt_opt(magnitude_threshold))
                .option("sample", format!("{sample:?}").to_lowercase())
                .input(&field)?;
            if let Some(m) = &mesh {
                prov.input(m)?;
            }
            let text = fs::read_to_string(&field).with_context(|| format!("reading {}", field.display()))?;
            let data = match &mesh {
                Some(mp) => {
                    let file: FieldFile =
                        serde_json::from_str(&text).map_err(|e| CoreError::Malformed(e.to_string()))?;
                    let m = load_mesh(mp)?;
                    smoothcheck::poly::FieldData {
                        mesh: m,
                        mesh_path: Some(mp.clone()),
                        degree: file.degree,
                        coefficients: file.coefficients,
                    }
                }
                None => smoothcheck::poly::field_from_json(&text, field.parent())?,
            };
            let f = data.field()?;
            let u = match &target {
                Some(t) => Some(build_target(t, data.mesh.dimension(), data.mesh.h())?),
                None => None,
            };
            let rule = match sample {
                Sample::Centroid => SampleRule::Centroid,
                Sample::VertexAverage => SampleRule::VertexAverage,
            };
            let thresholds = Thresholds {
                jump: jump_threshold,
                magnitude: magnitude_threshold,
            };
            let report = smoothness_report(&f, u.as_deref(), &rule, thresholds)?;
            let selected: Vec<Value> = norms
                .iter()
                .map(|s| {
                    let a = report.summary.type_a.iter().find(|v| v.s == s.as_str()).map(|v| v.value);
                    let i = report
                        .summary
                        .type_i
                        .as_ref()
                        .and_then(|t| t.iter().find(|v| v.s == s.as_str()).map(|v| v.value));
                    json!({"s": s.as_str(), "type_a": a, "type_i": i})
                })
                .collect();
            let out_json = json!({
                "provenance": prov.json(),
                "selected": selected,
                "report": report,
            });
            emit(out.as_deref(), &pretty(&out_json))?;
            if let Some(c) = csv {
                fs::write(&c, report.interfaces_csv()).with_context(|| format!("writing {}", c.display()))?;
            }
            Ok(if report.summary.verdict == "smooth" {
                EXIT_PASS
            } else {
                EXIT_FAIL
            })
        }
        Command::CpTable { n, p, r_hat, out } => {
            if n.iter().any(|d| !(1..=3).contains(d)) {
                return Err(usage("--n values must be 1, 2 or 3"));
            }
            if r_hat.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
                return Err(usage("--r-hat values must lie in (0, 1)"));
            }
            let mut prov = Provenance::new("cp-table");
            prov.option("n", join(&n)).option("p", join(&p)).option("r_hat", join(&r_hat));
            let rows = cp_table(&n, &p, &r_hat)?;
            let mut text = header_lines(&prov);
            text.push_str(&cp_table_csv(&rows));
            emit(out.as_deref(), &text)?;
            Ok(EXIT_PASS)
        }
        Command::VerifyLemmas { samples, seed, tol, out } => {
            if samples == 0 {
                return Err(usage("--samples must be positive"));
            }
            let mut prov = Provenance::new("verify-lemmas");
            prov.option("samples", samples).option("seed", seed).option("tol", tol);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst_identity: f64 = 0.0;
            let mut worst_direct: f64 = 0.0;
            for _ in 0..samples {
                let c = random_identity_config(&mut rng);
                let r = verify_angle_identity(&c[0], &c[1], &c[2], &c[3])?;
                worst_identity = worst_identity.max(r.residual);
                worst_direct = worst_direct.max(r.direct_residual);
            }
            let mut min_ratio = f64::INFINITY;
            let mut failures = 0usize;
            for _ in 0..samples {
                let c = random_inequality_config(&mut rng);
                let r = verify_angle_inequality(&c[0], &c[1], &c[2], &c[3])?;
                min_ratio = min_ratio.min(r.ratio);
                failures += usize::from(!r.lower_holds);
            }
            let identity_ok = worst_identity <= tol;
            let inequality_ok = failures == 0;
            let report = json!({
                "provenance": prov.json(),
                "identity": {
                    "samples": samples,
                    "max_residual": worst_identity,
                    "max_direct_residual": worst_direct,
                    "tolerance": tol,
                    "holds": identity_ok,
                },
                "inequality": {
                    "samples": samples,
                    "min_ratio": min_ratio,
                    "violations": failures,
                    "holds": inequality_ok,
                },
            });
            emit(out.as_deref(), &pretty(&report))?;
            Ok(if identity_ok && inequality_ok { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::LowerBound {
            target,
            field,
            mesh,
            dim,
            kind,
            divisions,
            p,
            method,
            s,
            gamma,
            out,
        } => {
            let s_norm = parse_norm(&s)?;
            let spec = parse_target(&target)?;
            let mut prov = Provenance::new("lower-bound");
            prov.option("target", &spec)
                .option("p", p)
                .option("s", s_norm)
                .option("gamma", gamma);
            let owned_field;
            let owned_mesh: Mesh;
            let (m, f): (&Mesh, PiecewisePolyField<'_>) = match &field {
                Some(fp) => {
                    prov.input(fp)?;
                    owned_field = smoothcheck::poly::load_field(fp)?;
                    (&owned_field.mesh, owned_field.field()?)
                }
                None => {
                    owned_mesh = match &mesh {
                        Some(mp) => {
                            prov.input(mp)?;
                            load_mesh(mp)?
                        }
                        None => {
                            let k = parse_kind(&kind, dim)?;
                            prov.option("dim", dim).option("kind", k).option("divisions", divisions);
                            build_structured_mesh(&BoxDomain::unit(dim), dim, &vec![divisions; dim], k)?
                        }
                    };
                    prov.option("method", format!("{method:?}").to_lowercase());
                    let u = build_target(&spec, owned_mesh.dimension(), owned_mesh.h())?;
                    let f = match method {
                        FieldMethod::Interpolant => lagrange_interpolant_1d(u.as_ref(), &owned_mesh, p)?,
                        FieldMethod::L2 => element_l2_fit(u.as_ref(), &owned_mesh, p)?,
                    };
                    (&owned_mesh, f)
                }
            };
            let p = f.degree();
            let u = build_target(&spec, m.dimension(), m.h())?;
            let delta = safe_disk_radius(m, gamma)?;
            let dual = build_dual_covolume(m)?;
            let df = local_l2_project_dual(u.as_ref(), &dual, p)?;
            let (checks, skipped) = local_lower_bound_sweep(&f, &df, delta)?;
            let first = m
                .interior_interfaces()
                .first()
                .ok_or_else(|| usage("the mesh has no interior interfaces"))?;
            let qf = qform_for_interface(m, first, p, delta)?;
            let global = global_lower_bound_report(u.as_ref(), &f, s_norm, &qf)?;
            let max_identity = checks.iter().map(|c| c.identity_error).fold(0.0, f64::max);
            let inequality = checks.iter().all(|c| c.inequality_holds);
            let ok = max_identity <= 1e-9 && inequality;
            let report = json!({
                "provenance": prov.json(),
                "radius": delta,
                "r_hat": delta / m.h_min(),
                "checked": checks.len(),
                "skipped": skipped,
                "max_identity_error": max_identity,
                "inequality_holds": inequality,
                "local": checks,
                "global": global,
            });
            emit(out.as_deref(), &pretty(&report))?;
            Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Study {
            target,
            dim,
            kind,
            p,
            levels,
            method,
            fields,
            coarse,
            s,
            corrupt,
            rate_tol,
            ratio_tol,
            out,
            verdict,
        } => {
            let norms = s.iter().map(|x| parse_norm(x)).collect::<Result<Vec<_>>>()?;
            let spec = parse_target(&target)?;
            let k = parse_kind(&kind, dim)?;
            if coarse == 0 {
                return Err(usage("--coarse must be positive"));
            }
            let method = match method {
                StudyMethod::Interpolant => Method::Interpolant,
                StudyMethod::L2 => Method::ElementL2,
                StudyMethod::Files => {
                    if fields.is_empty() {
                        return Err(usage("--method files needs --fields"));
                    }
                    Method::FieldFiles(fields.clone())
                }
            };
            let mut prov = Provenance::new("study");
            prov.option("target", &spec)
                .option("dim", dim)
                .option("kind", k)
                .option("p", p)
                .option("levels", levels)
                .option("method", method.name())
                .option("coarse", coarse)
                .option("s", s.join(","))
                .option("corrupt", fmt_opt(corrupt))
                .option("rate_tol", rate_tol)
                .option("ratio_tol", ratio_tol);
            for f in &fields {
                prov.input(f)?;
            }
            let mut cfg = StudyConfig::new(spec, dim, k, p, method, levels);
            cfg.coarse_divisions = coarse;
            cfg.norms = norms;
            cfg.corruption = corrupt;
            let result = convergence_study(&cfg)?;
            let tol = VerdictTolerances {
                rate: rate_tol,
                ratio: ratio_tol,
            };
            let v = necessary_condition_verdict(&result, tol)?;
            emit(out.as_deref(), &study_csv(&result, &prov.entries))?;
            let verdict_json = json!({
                "provenance": prov.json(),
                "timestamp_unix": timestamp(),
                "rates": result.rates,
                "verdict": v,
            });
            match verdict {
                Some(path) => fs::write(&path, pretty(&verdict_json))
                    .with_context(|| format!("writing {}", path.display()))?,
                None => eprint!("{}", pretty(&verdict_json)),
            }
            Ok(match v.verdict {
                Outcome::Pass => EXIT_PASS,
                Outcome::Fail => EXIT_FAIL,
                Outcome::Inconclusive => EXIT_INCONCLUSIVE,
            })
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "default".into())
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn header_lines(prov: &Provenance) -> String {
    prov.entries.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| run(cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
