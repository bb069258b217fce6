//! Command-line front end: configuration loading, dispatch to the experiments,
//! kernel point queries and CSV/JSON emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::{
    blowup_experiment, check_dgamma_l1, check_pointwise_bounds, check_region_bounds, check_symmetry_relation,
    check_trace_identity, default_suite, dini_experiment, dini_oracle_experiment, disc_normal_data, holder_normal_data,
    jump_normal_data, l1_sweep_L, normal_bound_experiment, residual_and_trace_suite, smooth_normal_data, summary_json,
    switched_off_jump_data, write_csv, ExperimentConfig, Verdict, VerificationReport,
};
use crate::kernels::{gaussian, kernel_A, kernel_B, kernel_L, kernel_L_direct, kernel_kappa, SpaceTimePoint, SpectralKernels};
use crate::potentials::{decompose_velocity, evaluate_potentials, BoundaryField};
use crate::quadrature::IntegralResult;

/// Version of the JSON configuration schema read by [`run`].
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "halfstokes", version, about = "Half-space Stokes kernels, potentials and verification experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file (must carry `schema_version`).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a configuration value by dotted path, e.g. `experiment.quadrature.rel_tol=1e-6`.
    /// The value is parsed as JSON and taken as a string if that fails. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Directory receiving the output file; standard output when absent.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one kernel entry at a point and print value and error estimate.
    KernelEval(KernelEvalArgs),
    /// L¹ norms of L entries over the x_n sweep.
    L1Sweep(L1SweepArgs),
    /// Kernel identities and the pointwise and regional bound fits.
    Identities(IdentitiesArgs),
    /// Velocity, pressure and layer terms of a model boundary field at a point.
    Solve(SolveArgs),
    /// Normal/tangential split of the velocity of a model boundary field at a point.
    Decompose(SolveArgs),
    /// Tangential blow-up sweep for normal data with a jump.
    Blowup(DistanceArgs),
    /// Boundedness sweep for Dini-continuous normal data.
    Dini(DiniArgs),
    /// Run a set of experiments (all of them by default).
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelName {
    /// L_ij.
    L,
    /// B_i = L_in − L_ni.
    B,
    /// The layer kernel A.
    A,
    /// The composite kernel κ.
    Kappa,
    /// The heat kernel Γ.
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Nested adaptive quadrature.
    Quadrature,
    /// Hankel-transform evaluation.
    Spectral,
}

#[derive(Debug, Args)]
pub struct KernelEvalArgs {
    /// Kernel to evaluate (case-insensitive).
    #[arg(long, value_enum, ignore_case = true)]
    pub kernel: KernelName,
    /// Row index (1-based); used by L and B.
    #[arg(long, default_value_t = 1)]
    pub i: usize,
    /// Column index (1-based); used by L.
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    /// Point coordinates, comma separated, last one normal.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    /// Time.
    #[arg(long)]
    pub t: f64,
    /// Evaluation method for L, B and A.
    #[arg(long, value_enum, default_value_t = Method::Quadrature)]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct L1SweepArgs {
    /// Entries as `i,j` pairs separated by `;`; the j = n column is taken as L_in − B_in.
    #[arg(long, default_value = "1,1;2,1;1,3")]
    pub entries: String,
    /// Normal distances, overriding `experiment.xn_sweep`.
    #[arg(long, value_delimiter = ',')]
    pub xn: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IdentityCheck {
    DgammaL1,
    Trace,
    Symmetry,
    Pointwise,
    Region,
}

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    /// Checks to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dgamma-l1,trace,symmetry,pointwise,region")]
    pub checks: Vec<IdentityCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataName {
    /// (1 − |y′|²)³ on the unit disc.
    Smooth,
    /// max(0, 1 − |y′|)^α.
    Holder,
    /// sign(y₁) on the unit disc.
    Jump,
    /// 1 on the unit disc.
    Disc,
    /// sign(y₁) on the unit disc, switched off at s = 1.
    SwitchedOff,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Normal boundary data.
    #[arg(long, value_enum, default_value_t = DataName::Smooth)]
    pub data: DataName,
    /// Hölder exponent of the `holder` data.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Point coordinates, comma separated, last one normal.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x: Vec<f64>,
    /// Time.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// Strictly decreasing distances to the boundary, overriding `distances`.
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct DiniArgs {
    #[command(flatten)]
    pub sweep: DistanceArgs,
    /// Hölder exponent of the data, overriding `alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    DgammaL1,
    Trace,
    Symmetry,
    L1Sweep,
    Pointwise,
    Region,
    Residual,
    NormalBound,
    Blowup,
    Dini,
    DiniOracle,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Experiments to run, comma separated; all when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub experiments: Option<Vec<ExperimentName>>,
}

/// Contents of the JSON configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: ExperimentConfig,
    /// Distances of the blow-up, Dini and normal-bound sweeps.
    pub distances: Vec<f64>,
    /// Hölder exponent of the Dini experiment.
    pub alpha: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: ExperimentConfig::default(),
            distances: vec![0.2, 0.1, 0.05, 0.025],
            alpha: 0.5,
        }
    }
}

impl RunConfig {
    /// Reads `path` (if any), checks the schema version and applies `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                let v: Value =
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                match v.get("schema_version").and_then(Value::as_u64) {
                    Some(found) if found == u64::from(SCHEMA_VERSION) => {}
                    Some(found) => {
                        return Err(Error::Config(format!(
                            "schema_version {found} is not supported (expected {SCHEMA_VERSION})"
                        )))
                    }
                    None => return Err(Error::Config("missing or non-integer schema_version".into())),
                }
                v
            }
            None => serde_json::to_value(Self::default())?,
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.experiment.validate()?;
        Ok(cfg)
    }
}

/// Sets the dotted path `key` in `root` to `value` (JSON, or a string when not JSON).
fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("override key `{key}` has an empty segment")));
        }
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let map = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}`: `{part}` is not inside an object")))?;
        if k + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

fn parse_entries(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(';')
        .map(|pair| {
            let bad = || Error::Config(format!("entry `{pair}` is not of the form i,j"));
            let (i, j) = pair.split_once(',').ok_or_else(bad)?;
            Ok((i.trim().parse().map_err(|_| bad())?, j.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

/// A rectangular result table.
struct Table {
    name: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    json: Value,
}

enum Output {
    Reports(Vec<VerificationReport>),
    Table(Table, bool),
}

fn model_data(cfg: &RunConfig, data: DataName, alpha: f64) -> Result<BoundaryField> {
    let dim = cfg.experiment.dim;
    match data {
        DataName::Smooth => smooth_normal_data(dim),
        DataName::Holder => holder_normal_data(dim, alpha),
        DataName::Jump => jump_normal_data(dim),
        DataName::Disc => disc_normal_data(dim),
        DataName::SwitchedOff => switched_off_jump_data(dim, 1.0),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(";")
}

fn kernel_eval(cfg: &RunConfig, a: &KernelEvalArgs) -> Result<Output> {
    let dim = cfg.experiment.dim;
    let spec = &cfg.experiment.quadrature;
    let p = SpaceTimePoint::from_coords(&a.x, a.t)?;
    let n = dim.n();
    if p.point.tangential.len() + 1 != n {
        return Err(Error::Shape { expected: n, found: a.x.len() });
    }
    let sk = SpectralKernels::new(dim);
    let spectral = a.method == Method::Spectral;
    let r: IntegralResult = match a.kernel {
        KernelName::L if spectral => sk.kernel_l(a.i, a.j, &p)?,
        KernelName::L if a.j == n => kernel_L_direct(a.i, &p, dim, spec)?,
        KernelName::L => kernel_L(a.i, a.j, &p, dim, spec)?,
        KernelName::B if spectral => sk.kernel_b(a.i, &p)?,
        KernelName::B => kernel_B(a.i, &p, dim, spec)?,
        KernelName::A if spectral => sk.kernel_a(&p, &Default::default())?,
        KernelName::A => kernel_A(&p, dim, None, spec)?,
        KernelName::Kappa => kernel_kappa(&p, dim, spec)?,
        KernelName::Gamma => IntegralResult {
            value: gaussian(&p, dim),
            error_estimate: 0.0,
            evaluations: 1,
            converged: true,
        },
    };
    let kernel = format!("{:?}", a.kernel).to_lowercase();
    let table = Table {
        name: "kernel_eval".into(),
        header: vec!["kernel", "i", "j", "x", "t", "value", "error_estimate", "converged"],
        rows: vec![vec![
            kernel.clone(),
            a.i.to_string(),
            a.j.to_string(),
            join(&a.x),
            fmt(a.t),
            fmt(r.value),
            fmt(r.error_estimate),
            r.converged.to_string(),
        ]],
        json: serde_json::json!({
            "kernel": kernel, "i": a.i, "j": a.j, "x": a.x, "t": a.t,
            "value": r.value, "error_estimate": r.error_estimate, "converged": r.converged,
        }),
    };
    Ok(Output::Table(table, r.converged))
}

fn solve(cfg: &RunConfig, a: &SolveArgs, decompose: bool) -> Result<Output> {
    let field = model_data(cfg, a.data, a.alpha)?;
    let p = SpaceTimePoint::from_coords(&a.x, a.t)?;
    let spec = &cfg.experiment.quadrature;
    let (name, pairs, json, converged): (&str, Vec<(&str, Vec<f64>)>, Value, bool) = if decompose {
        let d = decompose_velocity(&field, &p, spec)?;
        let pairs = vec![
            ("u", d.u.clone()),
            ("u_normal", d.u_normal.clone()),
            ("u_tangential", d.u_tangential.clone()),
            ("grad_s_tangential", d.grad_s_tangential.clone()),
            ("grad_t_tangential", d.grad_t_tangential.clone()),
            ("remainder_tangential", d.remainder_tangential.clone()),
            ("error_estimate", vec![d.error_estimate]),
        ];
        ("decompose", pairs, serde_json::to_value(&d)?, d.converged)
    } else {
        let v = evaluate_potentials(&field, &p, spec)?;
        let pairs = vec![
            ("velocity", v.velocity.clone()),
            ("pressure", vec![v.pressure]),
            ("grad_s", v.grad_s.clone()),
            ("composite_t", vec![v.composite_t]),
            ("grad_t", v.grad_t.clone()),
            ("error_estimate", vec![v.error_estimate]),
        ];
        ("solve", pairs, serde_json::to_value(&v)?, v.converged)
    };
    let rows = pairs
        .iter()
        .flat_map(|(q, vals)| {
            vals.iter()
                .enumerate()
                .map(move |(k, v)| vec![q.to_string(), (k + 1).to_string(), fmt(*v)])
        })
        .collect();
    let table = Table {
        name: name.into(),
        header: vec!["quantity", "component", "value"],
        rows,
        json,
    };
    Ok(Output::Table(table, converged))
}

fn run_experiment(cfg: &RunConfig, which: ExperimentName) -> Result<VerificationReport> {
    let e = &cfg.experiment;
    let (dim, spec) = (e.dim, &e.quadrature);
    match which {
        ExperimentName::DgammaL1 => check_dgamma_l1(&e.xn_sweep, e.horizon, dim, spec),
        ExperimentName::Trace => check_trace_identity(&e.samples, dim, spec),
        ExperimentName::Symmetry => check_symmetry_relation(&e.samples, dim, spec),
        ExperimentName::L1Sweep => l1_sweep_L(&[(1, 1), (2, 1), (1, dim.n())], &e.xn_sweep, e.horizon, dim, spec),
        ExperimentName::Pointwise => check_pointwise_bounds(&e.samples, dim),
        ExperimentName::Region => check_region_bounds(&e.samples, dim, spec),
        ExperimentName::Residual => residual_and_trace_suite(&default_suite(dim)?, spec),
        ExperimentName::NormalBound => normal_bound_experiment(&cfg.distances, dim, spec),
        ExperimentName::Blowup => blowup_experiment(&cfg.distances, dim, spec),
        ExperimentName::Dini => dini_experiment(cfg.alpha, &cfg.distances, dim, spec),
        ExperimentName::DiniOracle => dini_oracle_experiment(),
    }
}

fn dispatch(cfg: &mut RunConfig, command: &Command) -> Result<Output> {
    let reports = |cfg: &RunConfig, names: &[ExperimentName]| -> Result<Output> {
        Ok(Output::Reports(names.iter().map(|w| run_experiment(cfg, *w)).collect::<Result<_>>()?))
    };
    match command {
        Command::KernelEval(a) => kernel_eval(cfg, a),
        Command::Solve(a) => solve(cfg, a, false),
        Command::Decompose(a) => solve(cfg, a, true),
        Command::L1Sweep(a) => {
            if let Some(xn) = &a.xn {
                cfg.experiment.xn_sweep = xn.clone();
                cfg.experiment.validate()?;
            }
            let e = &cfg.experiment;
            let entries = parse_entries(&a.entries)?;
            Ok(Output::Reports(vec![l1_sweep_L(&entries, &e.xn_sweep, e.horizon, e.dim, &e.quadrature)?]))
        }
        Command::Identities(a) => {
            let names: Vec<ExperimentName> = a
                .checks
                .iter()
                .map(|c| match c {
                    IdentityCheck::DgammaL1 => ExperimentName::DgammaL1,
                    IdentityCheck::Trace => ExperimentName::Trace,
                    IdentityCheck::Symmetry => ExperimentName::Symmetry,
                    IdentityCheck::Pointwise => ExperimentName::Pointwise,
                    IdentityCheck::Region => ExperimentName::Region,
                })
                .collect();
            reports(cfg, &names)
        }
        Command::Blowup(a) => {
            if let Some(d) = &a.distances {
                cfg.distances = d.clone();
            }
            reports(cfg, &[ExperimentName::Blowup])
        }
        Command::Dini(a) => {
            if let Some(d) = &a.sweep.distances {
                cfg.distances = d.clone();
            }
            if let Some(alpha) = a.alpha {
                cfg.alpha = alpha;
            }
            reports(cfg, &[ExperimentName::Dini])
        }
        Command::Suite(a) => match &a.experiments {
            Some(names) => reports(cfg, names),
            None => reports(cfg, ExperimentName::value_variants()),
        },
    }
}

fn render(output: &Output, format: Format) -> Result<(String, Vec<u8>)> {
    let mut buf = Vec::new();
    let name = match output {
        Output::Reports(reports) => {
            match format {
                Format::Csv => write_csv(reports, &mut buf)?,
                Format::Json => serde_json::to_writer_pretty(&mut buf, &summary_json(reports))?,
            }
            match reports.as_slice() {
                [one] => one.experiment.clone(),
                _ => "suite".into(),
            }
        }
        Output::Table(t, _) => {
            match format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(&mut buf);
                    w.write_record(&t.header)?;
                    for r in &t.rows {
                        w.write_record(r)?;
                    }
                    w.flush()?;
                }
                Format::Json => serde_json::to_writer_pretty(&mut buf, &t.json)?,
            }
            t.name.clone()
        }
    };
    if format == Format::Json {
        buf.push(b'\n');
    }
    Ok((name, buf))
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::Parameter(_)
            | Error::Shape { .. }
            | Error::Index { .. }
            | Error::Dimension(_)
            | Error::NotInterior(_)
            | Error::NonPositiveTime(_)
            | Error::Horizon { .. }
            | Error::DerivativeOrder(_)
    )
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = RunConfig::load(cli.common.config.as_deref(), &cli.common.overrides)?;
    let output = dispatch(&mut cfg, &cli.command)?;
    let (name, bytes) = render(&output, cli.common.format)?;
    match &cli.common.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.{}", cli.common.format.extension()));
            fs::write(&path, &bytes)?;
            writeln!(out, "{}", path.display())?;
        }
        None => out.write_all(&bytes)?,
    }
    let ok = match &output {
        Output::Reports(reports) => {
            for r in reports {
                if r.verdict == Verdict::Flagged {
                    writeln!(err, "warning: {} has flagged rows", r.experiment)?;
                }
                for row in r.failures() {
                    writeln!(
                        err,
                        "FAIL {}/{} [{}]{} measured={:e} target={:e} tolerance={:e}",
                        r.experiment,
                        row.name,
                        row.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
                        if row.note.is_empty() { String::new() } else { format!(" {}", row.note) },
                        row.measured,
                        row.target,
                        row.tolerance,
                    )?;
                }
                for (k, v) in r.fitted_constants.iter().filter(|(_, v)| !v.is_finite()) {
                    writeln!(err, "FAIL {}: fitted constant {k} = {v}", r.experiment)?;
                }
            }
            reports.iter().all(VerificationReport::passed)
        }
        Output::Table(t, converged) => {
            if !converged {
                writeln!(err, "FAIL {}: quadrature did not converge", t.name)?;
            }
            *converged
        }
    };
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `args` (program name first), runs the command and returns the exit status:
/// 0 on pass, 1 on a verification failure, 2 on a usage or configuration error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if is_usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}
