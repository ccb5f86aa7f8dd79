//! `sasaki-deform`: builtin meshes, classification, structure identities, moduli and continuation.
//!
//! Exit codes: 0 pass, 1 numerical or invariant failure, 2 usage or parse error. Every error is
//! also printed to stdout as JSON with an `"error"` field.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sasaki_deform::ambient::{identity_check, AmbientStructure};
use sasaki_deform::dec::FormOperators;
use sasaki_deform::deform::{
    classify, continuation, moduli_tangent, ClassifyTolerances, ModuliTolerances, NewtonOptions, OperatorKind,
    PathDirection, Status,
};
use sasaki_deform::linalg::IterOptions;
use sasaki_deform::mesh::{builtin, io, refine};
use sasaki_deform::{Embedding, Error, MetricData, SimplicialComplex};

const THREADS_ENV: &str = "SASAKI_DEFORM_THREADS";

#[derive(Parser)]
#[command(name = "sasaki-deform", version, about = "Deformations of special Legendrian meshes in odd spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a builtin mesh to a JSON file.
    Gen(GenArgs),
    /// Classify a mesh as Legendrian, special, θ-special or minimal Legendrian.
    Check(CheckArgs),
    /// Check the structure identities at random sphere points.
    Identity(IdentityArgs),
    /// Kernel of a linearized operator against its predicted dimension.
    Moduli(ModuliArgs),
    /// Continuation along a harmonic or Reeb direction.
    Flow(FlowArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    CliffordCircle,
    CliffordTorus,
}

impl Builtin {
    fn name(self) -> &'static str {
        match self {
            Builtin::CliffordCircle => "clifford-circle",
            Builtin::CliffordTorus => "clifford-torus",
        }
    }
}

#[derive(Args)]
struct MeshSource {
    /// Mesh JSON file.
    #[arg(long, conflicts_with_all = ["builtin", "res"])]
    mesh: Option<PathBuf>,
    /// Builtin example.
    #[arg(long, value_enum, requires = "res")]
    builtin: Option<Builtin>,
    /// Resolution: `256` or `64x64`.
    #[arg(long)]
    res: Option<String>,
}

/// `auto` or an angle in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Theta {
    Auto,
    Value(f64),
}

impl FromStr for Theta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Theta::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Theta::Value(v)),
            _ => Err(format!("expected 'auto' or a finite angle, got '{s}'")),
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Auto => f.write_str("auto"),
            Theta::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    builtin: Builtin,
    #[arg(long)]
    res: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Weight κ (default n + 1).
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Phase of ψ: `auto` rotates by the estimated phase before the special test.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    theta: Theta,
    /// Refinement levels for a convergence table (builtins double the resolution).
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Pass band factor `c` in `residual < c·h²`.
    #[arg(long, default_value_t = 10.0)]
    pass_factor: f64,
    /// Fail band factor `c` in `residual > c·h²`.
    #[arg(long, default_value_t = 100.0)]
    fail_factor: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long)]
    n: usize,
    /// Weight κ (default n + 1).
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest finite-difference step; `h/2` and `h/4` are also used.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModuliArgs {
    #[command(flatten)]
    source: MeshSource,
    /// special-legendrian, nx-complex, legendrian-complex, transverse, contact-cy or minimal-legendrian.
    #[arg(long)]
    kind: String,
    /// Weight κ (default n + 1).
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Relative eigenvalue cluster window.
    #[arg(long, default_value_t = 0.05)]
    window: f64,
    /// Absolute singular-value threshold for cluster kernels.
    #[arg(long, default_value_t = 0.05)]
    cluster_sigma: f64,
    /// Relative singular-value threshold for exact kernels.
    #[arg(long, default_value_t = 1e-8)]
    exact_rel: f64,
    /// Seed of the iterative eigensolver start block.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    source: MeshSource,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    theta: Theta,
    /// `harmonic:<i>` or `reeb`.
    #[arg(long, default_value = "harmonic:0")]
    direction: String,
    #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
    step: f64,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Newton residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory for the mesh files and the residual log.
    #[arg(short, long)]
    output: PathBuf,
}

/// A failed run: the error and whether it was caused by the invocation.
struct Failure {
    kind: String,
    message: String,
    usage: bool,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { kind: e.kind().to_string(), message: e.to_string(), usage: e.is_usage() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { kind: "usage".into(), message: message.into(), usage: true }
}

type Run<T> = Result<T, Failure>;

/// Report and whether every invariant held.
struct Outcome {
    report: Value,
    passed: bool,
}

fn load_mesh(src: &MeshSource) -> Run<(SimplicialComplex, Embedding, Value)> {
    match (&src.mesh, src.builtin, &src.res) {
        (Some(p), None, None) => {
            let (m, e) = io::load(p).map_err(|err| match err {
                Error::Io(io_err) => usage(format!("cannot read {}: {io_err}", p.display())),
                other => other.into(),
            })?;
            Ok((m, e, json!({ "file": p.display().to_string() })))
        }
        (None, Some(b), Some(r)) => {
            let (m, e) = builtin::by_name(b.name(), r)?;
            Ok((m, e, json!({ "builtin": b.name(), "res": r })))
        }
        _ => Err(usage("give either --mesh PATH or --builtin NAME --res R")),
    }
}

fn structure(n: usize, kappa: Option<f64>, theta: f64) -> Run<AmbientStructure> {
    let k = kappa.unwrap_or((n + 1) as f64);
    Ok(AmbientStructure::new(n, k, theta)?)
}

fn write_text(path: &Path, text: &str) -> Run<()> {
    fs::write(path, text).map_err(|e| Failure {
        kind: "io".into(),
        message: format!("cannot write {}: {e}", path.display()),
        usage: false,
    })
}

fn emit(report: &Value, output: Option<&Path>) -> Run<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match output {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Run<Outcome> {
    let (m, e) = builtin::by_name(a.builtin.name(), &a.res)?;
    write_text(&a.output, &io::to_json(&m, &e)?)?;
    let report = json!({
        "command": "gen",
        "builtin": a.builtin.name(),
        "res": a.res,
        "output": a.output.display().to_string(),
        "vertices": m.n_vertices(),
        "top_simplices": m.n_simplices(m.dim()),
    });
    Ok(Outcome { report, passed: true })
}

/// One classification level: the plain verdicts and the special test at the chosen phase.
fn check_level(
    m: &SimplicialComplex,
    e: &Embedding,
    s: &AmbientStructure,
    theta: Theta,
    tol: &ClassifyTolerances,
) -> Run<(Value, bool, f64, f64, f64)> {
    let c = classify(m, e, s, tol)?;
    let (used, special) = match theta {
        Theta::Auto => {
            let t = s.theta - c.theta_hat.unwrap_or(0.0);
            (t, classify(m, e, &s.with_theta(t), tol)?.special_legendrian)
        }
        Theta::Value(_) => (s.theta, c.special_legendrian.clone()),
    };
    let passed = c.legendrian.status == Status::Pass
        && special.status == Status::Pass
        && (theta != Theta::Auto || c.theta_special.status == Status::Pass);
    let v = json!({
        "theta_special": c.theta_special.status == Status::Pass,
        "theta_hat": c.theta_hat,
        "theta_used": used,
        "special_legendrian_at_theta": special,
        "classification": c,
        "passed": passed,
    });
    Ok((v, passed, c.mesh_size, c.legendrian.residual, special.residual))
}

fn observed_orders(h: &[f64], r: &[f64]) -> Vec<f64> {
    (1..r.len()).map(|i| (r[i - 1] / r[i]).ln() / (h[i - 1] / h[i]).ln()).collect()
}

/// Observed order required of a convergence table.
const MIN_ORDER: f64 = 1.8;

/// Level `level` of a refinement sequence. Builtins are rebuilt at doubled resolution so every
/// level samples the smooth surface; file meshes are midpoint-subdivided.
fn refined(
    src: &MeshSource,
    level: usize,
    m: &SimplicialComplex,
    e: &Embedding,
) -> Run<(SimplicialComplex, Embedding)> {
    match (src.builtin, &src.res) {
        (Some(b), Some(r)) => {
            let res = builtin::parse_resolution(r)?;
            let doubled: Vec<String> = res.iter().map(|v| (v << level).to_string()).collect();
            Ok(builtin::by_name(b.name(), &doubled.join("x"))?)
        }
        _ => Ok(refine(m, e)?),
    }
}

fn cmd_check(a: &CheckArgs) -> Run<Outcome> {
    let (mut m, mut e, source) = load_mesh(&a.source)?;
    let theta0 = match a.theta {
        Theta::Auto => 0.0,
        Theta::Value(v) => v,
    };
    let s = structure(m.dim(), a.kappa, theta0)?;
    let tol = ClassifyTolerances { pass_factor: a.pass_factor, fail_factor: a.fail_factor };
    if !(tol.pass_factor > 0.0 && tol.fail_factor >= tol.pass_factor) {
        return Err(usage("band factors must satisfy 0 < pass-factor <= fail-factor"));
    }
    let (head, mut passed, h0, l0, s0) = check_level(&m, &e, &s, a.theta, &tol)?;
    let mut report = json!({
        "command": "check",
        "mesh": source,
        "n": s.n,
        "kappa": s.kappa,
        "theta": a.theta.to_string(),
    });
    let obj = report.as_object_mut().expect("object");
    for (k, v) in head.as_object().expect("object") {
        obj.insert(k.clone(), v.clone());
    }
    if a.refine > 0 {
        let (mut hs, mut ls, mut ss) = (vec![h0], vec![l0], vec![s0]);
        let mut levels = vec![json!({ "level": 0, "mesh_size": h0, "legendrian": l0, "special": s0 })];
        for level in 1..=a.refine {
            (m, e) = refined(&a.source, level, &m, &e)?;
            let (_, ok, h, l, sp) = check_level(&m, &e, &s, a.theta, &tol)?;
            passed &= ok;
            hs.push(h);
            ls.push(l);
            ss.push(sp);
            levels.push(json!({ "level": level, "mesh_size": h, "legendrian": l, "special": sp, "passed": ok }));
        }
        let (ol, os) = (observed_orders(&hs, &ls), observed_orders(&hs, &ss));
        let min = ol.iter().chain(&os).copied().fold(f64::INFINITY, f64::min);
        passed &= min >= MIN_ORDER;
        obj.insert(
            "refinement".into(),
            json!({
                "levels": levels,
                "legendrian_orders": ol,
                "special_orders": os,
                "min_order": min,
                "required_order": MIN_ORDER,
            }),
        );
    }
    obj.insert("passed".into(), json!(passed));
    Ok(Outcome { report, passed })
}

fn cmd_identity(a: &IdentityArgs) -> Run<Outcome> {
    if a.n == 0 {
        return Err(usage("n must be at least 1"));
    }
    let s = structure(a.n, a.kappa, a.theta)?;
    let r = identity_check(&s, a.samples, a.seed, a.h)?;
    let passed = r.passed;
    let mut report = serde_json::to_value(&r).expect("report serializes");
    report.as_object_mut().expect("object").insert("command".into(), json!("identity"));
    Ok(Outcome { report, passed })
}

fn cmd_moduli(a: &ModuliArgs) -> Run<Outcome> {
    let kind: OperatorKind = a.kind.parse()?;
    let (m, e, source) = load_mesh(&a.source)?;
    let n = m.dim();
    let kappa = a.kappa.unwrap_or((n + 1) as f64);
    let metric = MetricData::induced(&m, &e)?;
    let ops = FormOperators::assemble(&m, &metric)?;
    let tol = ModuliTolerances {
        cluster_sigma: a.cluster_sigma,
        cluster_window: a.window,
        exact_rel: a.exact_rel,
        ..ModuliTolerances::default()
    };
    let mut opts = IterOptions::default();
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    let r = moduli_tangent(kind, &ops, kappa, &tol, &opts)?;
    let passed = r.matches;
    let mut report = serde_json::to_value(&r).expect("report serializes");
    let obj = report.as_object_mut().expect("object");
    obj.insert("command".into(), json!("moduli"));
    obj.insert("mesh".into(), source);
    Ok(Outcome { report, passed })
}

fn parse_direction(s: &str) -> Run<PathDirection> {
    let t = s.trim().to_ascii_lowercase();
    if t == "reeb" {
        return Ok(PathDirection::Reeb);
    }
    t.strip_prefix("harmonic:")
        .and_then(|i| i.parse().ok())
        .map(PathDirection::Harmonic)
        .ok_or_else(|| usage(format!("direction must be 'reeb' or 'harmonic:<i>', got '{s}'")))
}

fn cmd_flow(a: &FlowArgs) -> Run<Outcome> {
    let direction = parse_direction(&a.direction)?;
    if a.steps == 0 {
        return Err(usage("steps must be positive"));
    }
    if !(a.tol > 0.0) {
        return Err(usage("tol must be positive"));
    }
    let (m, e, source) = load_mesh(&a.source)?;
    let base = structure(m.dim(), a.kappa, 0.0)?;
    let s = match a.theta {
        Theta::Auto => {
            let c = classify(&m, &e, &base, &ClassifyTolerances::default())?;
            base.with_theta(-c.theta_hat.unwrap_or(0.0))
        }
        Theta::Value(v) => base.with_theta(v),
    };
    let newton = NewtonOptions { tol: a.tol, ..NewtonOptions::default() };
    let path = continuation(&m, &e, &s, direction, a.step, a.steps, &newton, &IterOptions::default())?;
    fs::create_dir_all(&a.output).map_err(|err| Failure {
        kind: "io".into(),
        message: format!("cannot create {}: {err}", a.output.display()),
        usage: false,
    })?;
    for (i, emb) in path.embeddings.iter().enumerate() {
        write_text(&a.output.join(format!("mesh_{i:04}.json")), &io::to_json(&m, emb)?)?;
    }
    write_text(&a.output.join("residuals.csv"), &path.csv())?;
    let passed = path.error.is_none() && path.records.len() == a.steps + 1;
    let report = json!({
        "command": "flow",
        "mesh": source,
        "n": s.n,
        "kappa": s.kappa,
        "theta": s.theta,
        "direction": a.direction,
        "step": a.step,
        "steps_requested": a.steps,
        "steps_completed": path.records.len().saturating_sub(1),
        "records": path.records,
        "max_eta_drift": path.max_eta_drift(),
        "error": path.error,
        "output": a.output.display().to_string(),
        "passed": passed,
    });
    write_text(&a.output.join("report.json"), &(serde_json::to_string_pretty(&report).expect("serializes") + "\n"))?;
    Ok(Outcome { report, passed })
}

fn configure_threads() -> Run<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { kind: "threads".into(), message: e.to_string(), usage: false })
}

fn run(cli: &Cli) -> Run<(Outcome, Option<PathBuf>)> {
    configure_threads()?;
    Ok(match &cli.command {
        Command::Gen(a) => (cmd_gen(a)?, None),
        Command::Check(a) => (cmd_check(a)?, a.output.clone()),
        Command::Identity(a) => (cmd_identity(a)?, a.output.clone()),
        Command::Moduli(a) => (cmd_moduli(a)?, a.output.clone()),
        Command::Flow(a) => (cmd_flow(a)?, None),
    })
}

fn command_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::Gen(_) => "gen",
        Command::Check(_) => "check",
        Command::Identity(_) => "identity",
        Command::Moduli(_) => "moduli",
        Command::Flow(_) => "flow",
    }
}

fn fail(command: Option<&str>, f: &Failure) -> ExitCode {
    let v = json!({ "command": command, "error": { "kind": f.kind, "message": f.message } });
    println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
    ExitCode::from(if f.usage { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let message = e.render().to_string();
            return fail(None, &usage(message.trim().to_string()));
        }
    };
    match run(&cli) {
        Ok((o, out)) => match emit(&o.report, out.as_deref()) {
            Ok(()) => ExitCode::from(if o.passed { 0 } else { 1 }),
            Err(f) => fail(Some(command_name(&cli)), &f),
        },
        Err(f) => fail(Some(command_name(&cli)), &f),
    }
}
