use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;

use koebe_core::centers::{compare_circumcenter, CenterSpec};
use koebe_core::fields::WeightFamily;
use koebe_core::hypcore::{ball_chart, random_mobius};
use koebe_core::koebe::{
    drift_construction, generate_by_name, perturb, reconstruct, validate, KoebeCapSystem,
    DEFAULT_TOLERANCE,
};
use koebe_core::solver::{
    self, random_domain_points, solve, solve_caps, trace_curve, BatchJob, BatchRow, Endpoint,
    FlowDirection, Method, SolveError, SolveOptions, SolveStatus, TraceOptions,
};

use crate::document::{CapSystemDocument, Metadata, TransformDocument};
use crate::mesh::to_obj;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_HYPOTHESIS: i32 = 5;

/// An error carrying its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_INPUT,
            error,
        }
    }
}

fn fail(code: i32, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

type CmdResult = Result<i32, Failure>;

#[derive(Debug, Parser)]
#[command(name = "koebe", version, about = "Centering Koebe polyhedra and cap systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a canonical, perturbed or drifted cap system.
    Generate(GenerateArgs),
    /// Check a cap system and print the residual of every check.
    Validate(ValidateArgs),
    /// Export the Euclidean polyhedron of a cap system as OBJ.
    Reconstruct(ReconstructArgs),
    /// Find the Möbius transformation that centers a polyhedron.
    Center(CenterArgs),
    /// Center a weighted cap system on S^d.
    CapsCenter(CapsCenterArgs),
    /// Trace integral curves of a center field from random start points.
    Trace(TraceArgs),
    /// Run the jobs of a manifest and write a results table.
    Batch(BatchArgs),
    /// Compare the Gram solve of the cone circumcenter with the closed form.
    CircumcenterReport(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// tetrahedron, cube, octahedron, icosahedron or dodecahedron
    pub name: String,
    #[arg(long, alias = "seed", default_value_t = 0)]
    pub random_seed: u64,
    /// Apply a random Möbius transformation with at most this rapidity.
    #[arg(long)]
    pub rapidity: Option<f64>,
    /// `i:step`: push vertex plane i toward the origin.
    #[arg(long)]
    pub drift: Option<String>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub out_mesh: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Auto,
    Newton,
    Flow,
}

impl From<SolverArg> for Method {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => Method::Auto,
            SolverArg::Newton => Method::Newton,
            SolverArg::Flow => Method::Flow,
        }
    }
}

#[derive(Debug, Args)]
pub struct CenterArgs {
    pub input: PathBuf,
    /// cc, ic, cm0, cm1, cm2, cm3, ccm, euler:λ or tangency
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_system: Option<PathBuf>,
    #[arg(long)]
    pub out_transform: Option<PathBuf>,
    #[arg(long)]
    pub out_mesh: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapsCenterArgs {
    pub input: PathBuf,
    /// sec, tan or powsec:k
    #[arg(long, default_value = "sec")]
    pub weights: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long)]
    pub out_system: Option<PathBuf>,
    #[arg(long)]
    pub out_transform: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = DirectionArg::Backward)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_steps: usize,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Number of random asymmetric instances.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Center(a) => cmd_center(a),
        Command::CapsCenter(a) => cmd_caps_center(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Batch(a) => cmd_batch(a),
        Command::CircumcenterReport(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn read_system(path: &Path) -> Result<(CapSystemDocument, KoebeCapSystem), Failure> {
    let doc = CapSystemDocument::read(path)?;
    let system = doc.to_system()?;
    let report = validate(&system, DEFAULT_TOLERANCE);
    if !report.passed() {
        let names: Vec<_> = report.failures().iter().map(|c| c.name).collect();
        return Err(anyhow!("input fails validation: {}", names.join(", ")).into());
    }
    Ok((doc, system))
}

fn parse_spec(s: &str) -> Result<CenterSpec, Failure> {
    s.parse::<CenterSpec>()
        .map_err(|e| anyhow!("invalid --spec `{s}`: {e}").into())
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let mut system = generate_by_name(&a.name).map_err(|e| anyhow!(e))?;
    let mut meta = Metadata::new();
    meta.insert("name".into(), json!(a.name.to_ascii_lowercase()));
    meta.insert("provenance".into(), json!("generate"));
    if let Some(rapidity) = a.rapidity {
        if !(rapidity >= 0.0 && rapidity.is_finite()) {
            return Err(anyhow!("--rapidity must be a non-negative number").into());
        }
        system = perturb(&system, &random_mobius(a.random_seed, rapidity, 3))
            .map_err(|e| anyhow!(e))?;
        meta.insert("seed".into(), json!(a.random_seed));
        meta.insert("rapidity".into(), json!(rapidity));
    }
    if let Some(d) = &a.drift {
        let (i, step) = d
            .split_once(':')
            .and_then(|(i, s)| Some((i.parse::<usize>().ok()?, s.parse::<f64>().ok()?)))
            .ok_or_else(|| anyhow!("--drift expects `i:step`, got `{d}`"))?;
        let (moved, diag) = drift_construction(&system, i, step).map_err(|e| anyhow!(e))?;
        eprintln!(
            "drift vertex={} step={} |cm0|={:.6} alpha_i={:.6} max_other_alpha={:.6} clearance={:.6}",
            diag.vertex, diag.step, diag.cm0_norm, diag.alpha_after, diag.max_other_alpha, diag.clearance
        );
        system = moved;
        meta.insert("drift".into(), json!(d));
        meta.insert("cm0_norm".into(), json!(diag.cm0_norm));
    }
    let report = validate(&system, DEFAULT_TOLERANCE);
    if !report.passed() {
        return Err(anyhow!("generated system fails validation").into());
    }
    let doc = CapSystemDocument::from_system(&system, meta);
    match &a.out {
        Some(path) => doc.write(path)?,
        None => print!("{}", doc.to_text()),
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: ValidateArgs) -> CmdResult {
    let doc = CapSystemDocument::read(&a.input)?;
    let system = doc.to_system()?;
    let report = validate(&system, a.tol);
    println!("{:<26} {:>12}  status", "check", "worst");
    for c in &report.checks {
        let status = match (c.informational, c.passed) {
            (true, true) => "ok (info)",
            (true, false) => "note",
            (false, true) => "ok",
            (false, false) => "FAIL",
        };
        println!("{:<26} {:>12.3e}  {status}", c.name, c.worst);
    }
    println!("tolerance {:e}: {}", a.tol, if report.passed() { "valid" } else { "invalid" });
    Ok(if report.passed() { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_reconstruct(a: ReconstructArgs) -> CmdResult {
    let (_, system) = read_system(&a.input)?;
    let poly = reconstruct(&system).map_err(|e| anyhow!(e))?;
    std::fs::write(&a.out_mesh, to_obj(&system, &poly))
        .with_context(|| format!("writing {}", a.out_mesh.display()))?;
    println!(
        "vertices={} edges={} faces={}",
        system.n_vertices(),
        system.combinatorics().edges().len(),
        system.n_faces()
    );
    Ok(EXIT_OK)
}

fn solve_failure(e: SolveError) -> Failure {
    match e {
        SolveError::Spec(_) => fail(EXIT_MISMATCH, e),
        other => fail(EXIT_INPUT, other),
    }
}

fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::ConditionViolated => EXIT_HYPOTHESIS,
        _ => EXIT_NOT_CONVERGED,
    }
}

fn cmd_center(a: CenterArgs) -> CmdResult {
    let (doc, system) = read_system(&a.input)?;
    let spec = parse_spec(&a.spec)?;
    spec.check_combinatorics(system.combinatorics())
        .map_err(|e| fail(EXIT_MISMATCH, e))?;
    let opts = SolveOptions {
        tol_residual: a.tol,
        max_iter: a.max_iter,
        method: a.solver.into(),
        seed: a.seed,
        ..SolveOptions::default()
    };
    opts.check().map_err(|e| fail(EXIT_INPUT, e))?;
    let report = solve(&system, &spec, &opts).map_err(solve_failure)?;
    println!(
        "{} residual={:.3e} iterations={} time_ms={:.1}",
        report.status,
        report.residual,
        report.iterations,
        report.wall_time.as_secs_f64() * 1e3
    );
    if let Some(msg) = &report.message {
        eprintln!("{msg}");
    }
    if report.status == SolveStatus::ConditionViolated {
        return Ok(EXIT_HYPOTHESIS);
    }
    let moved = perturb(&system, &report.transform).map_err(|e| anyhow!(e))?;
    let mut meta = doc.metadata.clone();
    meta.insert("provenance".into(), json!("center"));
    meta.insert("spec".into(), json!(spec.to_string()));
    if let CenterSpec::Euler(l) = spec {
        meta.insert("lambda".into(), json!(l));
    }
    meta.insert("status".into(), json!(report.status.name()));
    meta.insert("residual".into(), json!(report.residual));
    if let Some(path) = &a.out_system {
        let check = validate(&moved, DEFAULT_TOLERANCE);
        if !check.passed() {
            eprintln!("warning: centered system fails validation at {DEFAULT_TOLERANCE:e}");
        }
        CapSystemDocument::from_system(&moved, meta.clone()).write(path)?;
    }
    if let Some(path) = &a.out_transform {
        TransformDocument::from_map(&report.transform, meta.clone()).write(path)?;
    }
    if let Some(path) = &a.out_mesh {
        let poly = reconstruct(&moved).map_err(|e| anyhow!(e))?;
        std::fs::write(path, to_obj(&moved, &poly))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(status_code(report.status))
}

fn cmd_caps_center(a: CapsCenterArgs) -> CmdResult {
    let doc = CapSystemDocument::read(&a.input)?;
    let caps = doc.vertex_cap_list()?;
    let weight: WeightFamily = a
        .weights
        .parse()
        .map_err(|e| anyhow!("invalid --weights `{}`: {e}", a.weights))?;
    let weights = vec![weight; caps.len()];
    let opts = SolveOptions {
        tol_residual: a.tol,
        max_iter: a.max_iter,
        ..SolveOptions::default()
    };
    opts.check().map_err(|e| fail(EXIT_INPUT, e))?;
    let report = solve_caps(&caps, &weights, &opts).map_err(solve_failure)?;
    if report.status == SolveStatus::ConditionViolated {
        let msg = report.message.clone().unwrap_or_default();
        println!("ConditionViolated: {msg}");
        if let Some(cond) = &report.condition {
            for c in cond.failures() {
                eprintln!(
                    "  I(q) = {:?}: lhs {} >= rhs {}",
                    c.indices, c.lhs, c.rhs
                );
            }
        }
        return Ok(EXIT_HYPOTHESIS);
    }
    println!(
        "{} residual={:.3e} iterations={} time_ms={:.1}",
        report.status,
        report.residual,
        report.iterations,
        report.wall_time.as_secs_f64() * 1e3
    );
    let mut meta = doc.metadata.clone();
    meta.insert("provenance".into(), json!("caps-center"));
    meta.insert("weights".into(), json!(weight.to_string()));
    meta.insert("status".into(), json!(report.status.name()));
    meta.insert("residual".into(), json!(report.residual));
    if let Some(path) = &a.out_system {
        let moved = caps
            .iter()
            .map(|c| koebe_core::hypcore::apply_cap(&report.transform, c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow!(e))?;
        CapSystemDocument::from_caps(&moved, meta.clone()).write(path)?;
    }
    if let Some(path) = &a.out_transform {
        TransformDocument::from_map(&report.transform, meta).write(path)?;
    }
    Ok(status_code(report.status))
}

fn cmd_trace(a: TraceArgs) -> CmdResult {
    let (_, system) = read_system(&a.input)?;
    let spec = parse_spec(&a.spec)?;
    if spec.is_minimax() {
        return Err(fail(EXIT_MISMATCH, anyhow!("spec `{spec}` has no field to trace")));
    }
    spec.check_combinatorics(system.combinatorics())
        .map_err(|e| fail(EXIT_MISMATCH, e))?;
    let opts = TraceOptions {
        direction: match a.direction {
            DirectionArg::Forward => FlowDirection::Forward,
            DirectionArg::Backward => FlowDirection::Backward,
        },
        tol_residual: a.tol,
        max_steps: a.max_steps,
        ..TraceOptions::default()
    };
    let starts = random_domain_points(&system, a.starts, a.seed);
    let mut csv = String::from("curve,s,b0,b1,b2,residual,endpoint\n");
    let mut zero_ends = Vec::new();
    for (k, p0) in starts.iter().enumerate() {
        let curve = trace_curve(&system, &spec, p0, &opts).map_err(solve_failure)?;
        for ((s, p), r) in curve.samples.iter().zip(&curve.residuals) {
            let b = ball_chart(p);
            csv.push_str(&format!(
                "{k},{s},{},{},{},{r},{}\n",
                b[0], b[1], b[2], curve.endpoint
            ));
        }
        println!(
            "curve {k}: endpoint={} residual={:.3e} samples={}",
            curve.endpoint,
            curve.final_residual,
            curve.samples.len()
        );
        if curve.endpoint == Endpoint::Zero {
            zero_ends.push(curve.end().clone());
        }
    }
    let mut spread: f64 = 0.0;
    for i in 0..zero_ends.len() {
        for j in i + 1..zero_ends.len() {
            spread = spread.max(zero_ends[i].distance(&zero_ends[j]));
        }
    }
    println!(
        "zero endpoints: {}/{}; largest distance between them: {:.3e}",
        zero_ends.len(),
        starts.len(),
        spread
    );
    if let Some(path) = &a.out_csv {
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    #[serde(default)]
    seed: u64,
    jobs: Vec<ManifestJob>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestJob {
    id: String,
    spec: String,
    /// Cap-system document, relative to the manifest.
    input: Option<PathBuf>,
    /// Canonical solid name.
    generate: Option<String>,
    rapidity: Option<f64>,
    seed: Option<u64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    solver: Option<String>,
}

pub const MANIFEST_FORMAT: &str = "koebe-batch/1";

fn job_system(job: &ManifestJob, base: &Path, seed: u64) -> Result<KoebeCapSystem, String> {
    match (&job.input, &job.generate) {
        (Some(path), None) => {
            let doc = CapSystemDocument::read(&base.join(path)).map_err(|e| format!("{e:#}"))?;
            doc.to_system().map_err(|e| format!("{e:#}"))
        }
        (None, Some(name)) => {
            let s = generate_by_name(name).map_err(|e| e.to_string())?;
            match job.rapidity {
                Some(r) => perturb(&s, &random_mobius(job.seed.unwrap_or(seed), r, 3))
                    .map_err(|e| e.to_string()),
                None => Ok(s),
            }
        }
        _ => Err("job needs exactly one of `input` and `generate`".into()),
    }
}

fn cmd_batch(a: BatchArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).context("malformed manifest")?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(anyhow!(
            "unsupported manifest format `{}` (expected `{MANIFEST_FORMAT}`)",
            manifest.format
        )
        .into());
    }
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let jobs: Vec<BatchJob> = manifest
        .jobs
        .iter()
        .enumerate()
        .map(|(k, j)| {
            let seed = solver::job_seed(manifest.seed, k);
            let spec = j.spec.parse::<CenterSpec>();
            let method = j
                .solver
                .as_deref()
                .map(str::parse::<Method>)
                .transpose();
            let system = match (&spec, &method) {
                (Err(e), _) => Err(format!("invalid spec: {e}")),
                (_, Err(e)) => Err(e.clone()),
                _ => job_system(j, base, seed),
            };
            BatchJob {
                id: j.id.clone(),
                system,
                spec: spec.unwrap_or(CenterSpec::Cm0),
                opts: SolveOptions {
                    tol_residual: j.tol.unwrap_or(1e-8),
                    max_iter: j.max_iter.unwrap_or(200),
                    method: method.ok().flatten().unwrap_or(Method::Auto),
                    seed,
                    ..SolveOptions::default()
                },
            }
        })
        .collect();
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let rows = solver::batch(&jobs, workers);
    let mut out = String::from(BatchRow::CSV_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    match &a.out {
        Some(path) => {
            std::fs::write(path, &out).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let _ = std::io::stdout().write_all(out.as_bytes());
        }
    }
    let converged = rows.iter().filter(|r| r.status == "Converged").count();
    eprintln!("jobs={} converged={converged}", rows.len());
    Ok(EXIT_OK)
}

fn cmd_report(a: ReportArgs) -> CmdResult {
    let symmetric = 2f64.sqrt().atan();
    let c = compare_circumcenter([symmetric; 3]).map_err(|e| anyhow!(e))?;
    println!("symmetric instance t = sqrt 2");
    println!("{c}");
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut shown = 0;
    while shown < a.samples {
        let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..3.0));
        if t[0] * t[1] * t[2] >= t[0] + t[1] + t[2] {
            continue;
        }
        let Ok(c) = compare_circumcenter(t.map(f64::atan)) else {
            continue;
        };
        shown += 1;
        println!();
        println!("asymmetric instance {shown}: t = {t:?}");
        println!("{c}");
    }
    Ok(EXIT_OK)
}
