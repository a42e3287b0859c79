//! `mhelm`: tables, identity checks, ball detection, conjecture exploration
//! and walk-on-spheres for `∇²u − λ²u = 0`.
//!
//! Exit codes: 0 success (or `ball`), 1 failed verification, 2 usage or
//! input error, 3 `not_ball`, 4 `inconclusive`.

mod manifest;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use mhelm::detect::{detect_ball, explore_sphere_ball_conjecture, DetectConfig, Verdict};
use mhelm::domains::Domain;
use mhelm::solutions::{Battery, Solution};
use mhelm::specfun::{eval_a, eval_u, KernelParams};
use mhelm::verify::{run_suite, Suite, SuiteConfig};
use mhelm::wos::{solve_dirichlet, WosConfig, WosEstimate, DEFAULT_MAX_STEPS, DEFAULT_SHELL_FRACTION};

use manifest::RunManifest;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mhelm::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mhelm", version, about = "Mean-value tools for the modified Helmholtz equation")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "MHELM_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CSV grid of a(t) and U at radius t/λ.
    Tables(TablesArgs),
    /// Run an identity verification suite; JSON lines, one report per check.
    Verify(VerifyArgs),
    /// Decide whether a domain is the ball centred at x0.
    Detect(DetectArgs),
    /// Evaluate the sphere/ball mean identity on a ball or ellipsoid (exploratory).
    Explore(ExploreArgs),
    /// Walk-on-spheres estimate of the Dirichlet solution.
    Wos(WosArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Screening constant λ.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: standard output). A manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TablesArgs {
    /// Dimension.
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// One of mvp, sphere-ball, flux, ineq7, harmonic-limit, all.
    suite: String,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    level: u32,
    /// Random (x, r) cases per sweep.
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct DomainArgs {
    /// Domain JSON: a file path, or the JSON text itself.
    #[arg(long)]
    domain: String,
    /// Expected dimension; must match the domain when given.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// Candidate center, comma separated (default: bounding-box center).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Radius below the volume-matched one; exercises the subset case only.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 4)]
    level: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ExploreArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 4)]
    level: u32,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct WosArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// Boundary data: `const:<value>` or `solution:<battery id>`.
    #[arg(long)]
    g: String,
    /// Evaluation point, comma separated; repeatable.
    #[arg(long = "point", required = true, allow_hyphen_values = true)]
    points: Vec<String>,
    /// Anchor of the standard battery (default: bounding-box center).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, alias = "samples", default_value_t = 100_000)]
    walks: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: u64,
    /// Termination shell width (default: 1e-3 × bounding radius).
    #[arg(long)]
    epsilon: Option<f64>,
    #[command(flatten)]
    common: Common,
}

fn parse_point(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad coordinate {s:?} in {text:?}"))))
        .collect()
}

fn load_domain(args: &DomainArgs) -> CliResult<(Domain, serde_json::Value)> {
    let text = if args.domain.trim_start().starts_with('{') {
        args.domain.clone()
    } else {
        fs::read_to_string(&args.domain).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.domain)))?
    };
    let d = Domain::from_json(&text)?;
    if let Some(m) = args.m {
        if m != d.dim() {
            return Err(CliError::Usage(format!("--m {m} does not match the domain dimension {}", d.dim())));
        }
    }
    Ok((d.clone(), serde_json::to_value(d.to_spec())?))
}

/// Writes `body` to `out` (or stdout) and the manifest beside it.
fn emit(out: Option<&Path>, body: &str, manifest: RunManifest) -> CliResult<()> {
    match out {
        Some(path) => {
            fs::write(path, body)?;
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".manifest.json");
            fs::write(sidecar, serde_json::to_string_pretty(&manifest.finish())? + "\n")?;
        }
        None => io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn tables(args: &TablesArgs) -> CliResult<ExitCode> {
    let params = KernelParams::new(args.m, args.lambda).map_err(|e| CliError::Usage(e.to_string()))?;
    if !(args.t_min >= 0.0 && args.t_max > args.t_min && args.t_max.is_finite()) || args.steps < 2 {
        return Err(CliError::Usage("need 0 ≤ t-min < t-max and steps ≥ 2".into()));
    }
    let manifest = RunManifest::start("tables", Some(params), json!({"t_min": args.t_min, "t_max": args.t_max, "steps": args.steps}), None);
    let mut body = String::from("t,a,u_at_radius_t_over_lambda\n");
    for i in 0..args.steps {
        let t = args.t_min + (args.t_max - args.t_min) * i as f64 / (args.steps - 1) as f64;
        let a = eval_a(&params, t)?.value;
        let u = eval_u(&params, t / args.lambda)?.value;
        body.push_str(&format!("{t},{a},{u}\n"));
    }
    emit(args.out.as_deref(), &body, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs) -> CliResult<ExitCode> {
    let suite: Suite = args.suite.parse().map_err(|e: mhelm::Error| CliError::Usage(e.to_string()))?;
    let params = KernelParams::new(args.m, args.common.lambda).map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = RunManifest::start(
        "verify",
        Some(params),
        json!({"suite": suite.to_string(), "level": args.level, "cases": args.cases}),
        Some(args.common.seed),
    );
    let config = SuiteConfig { seed: args.common.seed, level: args.level, cases: args.cases };
    let reports = run_suite(suite, params, config)?;
    let mut body = String::new();
    for r in &reports {
        body.push_str(&serde_json::to_string(r)?);
        body.push('\n');
    }
    emit(args.common.out.as_deref(), &body, manifest)?;
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    eprintln!("{} checks, {} failed", reports.len(), failed.len());
    for r in &failed {
        eprintln!("  {:?}: residual {:e} exceeds tolerance {:e}", r.identity, r.residual, r.tolerance);
    }
    Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn detect(args: &DetectArgs) -> CliResult<ExitCode> {
    let (d, spec) = load_domain(&args.domain)?;
    let params = KernelParams::new(d.dim(), args.common.lambda).map_err(|e| CliError::Usage(e.to_string()))?;
    let x0 = match &args.x0 {
        Some(text) => parse_point(text)?,
        None => d.bounding_box().center(),
    };
    let manifest = RunManifest::start(
        "detect",
        Some(params),
        json!({"domain": spec, "x0": x0, "samples": args.samples, "tolerance": args.tolerance, "radius": args.radius, "level": args.level}),
        Some(args.common.seed),
    );
    if x0.len() != d.dim() {
        return Err(CliError::Usage(format!("x0 has {} coordinates, domain has dimension {}", x0.len(), d.dim())));
    }
    let battery = Battery::standard(params, &x0, d.bounding_box())?;
    let cfg = DetectConfig {
        seed: args.common.seed,
        samples: args.samples,
        tolerance: args.tolerance,
        radius: args.radius,
        level: args.level,
    };
    let verdict = detect_ball(&d, &x0, &params, &battery, &cfg)?;
    emit(args.common.out.as_deref(), &to_json(&verdict)?, manifest)?;
    Ok(match verdict.verdict {
        Verdict::Ball => ExitCode::SUCCESS,
        Verdict::NotBall => ExitCode::from(3),
        Verdict::Inconclusive => ExitCode::from(4),
    })
}

fn explore(args: &ExploreArgs) -> CliResult<ExitCode> {
    let (d, spec) = load_domain(&args.domain)?;
    let params = KernelParams::new(d.dim(), args.common.lambda).map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = RunManifest::start("explore", Some(params), json!({"domain": spec, "level": args.level}), Some(args.common.seed));
    let battery = Battery::standard(params, &d.bounding_box().center(), d.bounding_box())?;
    let report = explore_sphere_ball_conjecture(&d, &battery, &params, args.common.seed, args.level)?;
    emit(args.common.out.as_deref(), &to_json(&report)?, manifest)?;
    Ok(ExitCode::SUCCESS)
}

enum Boundary {
    Constant(f64),
    Solution(Solution),
}

impl Boundary {
    fn parse(text: &str, battery: &Battery) -> CliResult<Self> {
        if let Some(v) = text.strip_prefix("const:") {
            let v: f64 = v.parse().map_err(|_| CliError::Usage(format!("bad constant in {text:?}")))?;
            return Ok(Boundary::Constant(v));
        }
        if let Some(id) = text.strip_prefix("solution:") {
            let s = battery.get(id).ok_or_else(|| {
                let ids: Vec<_> = battery.members().iter().map(|b| b.id.as_str()).collect();
                CliError::Usage(format!("unknown battery id {id:?}; known: {}", ids.join(", ")))
            })?;
            return Ok(Boundary::Solution(s.clone()));
        }
        Err(CliError::Usage(format!("boundary data must be const:<value> or solution:<id>, got {text:?}")))
    }

    fn value(&self, y: &[f64]) -> f64 {
        match self {
            Boundary::Constant(v) => *v,
            Boundary::Solution(s) => s.value_at(y),
        }
    }
}

#[derive(Serialize)]
struct WosPoint {
    point: Vec<f64>,
    #[serde(flatten)]
    estimate: WosEstimate,
}

fn wos(args: &WosArgs) -> CliResult<ExitCode> {
    let (d, spec) = load_domain(&args.domain)?;
    let params = KernelParams::new(d.dim(), args.common.lambda).map_err(|e| CliError::Usage(e.to_string()))?;
    let x0 = match &args.x0 {
        Some(text) => parse_point(text)?,
        None => d.bounding_box().center(),
    };
    let points = args.points.iter().map(|p| parse_point(p)).collect::<CliResult<Vec<_>>>()?;
    if points.iter().chain(std::iter::once(&x0)).any(|p| p.len() != d.dim()) {
        return Err(CliError::Usage(format!("points must have {} coordinates", d.dim())));
    }
    let battery = Battery::standard(params, &x0, d.bounding_box())?;
    let g = Boundary::parse(&args.g, &battery)?;
    let cfg = WosConfig {
        epsilon_shell: args.epsilon.unwrap_or(DEFAULT_SHELL_FRACTION * d.bounding_box().bounding_radius()),
        max_steps: args.max_steps,
        walks: args.walks,
        seed: args.common.seed,
    };
    let manifest = RunManifest::start(
        "wos",
        Some(params),
        json!({"domain": spec, "g": args.g, "points": points, "x0": x0, "config": cfg}),
        Some(args.common.seed),
    );
    let results = points
        .iter()
        .map(|p| Ok(WosPoint { point: p.clone(), estimate: solve_dirichlet(&d, |y| g.value(y), p, &params, &cfg)? }))
        .collect::<CliResult<Vec<_>>>()?;
    for r in results.iter().filter(|r| r.estimate.flagged) {
        eprintln!("warning: {} of {} walks truncated at {:?}", r.estimate.truncated_walks, r.estimate.walks, r.point);
    }
    let body = to_json(&json!({"g": args.g, "config": cfg, "results": results}))?;
    emit(args.common.out.as_deref(), &body, manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> CliResult<ExitCode> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure workers: {e}")))?;
    }
    match &cli.command {
        Command::Tables(a) => tables(a),
        Command::Verify(a) => verify(a),
        Command::Detect(a) => detect(a),
        Command::Explore(a) => explore(a),
        Command::Wos(a) => wos(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mhelm: {e}");
            ExitCode::from(2)
        }
    }
}
