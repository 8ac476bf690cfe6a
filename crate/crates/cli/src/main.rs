//! `disclab`: point-set generation, discrepancy evaluation, model emission
//! and verification from the command line.
//!
//! Exit status is 0 on success, 2 for invalid input or usage, and 1 when a
//! computation fails or a check does not pass.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use disclab::discrepancy::discrepancy;
use disclab::model::builders::{build_model, DEFAULT_EPS};
use disclab::model::{check_solution, extract_pointset, parse_lp, serialize_lp};
use disclab::pointset::{fibonacci_set, format_points_csv, lattice1, lattice2, random_set, read_points, sobol2d, write_points};
use disclab::raster::{heatmap, truncated_heatmap, write_raster, RasterFormat, DEFAULT_RESOLUTION};
use disclab::search::descent::shift_descent;
use disclab::search::exact::{exact_small, DEFAULT_STARTS};
use disclab::search::lattice::{lattice_search_1d, lattice_search_2d, DEFAULT_COARSE_STEPS, DEFAULT_REFINE_ROUNDS};
use disclab::shifts::{canonicalize, DEFAULT_TOL};
use disclab::tables::{evaluate, load, EvalOptions};
use disclab::{Error, Extras, Family, Measure, PointSet, SolutionRecord, TableId};

#[derive(Parser)]
#[command(name = "disclab", version, about = "Low-discrepancy point sets: construction, exact evaluation and optimization models")]
struct Cli {
    /// Print a JSON object on stdout instead of plain text.
    #[arg(long, global = true)]
    json: bool,

    /// Worker threads for parallel engines (default: all cores).
    #[arg(long, global = true, env = "DISCLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set.
    Gen(GenArgs),
    /// Compute the exact discrepancy of a point set.
    Disc(DiscArgs),
    /// Apply admissible up/right shifts until none is left.
    ShiftCanon(ShiftArgs),
    /// Emit an optimization model in LP format.
    Model(ModelArgs),
    /// Check a solution against a model and certify the encoded points.
    Verify(VerifyArgs),
    /// Exhaustive small-n optimization over point orderings.
    SolveExact(SolveArgs),
    /// Best lattice parameters for n points.
    SearchLattice(LatticeArgs),
    /// Write a local-discrepancy raster.
    Heatmap(HeatmapArgs),
    /// Recompute a reference table and compare with the tabulated values.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fibonacci,
    Lattice1,
    Lattice2,
    Sobol,
    Random,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    /// Lattice parameter for `lattice1`.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    /// Dimension for `random` (2 or 3).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (`.json` or CSV); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiscArgs {
    /// Point file (`.json` or CSV).
    #[arg(long)]
    pts: PathBuf,
    /// star, extreme, periodic or corner4.
    #[arg(long, default_value = "star")]
    measure: String,
}

#[derive(Args)]
struct ShiftArgs {
    #[arg(long)]
    pts: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shifts at or below this length are ignored.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Run this many shift-descent iterations after canonicalizing.
    #[arg(long, default_value_t = 0)]
    descent: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ModelArgs {
    /// classical, assign2d, assign3d, lattice, lattice2, extreme, periodic or corner4.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Minimum spacing between distinct grid lines.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Comma-separated strengthenings: none, default, all, h, trans, sum, shift, crit.
    #[arg(long, default_value = "default")]
    extras: String,
    /// LP file to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Model in LP format.
    #[arg(long)]
    model: PathBuf,
    /// Solution as JSON (`{"name": value}`) or `name value` lines.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    n: usize,
    /// Multistart count per ordering.
    #[arg(long, default_value_t = DEFAULT_STARTS)]
    starts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// star or corner4.
    #[arg(long, default_value = "star")]
    measure: String,
    /// Point file for the optimal set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file for the full certificate.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long)]
    n: usize,
    /// Search both parameters `(r1, r2)`.
    #[arg(long)]
    double: bool,
    #[arg(long, default_value_t = DEFAULT_COARSE_STEPS)]
    coarse_steps: usize,
    #[arg(long, default_value_t = DEFAULT_REFINE_ROUNDS)]
    refine_rounds: usize,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    pts: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// star or corner4.
    #[arg(long, default_value = "star")]
    measure: String,
    /// Zero every pixel more than 1/n below the star discrepancy.
    #[arg(long)]
    truncated: bool,
    /// pgm or csv; taken from the file extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// fibonacci, fibonacci-large, lattice1, lattice2, optimal-small or corner4-small.
    table: String,
    /// Include rows marked as stretch targets.
    #[arg(long)]
    stretch: bool,
    #[arg(long, default_value_t = DEFAULT_STARTS)]
    starts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// A failure and the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::UnsupportedDimension { .. }
            | Error::Parse { .. }
            | Error::Domain { .. }
            | Error::OutOfUnitCube(_)
            | Error::UnsupportedMeasure(_)
            | Error::IncompleteSolution(_)
            | Error::Io { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// What a subcommand prints, and whether its check passed.
struct Outcome {
    text: String,
    json: Value,
    ok: bool,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Outcome { text, json, ok: true }
    }
}

fn measure_arg(s: &str) -> Result<Measure, Failure> {
    Ok(s.parse::<Measure>()?)
}

fn points_json(p: &PointSet) -> Value {
    json!(p.to_vecs())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure { code: 1, message: format!("cannot write {}: {e}", path.display()) })
}

fn gen(a: &GenArgs) -> Result<Outcome, Failure> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required for this kind")));
    let p = match a.kind {
        Kind::Fibonacci => fibonacci_set(a.n)?,
        Kind::Lattice1 => lattice1(a.n, need(a.r, "r")?)?,
        Kind::Lattice2 => lattice2(a.n, need(a.r1, "r1")?, need(a.r2, "r2")?)?,
        Kind::Sobol => sobol2d(a.n)?,
        Kind::Random => random_set(a.n, a.dim, a.seed)?,
    };
    let kind = Kind::to_possible_value(&a.kind).map(|v| v.get_name().to_string()).unwrap_or_default();
    let text = match &a.out {
        Some(path) => {
            write_points(&p, path)?;
            format!("wrote {} points to {}", p.len(), path.display())
        }
        None => format_points_csv(&p).trim_end().to_string(),
    };
    let json = json!({
        "command": "gen",
        "kind": kind,
        "n": p.len(),
        "dim": p.dim(),
        "out": a.out.as_ref().map(|o| o.display().to_string()),
        "points": points_json(&p),
    });
    Ok(Outcome::ok(text, json))
}

fn disc(a: &DiscArgs) -> Result<Outcome, Failure> {
    let p = read_points(&a.pts)?;
    let measure = measure_arg(&a.measure)?;
    let r = discrepancy(&p, measure)?;
    let json = json!({
        "command": "disc",
        "measure": measure,
        "n": p.len(),
        "value": r.value,
        "report": r,
    });
    Ok(Outcome::ok(format!("{:.4}", r.value), json))
}

fn shift_canon(a: &ShiftArgs) -> Result<Outcome, Failure> {
    let p = read_points(&a.pts)?;
    let before = discrepancy(&p, Measure::Star)?.value;
    let mut q = canonicalize(&p, a.tol)?;
    if a.descent > 0 {
        q = shift_descent(&q, a.descent, a.seed)?;
    }
    let after = discrepancy(&q, Measure::Star)?.value;
    if let Some(path) = &a.out {
        write_points(&q, path)?;
    }
    let mut text = format!("star discrepancy {before:.6} -> {after:.6}");
    if a.out.is_none() {
        text = format!("{}\n{text}", format_points_csv(&q).trim_end());
    }
    let json = json!({
        "command": "shift-canon",
        "before": before,
        "after": after,
        "out": a.out.as_ref().map(|o| o.display().to_string()),
        "points": points_json(&q),
    });
    Ok(Outcome::ok(text, json))
}

fn model(a: &ModelArgs) -> Result<Outcome, Failure> {
    let family: Family = a.family.parse()?;
    let extras: Extras = a.extras.parse()?;
    let m = build_model(family, a.n, a.eps, extras)?;
    let lp = serialize_lp(&m)?;
    let census = m.census();
    let text = match &a.out {
        Some(path) => {
            write_text(path, &lp)?;
            format!(
                "wrote {family} model for n={} to {} ({} variables, {} constraints, {} bilinear)",
                a.n,
                path.display(),
                census.variables,
                census.constraints,
                census.bilinear
            )
        }
        None => lp.trim_end().to_string(),
    };
    let json = json!({
        "command": "model",
        "family": family.as_str(),
        "n": a.n,
        "variables": census.variables,
        "binary": census.binary,
        "constraints": census.constraints,
        "bilinear": census.bilinear,
        "out": a.out.as_ref().map(|o| o.display().to_string()),
    });
    Ok(Outcome::ok(text, json))
}

fn verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let text = fs::read_to_string(&a.model).map_err(|e| usage(format!("cannot read {}: {e}", a.model.display())))?;
    let m = parse_lp(&text)?;
    let s = SolutionRecord::read(&a.solution)?;
    let report = check_solution(&m, &s, a.tol)?;
    let extracted = if report.feasible && m.family.is_some() { Some(extract_pointset(&m, &s)?) } else { None };
    let mut lines = vec![format!(
        "{} (max violation {:.3e}, objective {:.6})",
        if report.feasible { "feasible" } else { "infeasible" },
        report.max_violation,
        report.objective
    )];
    for v in report.violations.iter().take(10) {
        lines.push(format!("  {} violated by {:.3e}", v.constraint, v.residual));
    }
    if report.violations.len() > 10 {
        lines.push(format!("  ... {} more", report.violations.len() - 10));
    }
    if let Some(x) = &extracted {
        lines.push(format!("certified {} discrepancy {:.6} (model f {:.6})", x.measure, x.certified_f, x.model_f));
    }
    let json = json!({
        "command": "verify",
        "feasible": report.feasible,
        "max_violation": report.max_violation,
        "objective": report.objective,
        "violations": report.violations,
        "certified_f": extracted.as_ref().map(|x| x.certified_f),
        "points": extracted.as_ref().map(|x| points_json(&x.points)),
    });
    Ok(Outcome { text: lines.join("\n"), json, ok: report.feasible })
}

fn solve_exact(a: &SolveArgs) -> Result<Outcome, Failure> {
    let measure = measure_arg(&a.measure)?;
    let r = exact_small(a.n, a.starts, a.seed, measure)?;
    if let Some(path) = &a.out {
        write_points(&r.points, path)?;
    }
    if let Some(path) = &a.certificate {
        let text = serde_json::to_string_pretty(&r.certificate).map_err(|e| Failure { code: 1, message: e.to_string() })?;
        write_text(path, &text)?;
    }
    let text = format!("n={} {measure} optimum {:.6}\n{}", a.n, r.f, format_points_csv(&r.points).trim_end());
    let json = json!({
        "command": "solve-exact",
        "n": a.n,
        "measure": measure,
        "f": r.f,
        "stopped_at_lower_bound": r.certificate.stopped_at_lower_bound,
        "points": points_json(&r.points),
    });
    Ok(Outcome::ok(text, json))
}

fn search_lattice(a: &LatticeArgs) -> Result<Outcome, Failure> {
    let (text, json) = if a.double {
        let r = lattice_search_2d(a.n, a.coarse_steps, a.refine_rounds)?;
        (
            format!("n={} r1={:.6} r2={:.6} d*={:.6}", a.n, r.r1, r.r2, r.f),
            json!({"command": "search-lattice", "n": a.n, "double": true, "r1": r.r1, "r2": r.r2, "f": r.f}),
        )
    } else {
        let r = lattice_search_1d(a.n, a.coarse_steps, a.refine_rounds)?;
        (
            format!("n={} r={:.6} d*={:.6}", a.n, r.r, r.f),
            json!({"command": "search-lattice", "n": a.n, "double": false, "r": r.r, "f": r.f}),
        )
    };
    Ok(Outcome::ok(text, json))
}

fn heatmap_cmd(a: &HeatmapArgs) -> Result<Outcome, Failure> {
    let p = read_points(&a.pts)?;
    let format: RasterFormat = match &a.format {
        Some(f) => f.parse()?,
        None => a.out.extension().and_then(|e| e.to_str()).unwrap_or("pgm").parse()?,
    };
    let measure = measure_arg(&a.measure)?;
    let h = if a.truncated {
        if measure != Measure::Star {
            return Err(usage("--truncated applies to the star measure only"));
        }
        truncated_heatmap(&p, a.resolution)?
    } else {
        heatmap(&p, a.resolution, measure)?
    };
    write_raster(&h, &a.out, format)?;
    let format_name = match format {
        RasterFormat::Pgm => "pgm",
        RasterFormat::Csv => "csv",
    };
    let text = format!("wrote {0}x{0} {format_name} raster to {1} (max {2:.6})", a.resolution, a.out.display(), h.max());
    let json = json!({
        "command": "heatmap",
        "resolution": h.resolution,
        "measure": h.measure,
        "truncated": h.truncated,
        "threshold": h.threshold,
        "max": h.max(),
        "format": format_name,
        "out": a.out.display().to_string(),
    });
    Ok(Outcome::ok(text, json))
}

fn bench(a: &BenchArgs) -> Result<Outcome, Failure> {
    let id: TableId = a.table.parse()?;
    let table = load(id);
    let opts = EvalOptions { include_stretch: a.stretch, starts: a.starts, seed: a.seed };
    let rows = evaluate(id, &opts)?;
    let ok = rows.iter().all(|r| r.pass);
    let mut lines = vec![format!("{id} (tolerance {:e})", table.tolerance)];
    lines.push(format!("{:>4}  {:>22}  {:>10}  {:>10}  {:>9}  result", "n", "parameters", "expected", "computed", "|diff|"));
    for r in &rows {
        let params: Vec<String> = r.params.iter().map(|v| v.to_string()).collect();
        let verdict = match (r.pass, r.fallback_used) {
            (true, false) => "pass",
            (true, true) => "pass (fallback)",
            _ => "FAIL",
        };
        lines.push(format!(
            "{:>4}  {:>22}  {:>10}  {:>10.6}  {:>9.2e}  {verdict}",
            r.n,
            params.join(" "),
            r.expected,
            r.computed,
            r.deviation
        ));
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    lines.push(format!("{passed}/{} rows pass", rows.len()));
    let json = json!({
        "command": "bench",
        "table": id,
        "tolerance": table.tolerance,
        "fallback": table.fallback,
        "pass": ok,
        "rows": rows,
    });
    Ok(Outcome { text: lines.join("\n"), json, ok })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure { code: 1, message: format!("cannot start thread pool: {e}") })?;
    }
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Disc(a) => disc(a),
        Command::ShiftCanon(a) => shift_canon(a),
        Command::Model(a) => model(a),
        Command::Verify(a) => verify(a),
        Command::SolveExact(a) => solve_exact(a),
        Command::SearchLattice(a) => search_lattice(a),
        Command::Heatmap(a) => heatmap_cmd(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON values serialize"));
            } else {
                println!("{}", out.text);
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            if cli.json {
                println!("{}", json!({"command": "error", "code": f.code, "error": f.message}));
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
