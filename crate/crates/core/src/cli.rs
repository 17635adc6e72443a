//! Command-line front end. Every command writes one JSON envelope recording
//! the tool version, curve hash, seed, tolerances and configuration next to
//! the result; `survey` can emit its per-trial rows as CSV instead.
//!
//! Exit codes: 0 on success, 2 when a survey verdict is a violation, 1 on
//! any error (including usage errors).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::atiyah::analyze;
use crate::curve::{CurveSpec, RealHyperellipticCurve, GATE_FACTOR};
use crate::divisors::{CircleBits, Divisor, LineBundleTopType, PointLiteral};
use crate::equivalence::{two_torsion, KERNEL_THRESHOLD, MIN_DECISION_GAP};
use crate::error::{LabError, Result};
use crate::newstead::{self, RANK_TOL, RESIDUAL_TOL};
use crate::subbundles::{max_distinct_over_configs, real_fiber_configs, relative_types};
use crate::survey::{
    run_battery, run_survey, trichotomy_verdict, Recipe, SurveyResult, TrichotomyVerdict,
    THREADS_ENV,
};

pub const TOOL: &str = "real-subbundle-lab";

#[derive(Parser, Debug)]
#[command(name = TOOL, version, about = "Real line subbundles on real genus-2 hyperelliptic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Topological type (n, a) and m of the curve.
    Classify(CurveArgs),
    /// Fixed circles and anti-real components.
    Circles(CurveArgs),
    /// The sixteen two-torsion classes and their reality.
    Torsion(CurveArgs),
    /// Atiyah orbit report of a degree-3 divisor.
    Orbit {
        #[command(flatten)]
        curve: CurveArgs,
        /// JSON file holding a list of point literals.
        #[arg(long)]
        divisor: PathBuf,
    },
    /// Monte Carlo survey of real member counts, with trichotomy verdict.
    Survey {
        #[command(flatten)]
        curve: CurveArgs,
        /// Odd circles of the determinant, e.g. `111`.
        #[arg(long)]
        lambda: String,
        /// Run one recipe instead of the full battery (no verdict).
        #[arg(long)]
        recipe: Option<String>,
        /// Trials per recipe.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Admissible real fibre configurations and relative subbundle types.
    SubbundleTypes {
        /// Number of fixed circles.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Real forms of the quadric-pencil model and their sampled points.
    Newstead {
        #[command(flatten)]
        curve: CurveArgs,
        /// Target number of real points per form.
        #[arg(long, default_value_t = 500)]
        points: usize,
        /// Random planes tried per form before giving up.
        #[arg(long, default_value_t = 2000)]
        planes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// Curve spec JSON: {"coeffs":[a0..a6],"lift_sign":1,"tol":1e-9}.
    #[arg(long)]
    curve: PathBuf,
    /// Override the equality tolerance of the curve spec.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

struct Loaded {
    curve: RealHyperellipticCurve,
    spec: CurveSpec,
}

fn load_curve(args: &CurveArgs) -> Result<Loaded> {
    let text = read(&args.curve)?;
    let mut spec: CurveSpec = serde_json::from_str(&text)
        .map_err(|e| LabError::Invalid(format!("{}: {e}", args.curve.display())))?;
    if let Some(tol) = args.tol {
        spec.tol = tol;
    }
    let curve = spec.build()?;
    Ok(Loaded { curve, spec })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LabError::Invalid(format!("{}: {e}", path.display())))
}

fn parse_lambda(bits: &str) -> Result<LineBundleTopType> {
    Ok(LineBundleTopType {
        degree: 1,
        odd_circles: bits.parse::<CircleBits>()?,
    })
}

fn tolerances(tol: Option<f64>) -> Value {
    json!({
        "equality": tol,
        "gate": tol.map(|t| t * GATE_FACTOR),
        "kernel_threshold": KERNEL_THRESHOLD,
        "decision_gap": MIN_DECISION_GAP,
        "quadric_residual": RESIDUAL_TOL,
        "rank": RANK_TOL,
    })
}

fn envelope(
    command: &str,
    loaded: Option<&Loaded>,
    seed: Option<u64>,
    config: Value,
    result: Value,
) -> Value {
    json!({
        "tool": TOOL,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "curve": loaded.map(|l| &l.spec),
        "curve_hash": loaded.map(|l| l.spec.content_hash()),
        "seed": seed,
        "tolerances": tolerances(loaded.map(|l| l.spec.tol)),
        "config": config,
        "result": result,
    })
}

fn emit(output: &OutputArgs, body: &[u8]) -> Result<()> {
    match &output.out {
        Some(path) => {
            fs::write(path, body).map_err(|e| LabError::Invalid(format!("{}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body)
                .map_err(|e| LabError::Invalid(e.to_string()))
        }
    }
}

fn emit_json(output: &OutputArgs, value: &Value) -> Result<()> {
    if output.format != Format::Json {
        return Err(LabError::Invalid(
            "csv output is only available for survey".into(),
        ));
    }
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    emit(output, text.as_bytes())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Parse `argv` (including the program name) and run the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Classify(args) => {
            let loaded = load_curve(&args)?;
            let t = loaded.curve.classify()?;
            emit_json(
                &args.output,
                &envelope("classify", Some(&loaded), None, json!({}), to_value(&t)),
            )?;
        }
        Command::Circles(args) => {
            let loaded = load_curve(&args)?;
            let (circles, antireal) = loaded.curve.fixed_and_antireal_components();
            let result = json!({ "fixed_circles": circles, "antireal_components": antireal });
            emit_json(
                &args.output,
                &envelope("circles", Some(&loaded), None, json!({}), result),
            )?;
        }
        Command::Torsion(args) => {
            let loaded = load_curve(&args)?;
            let classes = two_torsion(&loaded.curve)?;
            let w = loaded.curve.weierstrass();
            let rows: Vec<Value> = classes
                .iter()
                .map(|c| {
                    json!({
                        "pair": c.pair,
                        "is_real": c.is_real,
                        "points": c.pair.map(|(i, j)| [[w[i].x.re, w[i].x.im], [w[j].x.re, w[j].x.im]]),
                    })
                })
                .collect();
            let real = classes.iter().filter(|c| c.is_real).count();
            let result = json!({ "classes": rows, "real_count": real });
            emit_json(
                &args.output,
                &envelope("torsion", Some(&loaded), None, json!({}), result),
            )?;
        }
        Command::Orbit { curve, divisor } => {
            let loaded = load_curve(&curve)?;
            let literals: Vec<PointLiteral> = serde_json::from_str(&read(&divisor)?)
                .map_err(|e| LabError::Invalid(format!("{}: {e}", divisor.display())))?;
            let d = Divisor::from_literal(&loaded.curve, &literals)?;
            let report = analyze(&loaded.curve, &d)?;
            let config = json!({ "divisor": d.to_literal() });
            emit_json(
                &curve.output,
                &envelope("orbit", Some(&loaded), None, config, to_value(&report)),
            )?;
        }
        Command::Survey {
            curve,
            lambda,
            recipe,
            trials,
            seed,
        } => {
            let loaded = load_curve(&curve)?;
            let lambda_type = parse_lambda(&lambda)?;
            let recipe = recipe.as_deref().map(str::parse::<Recipe>).transpose()?;
            let config = json!({
                "lambda": lambda_type.odd_circles,
                "recipe": recipe,
                "trials_per_recipe": trials,
                "threads_env": THREADS_ENV,
            });
            let (results, verdict) = match recipe {
                Some(r) => (
                    vec![run_survey(&loaded.curve, &lambda_type, r, trials, seed)?],
                    None,
                ),
                None => {
                    let results = run_battery(&loaded.curve, &lambda_type, trials, seed)?;
                    let t = loaded.curve.classify()?;
                    let v = trichotomy_verdict(&t, &lambda_type, &results)?;
                    (results, Some(v))
                }
            };
            match curve.output.format {
                Format::Csv => emit(&curve.output, &survey_csv(&results)?)?,
                Format::Json => {
                    let result = json!({ "surveys": results, "verdict": verdict });
                    emit_json(
                        &curve.output,
                        &envelope("survey", Some(&loaded), Some(seed), config, result),
                    )?;
                }
            }
            let code = verdict_exit_code(verdict.as_ref());
            if code == 2 {
                eprintln!("theorem violation: observed support does not match the expected case");
            }
            return Ok(code);
        }
        Command::SubbundleTypes { n, lambda, output } => {
            let sig: CircleBits = lambda.parse()?;
            let configs = real_fiber_configs(n, &sig)?;
            let reports = configs
                .iter()
                .map(|a| relative_types(n, &sig, a))
                .collect::<Result<Vec<_>>>()?;
            let result = json!({
                "configs": configs,
                "reports": reports,
                "max_distinct": max_distinct_over_configs(n, &sig)?,
            });
            let config = json!({ "n": n, "lambda": sig });
            emit_json(
                &output,
                &envelope("subbundle-types", None, None, config, result),
            )?;
        }
        Command::Newstead {
            curve,
            points,
            planes,
            seed,
        } => {
            let loaded = load_curve(&curve)?;
            let report = newstead::newstead_report(&loaded.curve, points, planes, seed)?;
            let config = json!({ "points": points, "planes": planes });
            emit_json(
                &curve.output,
                &envelope(
                    "newstead",
                    Some(&loaded),
                    Some(seed),
                    config,
                    to_value(&report),
                ),
            )?;
        }
    }
    Ok(0)
}

/// 2 for a violation verdict, 0 otherwise.
pub fn verdict_exit_code(verdict: Option<&TrichotomyVerdict>) -> i32 {
    if verdict.is_some_and(|v| v.is_violation()) {
        2
    } else {
        0
    }
}

fn survey_csv(results: &[SurveyResult]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let mut part = Vec::new();
        r.write_csv(&mut part)?;
        // keep a single header
        let skip = if i == 0 {
            0
        } else {
            part.iter()
                .position(|&b| b == b'\n')
                .map_or(part.len(), |p| p + 1)
        };
        buf.extend_from_slice(&part[skip..]);
    }
    Ok(buf)
}
