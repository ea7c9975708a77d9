//! Command-line front end: CSV ingestion, overlap checks, fitting, theorem
//! suites and data simulation, with JSON (or plain text) reports.
//!
//! [`run`] is a pure function of its configuration apart from file I/O, so
//! the same configuration and seed always produce byte-identical output.

use std::ffi::OsString;
use std::path::PathBuf;

use binreg_core::data::Dataset;
use binreg_core::links::Link;
use binreg_core::mle::{fit, FitOptions, FitStatus};
use binreg_core::overlap::{check_overlap, scalar_overlap, OverlapVerdict};
use binreg_core::verify::suite::{is_certified, run_trial, summarize, SuiteSummary, TrialOutcome};
use binreg_core::verify::{gen_balanced, gen_gaussian, gen_overlapping, gen_separated, Theorem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SEPARATED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

/// Environment variable capping the number of worker threads for `verify`.
pub const THREADS_ENV: &str = "BINREG_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(
    name = "binreg",
    version,
    about = "Binary regression with overlap checks and slope/mean-difference verification"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Report format on stdout.
    #[arg(long, value_enum, global = true, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Plain,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fit an intercept-plus-slopes model by maximum likelihood.
    Fit(FitArgs),
    /// Test whether the two label groups overlap.
    Overlap(OverlapArgs),
    /// Run the seeded theorem suites.
    Verify(VerifyArgs),
    /// Write a generated data set as CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Input CSV with a `y` column of 0/1 labels.
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, value_parser = parse_link, default_value = "logit")]
    pub link: Link,
    /// Score tolerance (standardized scale).
    #[arg(long, value_parser = parse_positive, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Also write the JSON report to this path.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Fit separated data anyway and report the last iterate.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OverlapArgs {
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoremChoice {
    Sign,
    Zero,
    Angle,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = TheoremChoice::All)]
    pub theorem: TheoremChoice,
    /// Link to test; defaults to logit, probit and cloglog.
    #[arg(long, value_parser = parse_link)]
    pub link: Option<Link>,
    /// Trials per (theorem, link, dimension) suite.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Predictor dimensions, comma separated. The sign theorem only uses d = 1.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3])]
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Overlapping,
    Separated,
    Balanced,
    Gaussian,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimKind::Overlapping)]
    pub kind: SimKind,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mean shift of group 1 along the first axis (gaussian kind).
    #[arg(long, default_value_t = 1.0)]
    pub shift: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_link(s: &str) -> Result<Link, String> {
    s.parse::<Link>().map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be a positive finite number, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Exit code plus everything destined for stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn input_error(msg: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

/// Parse `argv` (including the program name) and run it. Usage errors come
/// back with clap's exit code and message.
pub fn run_from_args<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(argv) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            }
        }
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    match &cfg.command {
        Command::Fit(a) => run_fit(a, cfg.output),
        Command::Overlap(a) => run_overlap(a, cfg.output),
        Command::Verify(a) => run_verify(a, cfg.output),
        Command::Simulate(a) => run_simulate(a),
    }
}

fn render(report: &Value, plain: impl FnOnce() -> String, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        OutputFormat::Plain => plain(),
    }
}

fn load(path: &PathBuf) -> Result<Dataset, Outcome> {
    Dataset::from_csv_path(path)
        .map_err(|e| Outcome::input_error(format!("{}: {e}", path.display())))
}

fn run_fit(a: &FitArgs, format: OutputFormat) -> Outcome {
    let ds = match load(&a.csv) {
        Ok(ds) => ds,
        Err(o) => return o,
    };
    let overlap = match check_overlap(&ds) {
        Ok(r) => r,
        Err(e) => return Outcome::input_error(e),
    };
    let separated = overlap.verdict == OverlapVerdict::Separated;

    let (report, code, stderr) = if separated && !a.force {
        let report = json!({
            "schema": SCHEMA_VERSION,
            "link": a.link,
            "overlap": overlap.verdict,
            "status": "Refused",
            "alpha": Value::Null,
            "beta": Value::Null,
            "loglik": Value::Null,
            "score_norm": Value::Null,
            "iterations": 0,
        });
        let msg = "data are separated: no finite maximum likelihood estimate exists; pass --force to fit anyway\n";
        (report, EXIT_SEPARATED, msg.to_string())
    } else {
        let opts = FitOptions {
            tol: a.tol,
            max_iter: a.max_iter,
            ..FitOptions::default()
        };
        let fr = match fit(&ds, &a.link, &opts) {
            Ok(fr) => fr,
            Err(e) => return Outcome::input_error(e),
        };
        let mut stderr = String::new();
        if let Some(c) = &fr.caveat {
            stderr.push_str(&format!("note: {c}\n"));
        }
        if fr.status != FitStatus::Converged {
            stderr.push_str(&format!("note: fit status {:?}\n", fr.status));
        }
        let report = json!({
            "schema": SCHEMA_VERSION,
            "link": a.link,
            "overlap": overlap.verdict,
            "status": fr.status,
            "alpha": fr.params.alpha,
            "beta": fr.params.beta,
            "loglik": fr.loglik,
            "score_norm": fr.score_norm,
            "iterations": fr.iterations,
            "caveat": fr.caveat,
        });
        (report, EXIT_OK, stderr)
    };

    if let Some(path) = &a.json_out {
        let text = render(&report, String::new, OutputFormat::Json);
        if let Err(e) = std::fs::write(path, text) {
            return Outcome::input_error(format!("{}: {e}", path.display()));
        }
    }
    let stdout = render(&report, || plain_fit(&report), format);
    Outcome {
        code,
        stdout,
        stderr,
    }
}

fn plain_fit(r: &Value) -> String {
    let mut s = format!("status: {}\n", r["status"].as_str().unwrap_or("?"));
    s.push_str(&format!(
        "overlap: {}\n",
        r["overlap"].as_str().unwrap_or("?")
    ));
    if !r["alpha"].is_null() {
        s.push_str(&format!("alpha: {}\n", r["alpha"]));
        s.push_str(&format!("beta: {}\n", r["beta"]));
        s.push_str(&format!("loglik: {}\n", r["loglik"]));
        s.push_str(&format!("score_norm: {}\n", r["score_norm"]));
        s.push_str(&format!("iterations: {}\n", r["iterations"]));
    }
    s
}

fn run_overlap(a: &OverlapArgs, format: OutputFormat) -> Outcome {
    let ds = match load(&a.csv) {
        Ok(ds) => ds,
        Err(o) => return o,
    };
    let r = match check_overlap(&ds) {
        Ok(r) => r,
        Err(e) => return Outcome::input_error(e),
    };
    // for scalar x the interval rule adds bounds and a direction hint
    let scalar = if ds.d() == 1 {
        scalar_overlap(&ds).ok()
    } else {
        None
    };
    let mut stderr = String::new();
    if let Some(sr) = scalar.as_ref().filter(|sr| sr.verdict != r.verdict) {
        stderr.push_str(&format!(
            "warning: interval rule says {:?}, cone test says {:?}\n",
            sr.verdict, r.verdict
        ));
    }
    let bounds = r
        .bounds()
        .or_else(|| scalar.as_ref().and_then(|sr| sr.bounds()));
    let direction_hint = r
        .direction_hint
        .or_else(|| scalar.as_ref().and_then(|sr| sr.direction_hint));
    let tied_corner = r.tied_corner || scalar.as_ref().is_some_and(|sr| sr.tied_corner);
    let report = json!({
        "schema": SCHEMA_VERSION,
        "verdict": r.verdict,
        "method": r.method,
        "margin": r.margin(),
        "bounds": bounds,
        "direction_hint": direction_hint,
        "tied_corner": tied_corner,
        "witness": r.witness,
    });
    let code = match r.verdict {
        OverlapVerdict::Overlap => EXIT_OK,
        OverlapVerdict::Separated | OverlapVerdict::DegenerateAllEqual => EXIT_SEPARATED,
    };
    let plain = || {
        let mut s = format!("verdict: {:?}\nmethod: {:?}\n", r.verdict, r.method);
        if let Some(m) = r.margin() {
            s.push_str(&format!("margin: {m:e}\n"));
        }
        if let Some(b) = bounds {
            s.push_str(&format!(
                "bounds: L0={} U0={} L1={} U1={}\n",
                b.l0, b.u0, b.l1, b.u1
            ));
        }
        if let Some(h) = direction_hint {
            s.push_str(&format!("direction_hint: {h}\n"));
        }
        s
    };
    Outcome {
        code,
        stdout: render(&report, plain, format),
        stderr,
    }
}

#[derive(Debug, Clone, Serialize)]
struct SuiteEntry {
    #[serde(flatten)]
    summary: SuiteSummary,
    certified: bool,
    errors: Vec<String>,
}

fn thread_pool() -> Result<rayon::ThreadPool, String> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => b = b.num_threads(n),
            _ => {
                return Err(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                ))
            }
        }
    }
    b.build().map_err(|e| e.to_string())
}

fn run_verify(a: &VerifyArgs, format: OutputFormat) -> Outcome {
    if a.trials == 0 {
        return Outcome::input_error("--trials must be at least 1");
    }
    if a.dims.iter().any(|&d| d == 0) {
        return Outcome::input_error("--dims entries must be at least 1");
    }
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => return Outcome::input_error(e),
    };
    let links: Vec<Link> = a
        .link
        .map_or_else(|| Link::SMOOTH_CERTIFIED.to_vec(), |l| vec![l]);
    let theorems: &[Theorem] = match a.theorem {
        TheoremChoice::Sign => &[Theorem::SignMatch],
        TheoremChoice::Zero => &[Theorem::ZeroIffEqualMeans],
        TheoremChoice::Angle => &[Theorem::AcuteAngle],
        TheoremChoice::All => &[
            Theorem::SignMatch,
            Theorem::ZeroIffEqualMeans,
            Theorem::AcuteAngle,
        ],
    };

    let mut cells = Vec::new();
    for &theorem in theorems {
        for &link in &links {
            for &d in &a.dims {
                if theorem == Theorem::SignMatch && d != 1 {
                    continue;
                }
                cells.push((theorem, link, d));
            }
        }
    }
    if cells.is_empty() {
        return Outcome::input_error("the sign theorem needs d = 1 in --dims");
    }

    let mut suites = Vec::new();
    for (k, &(theorem, link, d)) in cells.iter().enumerate() {
        // distinct stream per cell, independent of thread count
        let seed = binreg_core::verify::generate::trial_seed(a.seed, 1_000_003 * (k as u64 + 1));
        let outcomes: Vec<TrialOutcome> = pool.install(|| {
            (0..a.trials as u64)
                .into_par_iter()
                .map(|i| run_trial(theorem, link, d, seed, i))
                .collect()
        });
        let errors = outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| match o {
                TrialOutcome::Error(e) => Some(format!("trial {i}: {e}")),
                TrialOutcome::Checked(r) if !r.holds => Some(format!("trial {i}: {}", r.details)),
                _ => None,
            })
            .take(5)
            .collect();
        suites.push(SuiteEntry {
            summary: summarize(theorem, link, d, &outcomes),
            certified: is_certified(&link),
            errors,
        });
    }

    let trials: usize = suites.iter().map(|s| s.summary.trials).sum();
    let passes: usize = suites.iter().map(|s| s.summary.passes).sum();
    let failures: usize = suites.iter().map(|s| s.summary.failures).sum();
    let skipped: usize = suites.iter().map(|s| s.summary.skipped).sum();
    let worst_slack = suites
        .iter()
        .filter(|s| s.summary.theorem != Theorem::ZeroIffEqualMeans)
        .filter_map(|s| s.summary.worst_slack)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    let certified_failures = suites.iter().any(|s| s.certified && s.summary.failures > 0);
    let report = json!({
        "schema": SCHEMA_VERSION,
        "seed": a.seed,
        "trials": trials,
        "passes": passes,
        "failures": failures,
        "skipped": skipped,
        "worst_slack": worst_slack,
        "ok": !certified_failures,
        "suites": suites,
    });
    let plain = || {
        let mut s = String::new();
        for e in &suites {
            let m = &e.summary;
            s.push_str(&format!(
                "{:?} {} d={}: {}/{} pass, {} failures, {} skipped{}\n",
                m.theorem,
                m.link,
                m.dims,
                m.passes,
                m.trials,
                m.failures,
                m.skipped,
                if e.certified { "" } else { " (not certified)" }
            ));
        }
        s.push_str(&format!(
            "total: {passes}/{trials} pass, {failures} failures, {skipped} skipped\n"
        ));
        s
    };
    let mut stderr = String::new();
    for e in suites.iter().filter(|e| !e.errors.is_empty()) {
        for msg in &e.errors {
            stderr.push_str(&format!(
                "{:?} {} d={}: {msg}\n",
                e.summary.theorem, e.summary.link, e.summary.dims
            ));
        }
    }
    Outcome {
        code: if certified_failures {
            EXIT_VERIFY_FAILED
        } else {
            EXIT_OK
        },
        stdout: render(&report, plain, format),
        stderr,
    }
}

fn run_simulate(a: &SimulateArgs) -> Outcome {
    let ds = match a.kind {
        SimKind::Overlapping => gen_overlapping(a.n, a.d, a.seed),
        SimKind::Separated => gen_separated(a.n, a.d, a.seed),
        SimKind::Balanced => gen_balanced(a.n, a.d, a.seed),
        SimKind::Gaussian => {
            let mu0 = vec![0.0; a.d];
            let mut mu1 = vec![0.0; a.d];
            if let Some(first) = mu1.first_mut() {
                *first = a.shift;
            }
            let sigma: Vec<Vec<f64>> = (0..a.d)
                .map(|i| (0..a.d).map(|j| f64::from(u8::from(i == j))).collect())
                .collect();
            gen_gaussian(a.n, &mu0, &mu1, &sigma, a.seed)
        }
    };
    let ds = match ds {
        Ok(ds) => ds,
        Err(e) => return Outcome::input_error(e),
    };
    let csv = ds.to_csv_string();
    match &a.out {
        Some(path) => match std::fs::write(path, &csv) {
            Ok(()) => Outcome {
                code: EXIT_OK,
                stdout: String::new(),
                stderr: format!("wrote {} rows to {}\n", ds.n(), path.display()),
            },
            Err(e) => Outcome::input_error(format!("{}: {e}", path.display())),
        },
        None => Outcome {
            code: EXIT_OK,
            stdout: csv,
            stderr: String::new(),
        },
    }
}
