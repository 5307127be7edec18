//! `bmarks`: command-line front end for marked-event counts in multi-type
//! branching processes. Every command reads a JSON config and writes a JSON
//! report.

mod config;
mod report;
mod values;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use branching_marks::extinction::{extinction_prob, marked_root, DEFAULT_MAX_ITER, DEFAULT_TOL};
use branching_marks::model::DEFAULT_CRITICALITY_TOL;
use branching_marks::pgf::{extinction_pgf, horizon_pgf, StartState};
use branching_marks::simulate::{
    mc_extinction_counts, mc_pgf, McConfig, McEstimate, Simulator, DEFAULT_MAX_POP,
    TRUNCATION_THRESHOLD,
};
use branching_marks::{ErrorKind, MarkAssignment};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::Config;

/// Standard errors allowed between a Monte Carlo mean and the analytic value.
const COMPARE_Z: f64 = 4.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Lib(#[from] branching_marks::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Nonconvergence => 3,
                ErrorKind::Truncation => 4,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bmarks",
    version,
    about = "Counts of marked splits in multi-type branching processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a config; print its canonical form.
    Validate(Opts),
    /// Mean matrix at 1, its Perron root and the criticality class.
    Classify(Opts),
    /// Extinction probabilities from each single ancestor.
    Extinction(Opts),
    /// Root of the marked system at the given mark values.
    MarkedRoot(Opts),
    /// Generating function of the marked counts at horizon --t.
    Pgf(Opts),
    /// Generating function of the marked counts at extinction.
    ExtinctionPgf(Opts),
    /// Monte Carlo at horizon --t, or until extinction when --t is absent.
    Simulate(Opts),
    /// Monte Carlo against the analytic horizon generating function.
    Compare(Opts),
}

#[derive(Debug, Args, Clone)]
struct Opts {
    /// Config file; reads stdin when absent or "-".
    #[arg(short = 'c', long = "config", value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    #[arg(long = "t", value_name = "T")]
    t: Option<f64>,
    /// Initial population, e.g. 2,1.
    #[arg(long, value_name = "I1,...,ID")]
    start: Option<String>,
    /// Mark values, e.g. "1:(0,0)=0.5;2:(0,0)=0.5" (types are 1-based).
    #[arg(long, value_name = "GRAMMAR")]
    values: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_POP)]
    max_pop: u64,
    /// Worker threads for simulation; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl Opts {
    fn echo(&self) -> Value {
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        if let Some(c) = &self.config {
            put("config", json!(c.display().to_string()));
        }
        if let Some(tol) = self.tol {
            put("tol", json!(tol));
        }
        put("seed", json!(self.seed));
        put("reps", json!(self.reps));
        if let Some(t) = self.t {
            put("t", json!(t));
        }
        if let Some(s) = &self.start {
            put("start", json!(s));
        }
        if let Some(v) = &self.values {
            put("values", json!(v));
        }
        put("max_pop", json!(self.max_pop));
        if let Some(t) = self.threads {
            put("threads", json!(t));
        }
        Value::Object(m)
    }

    fn require_t(&self) -> Result<f64, CliError> {
        self.t
            .ok_or_else(|| CliError::Parse("this command needs --t".into()))
    }

    fn start(&self, d: usize) -> Result<StartState, CliError> {
        let s = self
            .start
            .as_deref()
            .ok_or_else(|| CliError::Parse("this command needs --start".into()))?;
        Ok(StartState::new(values::parse_start(s, d)?))
    }

    /// Mark values with omitted entries set to 1 (`fill`) or rejected.
    fn values(&self, cfg: &Config, fill: bool) -> Result<MarkAssignment, CliError> {
        let map = values::parse_values(self.values.as_deref().unwrap_or(""), cfg.spec.dim())?;
        Ok(MarkAssignment::from_map(
            &cfg.marks,
            &map,
            fill.then_some(1.0),
        )?)
    }

    fn mc(&self) -> McConfig {
        McConfig::new(self.reps, self.seed)
            .with_max_pop(self.max_pop)
            .with_threads(self.threads)
    }
}

struct Outcome {
    results: Value,
    diagnostics: Value,
    /// Raised after the report is written.
    deferred: Option<CliError>,
}

impl Outcome {
    fn ok(results: Value, diagnostics: Value) -> Self {
        Self {
            results,
            diagnostics,
            deferred: None,
        }
    }
}

fn read_config(opts: &Opts) -> Result<Config, CliError> {
    let text = match opts.config.as_deref() {
        Some(p) if p.as_os_str() != "-" => fs::read_to_string(p)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", p.display())))?,
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Parse(format!("cannot read stdin: {e}")))?;
            s
        }
    };
    config::parse_str(&text)
}

fn value_matrix(values: &MarkAssignment) -> Value {
    json!(values.values())
}

fn estimate(e: &McEstimate) -> Value {
    json!({
        "mean": e.mean,
        "std_error": e.std_error,
        "replicas": e.replicas,
        "truncated": e.truncated,
        "truncated_fraction": e.truncated_fraction(),
    })
}

fn truncation_check(e: &McEstimate) -> Option<CliError> {
    (!e.is_reliable()).then_some(CliError::Lib(branching_marks::Error::Truncated {
        truncated: e.truncated,
        replicas: e.replicas,
    }))
}

fn run(name: &str, opts: &Opts, cfg: &Config) -> Result<Outcome, CliError> {
    let spec = &cfg.spec;
    let marks = &cfg.marks;
    match name {
        "validate" => Ok(Outcome::ok(
            json!({
                "d": spec.dim(),
                "marked_vectors": marks.total(),
                "canonical": cfg.canonical(),
            }),
            json!({}),
        )),
        "classify" => {
            let tol = opts.tol.unwrap_or(DEFAULT_CRITICALITY_TOL);
            let c = spec.classify(tol);
            let m = spec.jacobian(&vec![1.0; spec.dim()])?;
            Ok(Outcome::ok(
                json!({
                    "rho": c.rho_one,
                    "class": c.class.as_str(),
                    "mean_matrix": m.rows(),
                    "positively_regular": spec.is_positively_regular(),
                }),
                json!({"tol": tol}),
            ))
        }
        "extinction" => {
            let tol = opts.tol.unwrap_or(DEFAULT_TOL);
            let r = extinction_prob(spec, tol, DEFAULT_MAX_ITER)?.ensure_converged()?;
            Ok(Outcome::ok(
                json!({"q": r.q}),
                json!({"iterations": r.iterations, "residual": r.residual, "tol": tol}),
            ))
        }
        "marked-root" => {
            let tol = opts.tol.unwrap_or(DEFAULT_TOL);
            let vals = opts.values(cfg, true)?;
            let r = marked_root(spec, marks, &vals, tol, DEFAULT_MAX_ITER)?.ensure_converged()?;
            Ok(Outcome::ok(
                json!({"q_marked": r.q_marked, "values": value_matrix(&vals)}),
                json!({"iterations": r.iterations, "residual": r.residual, "tol": tol}),
            ))
        }
        "pgf" => {
            let t = opts.require_t()?;
            let start = opts.start(spec.dim())?;
            let vals = opts.values(cfg, true)?;
            let r = horizon_pgf(spec, marks, &vals, &start, t)?;
            Ok(Outcome::ok(
                json!({"value": r.value, "g": r.flow.g, "values": value_matrix(&vals)}),
                json!({"steps": r.flow.steps_taken, "max_clamp": r.flow.max_clamp}),
            ))
        }
        "extinction-pgf" => {
            let start = opts.start(spec.dim())?;
            let vals = opts.values(cfg, false)?;
            let r = extinction_pgf(spec, marks, &vals, &start)?;
            Ok(Outcome::ok(
                json!({
                    "value": r.value,
                    "conditioned": r.conditioned,
                    "q_used": r.q_used,
                    "q_marked": r.q_marked,
                    "values": value_matrix(&vals),
                }),
                json!({}),
            ))
        }
        "simulate" => simulate(opts, cfg),
        "compare" => {
            let t = opts.require_t()?;
            let start = opts.start(spec.dim())?;
            let vals = opts.values(cfg, true)?;
            let analytic = horizon_pgf(spec, marks, &vals, &start, t)?;
            let sim = Simulator::new(spec, marks)?;
            let est = mc_pgf(&sim, &vals, &start, t, &opts.mc())?;
            let diff = est.mean - analytic.value;
            let pass = diff.abs() <= COMPARE_Z * est.std_error;
            let z = if est.std_error > 0.0 {
                json!(diff / est.std_error)
            } else {
                Value::Null
            };
            Ok(Outcome {
                results: json!({
                    "analytic": analytic.value,
                    "mc_mean": est.mean,
                    "std_error": est.std_error,
                    "difference": diff,
                    "z": z,
                    "threshold_z": COMPARE_Z,
                    "pass": pass,
                }),
                diagnostics: json!({
                    "flow_steps": analytic.flow.steps_taken,
                    "max_clamp": analytic.flow.max_clamp,
                    "monte_carlo": estimate(&est),
                }),
                deferred: truncation_check(&est),
            })
        }
        other => Err(CliError::Parse(format!("unknown command {other}"))),
    }
}

fn simulate(opts: &Opts, cfg: &Config) -> Result<Outcome, CliError> {
    let spec = &cfg.spec;
    let sim = Simulator::new(spec, &cfg.marks)?;
    let start = opts.start(spec.dim())?;
    let vals = opts.values(cfg, true)?;
    if let Some(t) = opts.t {
        let est = mc_pgf(&sim, &vals, &start, t, &opts.mc())?;
        return Ok(Outcome {
            results: json!({"mode": "horizon", "pgf": estimate(&est), "values": value_matrix(&vals)}),
            diagnostics: json!({"truncation_threshold": TRUNCATION_THRESHOLD}),
            deferred: truncation_check(&est),
        });
    }
    let counts = mc_extinction_counts(&sim, &start, &opts.mc())?;
    let histogram: Vec<Value> = counts
        .histogram
        .iter()
        .map(|(l, n)| json!({"counters": l, "replicas": n}))
        .collect();
    let absorbed = counts.absorbed_fraction();
    let supercritical = spec.classify(DEFAULT_CRITICALITY_TOL).is_supercritical();
    // escapes past the cap stand in for survival when the process is supercritical
    let deferred = if supercritical {
        None
    } else {
        truncation_check(&absorbed)
    };
    let labels: Vec<String> = cfg
        .marks
        .keys()
        .map(|k| format!("{}:{}", k.ty + 1, k.j))
        .collect();
    Ok(Outcome {
        results: json!({
            "mode": "extinction",
            "absorbed": counts.absorbed,
            "absorbed_fraction": estimate(&absorbed),
            "counter_labels": labels,
            "histogram": histogram,
            "pgf": estimate(&counts.pgf(&vals)),
            "conditional_pgf": estimate(&counts.conditional_pgf(&vals)),
            "values": value_matrix(&vals),
        }),
        diagnostics: json!({
            "truncated": counts.truncated,
            "supercritical": supercritical,
            "truncation_threshold": TRUNCATION_THRESHOLD,
        }),
        deferred,
    })
}

fn command_name(c: &Command) -> (&'static str, &Opts) {
    match c {
        Command::Validate(o) => ("validate", o),
        Command::Classify(o) => ("classify", o),
        Command::Extinction(o) => ("extinction", o),
        Command::MarkedRoot(o) => ("marked-root", o),
        Command::Pgf(o) => ("pgf", o),
        Command::ExtinctionPgf(o) => ("extinction-pgf", o),
        Command::Simulate(o) => ("simulate", o),
        Command::Compare(o) => ("compare", o),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let (name, opts) = command_name(&cli.command);
    let cfg = read_config(opts)?;
    let outcome = run(name, opts, &cfg)?;
    let report = json!({
        "command": name,
        "args": opts.echo(),
        "input_digest": cfg.digest(),
        "results": outcome.results,
        "diagnostics": outcome.diagnostics,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    let mut text = report::to_string(&report);
    text.push('\n');
    match &opts.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Parse(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let _ = io::stdout().write_all(text.as_bytes());
        }
    }
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
