//! `citensor`: command-line access to tensor validation, bases,
//! decompositions, bracket identity checks and trajectory simulation.
//!
//! Exit codes: 0 success, 1 validation failure or unreadable input (reason
//! as JSON), 2 usage error.

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use citensor::basis::{self, ConeWitness};
use citensor::brackets::{self, AxiomReport};
use citensor::dynamics::{self, IntegratorConfig, Trajectory};
use citensor::simple::{self, Simplicity};
use citensor::system::SystemFile;
use citensor::tensor::{self, Tensor4};
use citensor::{tol, Error};

#[derive(Parser, Debug)]
#[command(name = "citensor", version, about = "Conservative-irreversible 4-tensors: validation, bases, decompositions and dynamics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Seed for every randomized probe set.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for residual verdicts.
    #[arg(long, global = true, default_value_t = tol::DEFAULT_TOL)]
    tol: f64,
    /// JSON output (default).
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// CSV output: `key,value` rows, or a table for lists.
    #[arg(long, global = true)]
    csv: bool,
    /// Suppress informational output.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a tensor against the V₃ conditions and the sampled PSD condition.
    Validate {
        /// Tensor JSON (`-` for stdin).
        #[arg(long = "in", default_value = "-")]
        input: String,
    },
    /// Print the dimension formula value.
    Dim {
        #[arg(long)]
        n: usize,
        /// Print the nullspace dimension of the V₃ conditions instead.
        #[arg(long)]
        full: bool,
    },
    /// Write the basis of V₃ as tagged tensor JSON.
    Basis {
        #[arg(long)]
        n: usize,
        /// The positive-semidefinite variant.
        #[arg(long)]
        psd: bool,
        /// Include the `b1`/`b2` elements so the list spans V₃.
        #[arg(long)]
        full: bool,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose a V₃ tensor into weighted simple components.
    Decompose {
        #[arg(long = "in", default_value = "-")]
        input: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide simplicity; prints the gauge-fixed J or a refuting entry.
    IsSimple {
        #[arg(long = "in", default_value = "-")]
        input: String,
    },
    /// Axiom and SQPS identity residuals for the tensor of a system spec.
    Properties {
        #[arg(long)]
        spec: PathBuf,
        /// Probes per report.
        #[arg(long, default_value_t = 1000)]
        probes: usize,
    },
    /// Integrate a system with RK4 and write the trajectory CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated initial state; defaults to the spec's `x0`.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        /// Trajectory CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Thermodynamic diagnostics of a trajectory CSV.
    Diagnose {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Integrate several initial states in parallel and report diagnostics for each.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Repeatable; one comma-separated initial state per flag.
        #[arg(long, required = true)]
        x0: Vec<String>,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
        /// Directory for `traj_<k>.csv` files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Outcome of a subcommand before printing.
enum Outcome {
    Ok(Value),
    Text(String),
    Failed(Value),
}

fn read_input(input: &str) -> Result<String, Error> {
    if input == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(input)?)
    }
}

fn read_tensor(input: &str) -> Result<Tensor4, Error> {
    Tensor4::from_json(&read_input(input)?)
}

fn parse_point(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidConfig(format!("cannot parse point {text:?}: {e}")))
}

fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn validate(input: &str, tol: f64) -> Result<Outcome, Error> {
    let t = read_tensor(input)?;
    let report = tensor::check_symmetries(&t, tol);
    let evidence = basis::membership_s(&t, tol);
    let mut out = json!({
        "valid": report.passes(),
        "n": t.n(),
        "report": report,
    });
    match evidence.witness {
        None => Ok(Outcome::Ok(out)),
        Some(ConeWitness::Constraint { condition, index, residual }) => {
            out["reason"] = json!({
                "condition": condition.name(),
                "worst_index": index,
                "residual": residual,
            });
            Ok(Outcome::Failed(out))
        }
        Some(ConeWitness::Direction { y, eigenvalue }) => {
            out["reason"] = json!({
                "condition": "psd",
                "direction": y,
                "eigenvalue": eigenvalue,
            });
            Ok(Outcome::Failed(out))
        }
    }
}

fn basis_cmd(n: usize, psd: bool, full: bool, out: Option<&Path>) -> Result<Outcome, Error> {
    let value = match (psd, full) {
        (false, false) => serde_json::to_value(basis::enumerate_basis(n)?)?,
        (false, true) => serde_json::to_value(basis::full_basis(n)?)?,
        (true, false) => serde_json::to_value(basis::psd_basis(n)?)?,
        (true, true) => serde_json::to_value(basis::full_psd_basis(n)?)?,
    };
    match out {
        Some(path) => {
            write_json(path, &value)?;
            let count = value.as_array().map_or(0, Vec::len);
            Ok(Outcome::Ok(json!({ "n": n, "elements": count, "out": path })))
        }
        None => Ok(Outcome::Ok(value)),
    }
}

fn decompose_cmd(input: &str, out: Option<&Path>, tol: f64) -> Result<Outcome, Error> {
    let t = read_tensor(input)?;
    let d = match simple::decompose(&t, tol) {
        Ok(d) => d,
        Err(Error::NotInV3 { residual }) => {
            return Ok(Outcome::Failed(json!({
                "error": "not_in_v3",
                "residual": residual,
            })))
        }
        Err(e) => return Err(e),
    };
    let value = json!({ "n": t.n(), "components": d.components, "residual": d.residual });
    match out {
        Some(path) => {
            write_json(path, &value)?;
            Ok(Outcome::Ok(json!({
                "components": d.components.len(),
                "residual": d.residual,
                "out": path,
            })))
        }
        None => Ok(Outcome::Ok(value)),
    }
}

fn is_simple_cmd(input: &str, tol: f64) -> Result<Outcome, Error> {
    let t = read_tensor(input)?;
    let residual = tensor::v3_residual(&t);
    if residual > tol {
        return Ok(Outcome::Failed(json!({ "error": "not_in_v3", "residual": residual })));
    }
    Ok(Outcome::Ok(match simple::is_simple(&t, tol) {
        Simplicity::Simple { j, weight, residual } => json!({
            "verdict": "simple",
            "j": j,
            "weight": weight,
            "residual": residual,
        }),
        Simplicity::NotSimple(r) => json!({
            "verdict": "not_simple",
            "witness": r.indices,
            "observed": r.observed,
            "implied": r.implied,
            "reason": r.reason,
        }),
    }))
}

fn properties(spec: &Path, probes: usize, seed: u64) -> Result<Outcome, Error> {
    let file = SystemFile::load(spec)?;
    let eps = file.tensor_field()?;
    let axioms: AxiomReport = brackets::axiom_suite(&eps, probes, seed);
    let sqps = brackets::check_sqps_identities(&eps, &brackets::sqps_probes(file.n, probes, seed ^ 0x5095));
    let passes = axioms.passes(1e-8, 1e-10, 1e-12) && sqps.max_residual() <= 1e-8 && sqps.min_value >= -1e-12;
    let value = json!({ "passes": passes, "axioms": axioms, "sqps": sqps });
    Ok(if passes { Outcome::Ok(value) } else { Outcome::Failed(value) })
}

fn initial_state(file: &SystemFile, x0: Option<&str>) -> Result<Vec<f64>, Error> {
    match x0 {
        Some(text) => parse_point(text),
        None => file
            .x0
            .clone()
            .ok_or_else(|| Error::InvalidConfig("no --x0 given and the spec has no x0".into())),
    }
}

fn simulate(
    spec: &Path,
    x0: Option<&str>,
    step: f64,
    t_end: f64,
    record_every: usize,
    out: Option<&Path>,
) -> Result<Outcome, Error> {
    let file = SystemFile::load(spec)?;
    let system = file.build()?;
    let x0 = initial_state(&file, x0)?;
    let cfg = IntegratorConfig::rk4(step, t_end, record_every)?;
    let traj = dynamics::integrate(&system, &x0, &cfg)?;
    match out {
        Some(path) => {
            traj.save_csv(path)?;
            Ok(Outcome::Ok(serde_json::to_value(dynamics::diagnostics(&traj)?)?))
        }
        None => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            Ok(Outcome::Text(String::from_utf8(buf).expect("CSV is UTF-8")))
        }
    }
}

fn sweep(
    spec: &Path,
    x0s: &[String],
    step: f64,
    t_end: f64,
    record_every: usize,
    out_dir: Option<&Path>,
) -> Result<Outcome, Error> {
    let file = SystemFile::load(spec)?;
    let system = file.build()?;
    let points = x0s.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>, _>>()?;
    let cfg = IntegratorConfig::rk4(step, t_end, record_every)?;
    let runs = dynamics::integrate_many(&system, &points, &cfg);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::with_capacity(runs.len());
    let mut failed = false;
    for (k, (x0, run)) in points.iter().zip(runs).enumerate() {
        match run {
            Ok(traj) => {
                if let Some(dir) = out_dir {
                    traj.save_csv(dir.join(format!("traj_{k}.csv")))?;
                }
                let mut row = serde_json::to_value(dynamics::diagnostics(&traj)?)?;
                row["x0"] = json!(x0);
                rows.push(row);
            }
            Err(e) => {
                failed = true;
                rows.push(json!({ "x0": x0, "error": e.to_string() }));
            }
        }
    }
    Ok(if failed {
        Outcome::Failed(Value::Array(rows))
    } else {
        Outcome::Ok(Value::Array(rows))
    })
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { input } => validate(input, g.tol),
        Command::Dim { n, full } => {
            if *n == 0 {
                return Err(Error::UnsupportedDimension(0));
            }
            let d = if *full {
                basis::dim_v3_full(*n as u64)
            } else {
                basis::dim_v3(*n as u64)
            };
            Ok(Outcome::Text(format!("{d}\n")))
        }
        Command::Basis { n, psd, full, out } => basis_cmd(*n, *psd, *full, out.as_deref()),
        Command::Decompose { input, out } => decompose_cmd(input, out.as_deref(), g.tol),
        Command::IsSimple { input } => is_simple_cmd(input, g.tol),
        Command::Properties { spec, probes } => properties(spec, *probes, g.seed),
        Command::Simulate {
            spec,
            x0,
            step,
            t_end,
            record_every,
            out,
        } => simulate(spec, x0.as_deref(), *step, *t_end, *record_every, out.as_deref()),
        Command::Diagnose { input } => {
            let traj = Trajectory::load_csv(input)?;
            Ok(Outcome::Ok(serde_json::to_value(dynamics::diagnostics(&traj)?)?))
        }
        Command::Sweep {
            spec,
            x0,
            step,
            t_end,
            record_every,
            out_dir,
        } => sweep(spec, x0, *step, *t_end, *record_every, out_dir.as_deref()),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, inner, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar_text(other))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Objects become `key,value` rows; arrays of objects become a table.
fn to_csv(v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Array(items) => {
            let tables: Vec<Vec<(String, String)>> = items
                .iter()
                .map(|item| {
                    let mut rows = Vec::new();
                    flatten("", item, &mut rows);
                    rows
                })
                .collect();
            let mut header: Vec<String> = Vec::new();
            for t in &tables {
                for (k, _) in t {
                    if !header.contains(k) {
                        header.push(k.clone());
                    }
                }
            }
            out.push_str(&header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
            out.push('\n');
            for t in &tables {
                let line: Vec<String> = header
                    .iter()
                    .map(|h| t.iter().find(|(k, _)| k == h).map_or(String::new(), |(_, v)| csv_field(v)))
                    .collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        other => {
            let mut rows = Vec::new();
            flatten("", other, &mut rows);
            out.push_str("key,value\n");
            for (k, val) in rows {
                out.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&val)));
            }
        }
    }
    out
}

fn render(v: &Value, csv: bool) -> String {
    if csv {
        to_csv(v)
    } else {
        let mut s = serde_json::to_string_pretty(v).expect("values serialize");
        s.push('\n');
        s
    }
}

fn error_value(e: &Error) -> Value {
    let kind = match e {
        Error::Json(_) | Error::Csv(_) | Error::Io(_) => "input",
        Error::NotInV3 { .. } => "not_in_v3",
        Error::Noninteraction { .. } => "noninteraction",
        Error::NonFiniteState { .. } => "non_finite_state",
        Error::InvalidConfig(_) => "invalid_config",
        _ => "invalid",
    };
    json!({ "error": kind, "message": e.to_string() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let csv = cli.global.csv;
    let quiet = cli.global.quiet;
    let mut stdout = io::stdout().lock();
    let result = run(&cli);
    let (text, code) = match result {
        Ok(Outcome::Ok(v)) => (render(&v, csv), 0),
        Ok(Outcome::Text(t)) => (t, 0),
        Ok(Outcome::Failed(v)) => (render(&v, csv), 1),
        Err(e) => {
            let _ = io::stderr().write_all(render(&error_value(&e), false).as_bytes());
            return ExitCode::from(1);
        }
    };
    let informational = matches!(
        cli.command,
        Command::Basis { out: Some(_), .. } | Command::Decompose { out: Some(_), .. } | Command::Simulate { out: Some(_), .. }
    );
    if !(quiet && informational && code == 0) {
        let _ = stdout.write_all(text.as_bytes());
    }
    ExitCode::from(code)
}
