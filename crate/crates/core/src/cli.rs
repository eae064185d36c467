//! Command-line interface. Every subcommand prints one JSON document on
//! stdout; exit code 0 means pass, 1 a verification or classification
//! failure and 2 a usage or input error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::corpus;
use crate::detsys::{verify_operator, VerifyConfig};
use crate::diffop::{parse_generator, NamedGenerator};
use crate::equiv::{self, TransformSpec};
use crate::expr::{ParamTable, Scope};
use crate::finder::{find_symmetries, FinderConfig};
use crate::liealg;
use crate::pauli::{parse_matrix, MatExpr};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "spsym", version, about = "Lie symmetries of Schrödinger and Schrödinger-Pauli equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Sample points (default 20 for verify, 40 for find).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that each generator is a symmetry of the potential.
    Verify {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long = "generator", required = true)]
        generators: Vec<String>,
    },
    /// Compute the symmetry algebra of the potential.
    Find {
        #[arg(long)]
        potential: PathBuf,
    },
    /// Identify the Lie algebra spanned by the generators, or by the found
    /// symmetries when no generator is given.
    Classify {
        #[arg(long)]
        potential: PathBuf,
        #[arg(long = "generator")]
        generators: Vec<String>,
    },
    /// Equivalence transformations.
    Equiv {
        #[command(subcommand)]
        action: EquivCommand,
    },
    /// Corpus of tabulated potentials.
    Corpus {
        #[command(subcommand)]
        action: CorpusCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum EquivCommand {
    /// Transform a potential and, optionally, carry generators along.
    Apply {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        potential: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Comma-separated components, or a single value for the third axis.
        #[arg(long, default_value = "0,0,1")]
        kappa: String,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        /// Real components m0,m1,m2,m3 of the constant matrix.
        #[arg(long, default_value = "1,0,0,0")]
        matrix: String,
        #[arg(long = "generator")]
        generators: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CorpusCommand {
    Run {
        #[arg(long)]
        table: Option<u8>,
        #[arg(long)]
        item: Option<u8>,
        /// Include wall-clock timings (breaks byte-identical reruns).
        #[arg(long)]
        timings: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Et0,
    Et01,
    Et1,
    Et2,
    Et3,
}

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

fn usage(msg: impl Into<String>) -> Outcome {
    Outcome { code: EXIT_USAGE, report: json!({ "error": msg.into() }) }
}

fn pass_code(ok: bool) -> i32 {
    if ok {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

/// Potential file: `#` comments, an optional `placeholders = G/2 F/1` line,
/// `name = value` parameter lines, and the potential itself on the
/// remaining lines.
pub fn parse_potential_file(text: &str) -> Result<(Scope, MatExpr), String> {
    let mut params = ParamTable::reserved();
    let mut placeholders = Vec::new();
    let mut body = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("placeholders") {
            let rest = rest.trim_start().strip_prefix('=').unwrap_or(rest);
            for decl in rest.split([' ', ',']).filter(|d| !d.is_empty()) {
                let (name, arity) = decl
                    .split_once('/')
                    .or_else(|| decl.strip_suffix(')').and_then(|d| d.split_once('(')))
                    .ok_or_else(|| format!("bad placeholder declaration `{decl}`"))?;
                let arity: usize = arity.parse().map_err(|_| format!("bad arity in `{decl}`"))?;
                placeholders.push((name.to_string(), arity));
            }
            continue;
        }
        if let Some((name, value)) = line.split_once('=') {
            let name = name.trim();
            if let Ok(v) = value.trim().parse::<f64>() {
                params.set(name, v).map_err(|e| e.to_string())?;
                continue;
            }
            return Err(format!("bad parameter line `{line}`"));
        }
        body.push(line);
    }
    if body.is_empty() {
        return Err("no potential given".into());
    }
    let mut scope = Scope::new(params);
    for (n, a) in &placeholders {
        scope = scope.with_placeholder(n, *a);
    }
    let v = parse_matrix(&body.join(" "), &scope).map_err(|e| e.to_string())?;
    Ok((scope, v))
}

fn load_potential(path: &PathBuf) -> Result<(Scope, MatExpr), Outcome> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_potential_file(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>, Outcome> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad {what} `{s}`")))?;
    if v.len() != n {
        return Err(usage(format!("{what} needs {n} components, got {}", v.len())));
    }
    Ok(v)
}

fn verify_config(run: &RunConfig) -> VerifyConfig {
    VerifyConfig { seed: run.seed, samples: run.samples.unwrap_or(20), tol: run.tol, ..VerifyConfig::default() }
}

fn finder_config(run: &RunConfig) -> FinderConfig {
    FinderConfig { seed: run.seed, samples: run.samples.unwrap_or(40), ..FinderConfig::default() }
}

fn verify(run: &RunConfig, potential: &PathBuf, generators: &[String]) -> Result<Outcome, Outcome> {
    let (scope, v) = load_potential(potential)?;
    let cfg = verify_config(run);
    let mut results = Vec::new();
    let mut all = true;
    for g in generators {
        let q = parse_generator(g, &scope).map_err(|e| usage(format!("generator `{g}`: {e}")))?;
        let r = verify_operator(&v, &q, &scope, &cfg).map_err(|e| usage(format!("generator `{g}`: {e}")))?;
        all &= r.pass;
        results.push(json!({
            "generator": g,
            "pass": r.pass,
            "relative_residual": r.relative_residual(),
            "residuals": r.residuals,
        }));
    }
    Ok(Outcome {
        code: pass_code(all),
        report: json!({ "pass": all, "seed": run.seed, "samples": cfg.samples, "tol": cfg.tol, "generators": results }),
    })
}

fn find(run: &RunConfig, potential: &PathBuf) -> Result<Outcome, Outcome> {
    let (scope, v) = load_potential(potential)?;
    match find_symmetries(&v, &scope, &finder_config(run)) {
        Ok(alg) => {
            let mut report = to_value(&alg);
            report["seed"] = json!(run.seed);
            Ok(Outcome { code: EXIT_PASS, report })
        }
        Err(e) => Ok(Outcome { code: EXIT_FAIL, report: json!({ "error": e.to_string() }) }),
    }
}

fn classify(run: &RunConfig, potential: &PathBuf, generators: &[String]) -> Result<Outcome, Outcome> {
    let (scope, v) = load_potential(potential)?;
    let basis: Vec<NamedGenerator> = if generators.is_empty() {
        match find_symmetries(&v, &scope, &finder_config(run)) {
            Ok(alg) => alg.generators,
            Err(e) => return Ok(Outcome { code: EXIT_FAIL, report: json!({ "error": e.to_string() }) }),
        }
    } else {
        generators
            .iter()
            .map(|g| {
                parse_generator(g, &scope)
                    .map(|op| NamedGenerator::new(g.clone(), op))
                    .map_err(|e| usage(format!("generator `{g}`: {e}")))
            })
            .collect::<Result<_, _>>()?
    };
    let sc = match liealg::structure_constants::<f64>(&basis, &scope, run.seed) {
        Ok(sc) => sc,
        Err(e) => return Ok(Outcome { code: EXIT_FAIL, report: json!({ "error": e.to_string() }) }),
    };
    let c = liealg::classify(&sc);
    let ok = !c.candidates.is_empty();
    Ok(Outcome {
        code: pass_code(ok),
        report: json!({
            "dimension": basis.len(),
            "basis": basis.iter().map(|g| g.name.clone()).collect::<Vec<_>>(),
            "classification": c,
            "jacobi_residual": sc.jacobi_residual(),
        }),
    })
}

#[allow(clippy::too_many_arguments)]
fn equiv_apply(
    run: &RunConfig,
    kind: Kind,
    potential: &PathBuf,
    omega: f64,
    kappa: &str,
    mu: f64,
    nu: f64,
    matrix: &str,
    generators: &[String],
) -> Result<Outcome, Outcome> {
    let (scope, v) = load_potential(potential)?;
    let spec = match kind {
        Kind::Et0 => {
            let m = parse_list(matrix, 4, "matrix")?;
            TransformSpec::Et0 { m: [(m[0], 0.0), (m[1], 0.0), (m[2], 0.0), (m[3], 0.0)] }
        }
        Kind::Et01 => TransformSpec::Et01 { mu, nu },
        Kind::Et1 | Kind::Et2 if omega == 0.0 => return Err(usage("omega must be nonzero")),
        Kind::Et1 => TransformSpec::Et1 { omega },
        Kind::Et2 => TransformSpec::Et2 { omega },
        Kind::Et3 => {
            let k = if kappa.contains(',') { parse_list(kappa, 3, "kappa")? } else { vec![0.0, 0.0, parse_list(kappa, 1, "kappa")?[0]] };
            TransformSpec::Et3 { kappa: [k[0], k[1], k[2]] }
        }
    };
    let (out, report) = match equiv::transform_with_report(&v, &spec, &scope, run.seed, run.tol) {
        Ok(r) => r,
        Err(e) => return Ok(Outcome { code: EXIT_FAIL, report: json!({ "transform": spec, "error": e.to_string() }) }),
    };
    let mut ok = report.pass;
    let cfg = verify_config(run);
    let mut carried = Vec::new();
    for g in generators {
        let q = parse_generator(g, &scope).map_err(|e| usage(format!("generator `{g}`: {e}")))?;
        let qt = equiv::conjugate_generator(&q, &spec).map_err(|e| usage(format!("generator `{g}`: {e}")))?;
        let r = verify_operator(&out, &qt, &scope, &cfg).map_err(|e| usage(format!("generator `{g}`: {e}")))?;
        ok &= r.pass;
        carried.push(json!({ "generator": g, "pass": r.pass, "relative_residual": r.relative_residual() }));
    }
    let mut value = to_value(&report);
    if !carried.is_empty() {
        value["generators"] = json!(carried);
    }
    value["pass"] = json!(ok);
    Ok(Outcome { code: pass_code(ok), report: value })
}

fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| k != "seconds" && k != "slowest_row_seconds");
            m.values_mut().for_each(strip_timings);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

fn corpus_run(run: &RunConfig, table: Option<u8>, item: Option<u8>, timings: bool) -> Result<Outcome, Outcome> {
    let rows = corpus::load().map_err(|e| usage(e.to_string()))?;
    let rows = corpus::select(rows, table, item);
    if rows.is_empty() {
        return Err(usage("no corpus row matches the selection"));
    }
    let cfg = corpus::RunConfig { verify: verify_config(run), classify: true };
    let summary = corpus::run_rows(&rows, &cfg).map_err(|e| usage(e.to_string()))?;
    let ok = summary.failures.is_empty();
    let mut report = to_value(&summary);
    if !timings {
        strip_timings(&mut report);
    }
    report["pass"] = json!(ok);
    Ok(Outcome { code: pass_code(ok), report })
}

fn dispatch(cli: &Cli) -> Outcome {
    let run = &cli.run;
    let r = match &cli.command {
        Command::Verify { potential, generators } => verify(run, potential, generators),
        Command::Find { potential } => find(run, potential),
        Command::Classify { potential, generators } => classify(run, potential, generators),
        Command::Equiv { action: EquivCommand::Apply { kind, potential, omega, kappa, mu, nu, matrix, generators } } => {
            equiv_apply(run, *kind, potential, *omega, kappa, *mu, *nu, matrix, generators)
        }
        Command::Corpus { action: CorpusCommand::Run { table, item, timings } } => corpus_run(run, *table, *item, *timings),
    };
    r.unwrap_or_else(|e| e)
}

/// Runs the command line and returns the exit code and the JSON text.
pub fn run<I, S>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return (EXIT_PASS, e.to_string());
            }
            let out = usage(e.to_string());
            return (out.code, serde_json::to_string_pretty(&out.report).unwrap());
        }
    };
    let outcome = if cli.run.jobs > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(cli.run.jobs).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => usage(e.to_string()),
        }
    } else {
        dispatch(&cli)
    };
    let text = serde_json::to_string_pretty(&outcome.report).unwrap();
    if let Some(path) = &cli.run.output {
        if let Err(e) = std::fs::write(path, &text) {
            let out = usage(format!("{}: {e}", path.display()));
            return (out.code, serde_json::to_string_pretty(&out.report).unwrap());
        }
    }
    (outcome.code, text)
}
