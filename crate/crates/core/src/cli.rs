//! Command-line front end: `eval`, `check` and `simulate`.
//!
//! Exit codes are 0 on success (and when every check passes), 1 when a check
//! fails or a computation cannot reach its tolerance, and 2 on usage, config
//! or domain errors. Errors are reported as one line on stderr.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::checks::Suite;
use crate::error::{Error, Result};
use crate::identities::{self, EntranceExitMode, LadderSide};
use crate::model::{IdentityReport, Point, StableParams};
use crate::montecarlo::{self, Experiment, ExperimentOutcome};
use crate::operators::{self, SphereFunction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the default master seed for `simulate`.
pub const SEED_ENV: &str = "STABLEFLUCT_SEED";

#[derive(Debug, Parser)]
#[command(name = "stablefluct", version, about = "Fluctuation identities for isotropic stable processes")]
struct Cli {
    /// JSON document whose keys mirror the flag names; flags given on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one closed form and print it as JSON.
    Eval(EvalArgs),
    /// Run an identity suite and print the case reports as JSON.
    Check(CheckArgs),
    /// Run a Monte Carlo experiment and write one CSV row.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    identity: String,
    #[arg(long)]
    d: usize,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Operator index `z` of `rho_z` and `R_z` (real part).
    #[arg(long, allow_hyphen_values = true)]
    index: Option<f64>,
    /// Argument of the ladder Levy density.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    /// `entrance` or `exit`.
    #[arg(long)]
    mode: Option<String>,
    /// `minus` or `plus`.
    #[arg(long)]
    side: Option<String>,
    /// Function on the sphere: `1` or a coordinate `x1`, `x2`, ...
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    suite: String,
    #[arg(long)]
    d: usize,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Overrides the per-case tolerances.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long)]
    d: usize,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    /// Time step; `first-entrance-position` without it uses the exact sampler.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    doublings: Option<u32>,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Manifest destination; defaults to `<out>.manifest.json` when `--out` is given.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

/// Default time step of the Euler experiments.
pub const DEFAULT_DT: f64 = 1e-3;
/// Default number of doublings of the radial maximum for `reflected-stationary`.
pub const DEFAULT_DOUBLINGS: u32 = 8;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => return fail(stderr, EXIT_USAGE, &e.to_string()),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            return fail(stderr, EXIT_USAGE, line.trim_start_matches("error: "));
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => run_eval(a).and_then(|doc| emit(stdout, a.out.as_deref(), &json_text(&doc)).map(|_| EXIT_OK)),
        Command::Check(a) => run_check(a).and_then(|(doc, ok)| {
            emit(stdout, a.out.as_deref(), &json_text(&doc))?;
            Ok(if ok { EXIT_OK } else { EXIT_FAILED })
        }),
        Command::Simulate(a) => run_simulate(a, &args, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => fail(stderr, exit_code(&e), &e.to_string()),
    }
}

fn fail(stderr: &mut dyn Write, code: i32, msg: &str) -> i32 {
    let _ = writeln!(stderr, "stablefluct: {}", msg.replace('\n', " "));
    code
}

/// Usage and domain errors exit with 2, numerical failures with 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::Pole(_) => EXIT_USAGE,
        Error::ToleranceNotMet { .. } | Error::Singularity(_) | Error::RejectionBudgetExceeded { .. } => EXIT_FAILED,
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Replaces `--config PATH` by the flags it defines that are not already on
/// the command line. Keys must name flags of the chosen subcommand.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            match it.next() {
                Some(p) => path = Some(p),
                None => return config_err("--config requires a path"),
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {path} is not valid JSON: {e}")))?;
    let Value::Object(map) = doc else {
        return config_err(format!("config {path} must be a JSON object"));
    };

    let commands = ["eval", "check", "simulate"];
    let on_cli = rest.iter().skip(1).find(|a| commands.contains(&a.as_str())).cloned();
    let from_file = match map.get("command") {
        None => None,
        Some(Value::String(s)) if commands.contains(&s.as_str()) => Some(s.clone()),
        Some(other) => return config_err(format!("config key 'command' must be one of eval, check, simulate, got {other}")),
    };
    let command = match (on_cli, from_file) {
        (Some(c), Some(f)) if c != f => return config_err(format!("config command '{f}' conflicts with subcommand '{c}'")),
        (Some(c), _) => c,
        (None, Some(f)) => {
            rest.insert(1.min(rest.len()), f.clone());
            f
        }
        (None, None) => return config_err("no subcommand given on the command line or in the config"),
    };

    let root = Cli::command();
    let sub = root.find_subcommand(&command).expect("registered subcommand");
    let known: Vec<String> =
        sub.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).filter(|l| l != "help" && l != "config").collect();
    for (key, value) in &map {
        if key == "command" {
            continue;
        }
        if !known.contains(key) {
            return config_err(format!("unknown config key '{key}' for {command}"));
        }
        let flag = format!("--{key}");
        let given = rest.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !given {
            rest.push(format!("{flag}={}", config_value(key, value)?));
        }
    }
    Ok(rest)
}

fn config_value(key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Array(items) => {
            let parts: Result<Vec<String>> = items
                .iter()
                .map(|i| match i {
                    Value::Number(n) => Ok(n.to_string()),
                    _ => config_err(format!("config key '{key}': arrays must hold numbers")),
                })
                .collect();
            Ok(parts?.join(","))
        }
        _ => config_err(format!("config key '{key}' must be a string, number or array of numbers")),
    }
}

/// Rounds to 9 significant digits; the JSON and CSV writers print the
/// shortest representation of the rounded value.
pub fn round9(v: f64) -> f64 {
    if v.is_finite() {
        format!("{v:.8e}").parse().unwrap_or(v)
    } else {
        v
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(round9(v)).map(Value::Number).unwrap_or(Value::Null)
}

fn fmt_num(v: f64) -> String {
    let r = round9(v);
    if r.is_finite() {
        format!("{r}")
    } else {
        format!("{v}")
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialise");
    s.push('\n');
    s
}

/// Writes `text` to `path` via a sibling temporary file, or to stdout.
fn emit(stdout: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::Config(format!("cannot write output: {e}"))),
        Some(p) => write_atomic(p, text),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Parses a comma-separated point and checks its dimension against `d`.
pub fn parse_point(name: &str, s: &str, d: usize) -> Result<Point> {
    let coords: std::result::Result<Vec<f64>, _> = s.split(',').map(|c| c.trim().parse::<f64>()).collect();
    let coords = coords.map_err(|_| Error::Config(format!("--{name}: expected comma-separated reals, got '{s}'")))?;
    if coords.len() != d {
        return config_err(format!("--{name} has {} coordinates but d = {d}", coords.len()));
    }
    Ok(Point::new(coords))
}

fn point_json(p: &Point) -> Value {
    Value::Array(p.coords().iter().map(|&c| num(c)).collect())
}

/// Identities exposed by `eval`, with the arguments each one takes.
pub const IDENTITIES: &[(&str, &[&str])] = &[
    ("closest-reach-density", &["x", "y"]),
    ("closest-reach-radial-cdf", &["rho"]),
    ("closest-reach-radial-density", &["rho"]),
    ("jump-density", &["w"]),
    ("first-passage-density", &["x", "r", "mode", "y"]),
    ("survival", &["x", "r"]),
    ("survival-via-j", &["x", "r"]),
    ("survival-constant", &[]),
    ("resolvent-density", &["r", "mode", "x", "y"]),
    ("expected-exit-time", &["x", "r"]),
    ("triple-density", &["r", "mode", "x", "z", "y", "v"]),
    ("pair-reach-density", &["r", "mode", "x", "z", "v"]),
    ("pair-jump-density", &["r", "mode", "x", "y", "v"]),
    ("ladder-potential-density", &["side", "x", "z"]),
    ("ladder-levy-density", &["u"]),
    ("ladder-laplace-exponent", &["lambda"]),
    ("excursion-overshoot-density", &["theta", "y"]),
    ("stationary-density", &["w"]),
    ("stationary-density-via-poisson", &["w"]),
    ("stationary-radial-moment", &["gamma"]),
    ("escape-ratio", &["rho", "r", "delta"]),
    ("escape-limit", &[]),
    ("factorization-constant", &[]),
    ("rho-of-one", &["index"]),
    ("resolvent-of-one", &["index"]),
    ("rho-op", &["index", "f", "theta"]),
    ("resolvent-op", &["index", "f", "theta"]),
];

#[derive(Debug, Clone)]
enum Arg {
    Point(String),
    Scalar(f64),
    Text(String),
}

struct Inputs {
    d: usize,
    args: BTreeMap<&'static str, Arg>,
}

impl Inputs {
    fn from_eval(a: &EvalArgs) -> Self {
        let mut args = BTreeMap::new();
        let points = [("x", &a.x), ("y", &a.y), ("z", &a.z), ("v", &a.v), ("w", &a.w), ("theta", &a.theta)];
        for (k, v) in points {
            if let Some(s) = v {
                args.insert(k, Arg::Point(s.clone()));
            }
        }
        let scalars =
            [("r", a.r), ("rho", a.rho), ("delta", a.delta), ("lambda", a.lambda), ("gamma", a.gamma), ("index", a.index), ("u", a.u)];
        for (k, v) in scalars {
            if let Some(s) = v {
                args.insert(k, Arg::Scalar(s));
            }
        }
        for (k, v) in [("mode", &a.mode), ("side", &a.side), ("f", &a.f)] {
            if let Some(s) = v {
                args.insert(k, Arg::Text(s.clone()));
            }
        }
        Self { d: a.d, args }
    }

    fn point(&self, k: &str) -> Result<Point> {
        match self.args.get(k) {
            Some(Arg::Point(s)) => parse_point(k, s, self.d),
            _ => config_err(format!("missing --{k}")),
        }
    }

    fn scalar(&self, k: &str) -> Result<f64> {
        match self.args.get(k) {
            Some(Arg::Scalar(v)) => Ok(*v),
            _ => config_err(format!("missing --{k}")),
        }
    }

    fn text(&self, k: &str) -> Result<&str> {
        match self.args.get(k) {
            Some(Arg::Text(s)) => Ok(s),
            _ => config_err(format!("missing --{k}")),
        }
    }

    fn mode(&self) -> Result<EntranceExitMode> {
        self.text("mode")?.parse()
    }

    fn sphere_function(&self) -> Result<SphereFunction> {
        let s = self.text("f")?;
        if s == "1" {
            return Ok(SphereFunction::constant(1.0));
        }
        match s.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
            Some(k) if (1..=self.d).contains(&k) => Ok(SphereFunction::coordinate(self.d, k - 1)),
            _ => config_err(format!("--f must be '1' or a coordinate x1..x{}, got '{s}'", self.d)),
        }
    }

    fn json(&self, k: &str) -> Result<Value> {
        Ok(match self.args.get(k) {
            Some(Arg::Point(_)) => point_json(&self.point(k)?),
            Some(Arg::Scalar(v)) => num(*v),
            Some(Arg::Text(s)) => Value::String(s.clone()),
            None => return config_err(format!("missing --{k}")),
        })
    }
}

fn evaluate(name: &str, p: &StableParams, a: &Inputs) -> Result<f64> {
    let re = |z: Complex64| z.re;
    let index = || a.scalar("index").map(|z| Complex64::new(z, 0.0));
    match name {
        "closest-reach-density" => identities::closest_reach_density(p, &a.point("x")?, &a.point("y")?),
        "closest-reach-radial-cdf" => identities::closest_reach_radial_cdf(p, a.scalar("rho")?),
        "closest-reach-radial-density" => identities::closest_reach_radial_density(p, a.scalar("rho")?),
        "jump-density" => identities::jump_density(p, &a.point("w")?),
        "first-passage-density" => identities::first_passage_density(p, &a.point("x")?, a.scalar("r")?, a.mode()?, &a.point("y")?),
        "survival" => identities::survival_probability(p, &a.point("x")?, a.scalar("r")?),
        "survival-via-j" => identities::survival_probability_via_j(p, &a.point("x")?, a.scalar("r")?),
        "survival-constant" => identities::survival_constant(p),
        "resolvent-density" => identities::resolvent_density(p, a.scalar("r")?, a.mode()?, &a.point("x")?, &a.point("y")?),
        "expected-exit-time" => identities::expected_exit_time(p, &a.point("x")?, a.scalar("r")?),
        "triple-density" => {
            identities::triple_density(p, a.scalar("r")?, a.mode()?, &a.point("x")?, &a.point("z")?, &a.point("y")?, &a.point("v")?)
        }
        "pair-reach-density" => {
            identities::pair_reach_density(p, a.scalar("r")?, a.mode()?, &a.point("x")?, &a.point("z")?, &a.point("v")?)
        }
        "pair-jump-density" => identities::pair_jump_density(p, a.scalar("r")?, a.mode()?, &a.point("x")?, &a.point("y")?, &a.point("v")?),
        "ladder-potential-density" => {
            let side: LadderSide = a.text("side")?.parse()?;
            identities::ladder_potential_density(p, side, &a.point("x")?, &a.point("z")?)
        }
        "ladder-levy-density" => identities::ladder_levy_density(p, a.scalar("u")?),
        "ladder-laplace-exponent" => identities::ladder_laplace_exponent(p, a.scalar("lambda")?),
        "excursion-overshoot-density" => identities::excursion_overshoot_density(p, &a.point("theta")?, &a.point("y")?),
        "stationary-density" => identities::stationary_density(p, &a.point("w")?),
        "stationary-density-via-poisson" => identities::stationary_density_via_poisson(p, &a.point("w")?),
        "stationary-radial-moment" => identities::stationary_radial_moment(p, a.scalar("gamma")?),
        "escape-ratio" => identities::escape_ratio(p, a.scalar("rho")?, a.scalar("r")?, a.scalar("delta")?),
        "escape-limit" => identities::escape_limit(p),
        "factorization-constant" => operators::factorization_constant(p),
        "rho-of-one" => operators::rho_of_one(p, index()?).map(re),
        "resolvent-of-one" => operators::resolvent_of_one(p, index()?).map(re),
        "rho-op" => operators::rho_op(p, index()?, &a.sphere_function()?, &a.point("theta")?).map(re),
        "resolvent-op" => operators::resolvent_op(p, index()?, &a.sphere_function()?, &a.point("theta")?).map(re),
        other => config_err(format!("identity '{other}' has no evaluator")),
    }
}

fn run_eval(a: &EvalArgs) -> Result<Value> {
    let Some((name, wanted)) = IDENTITIES.iter().find(|(n, _)| *n == a.identity) else {
        let names: Vec<_> = IDENTITIES.iter().map(|(n, _)| *n).collect();
        return config_err(format!("unknown identity '{}', expected one of: {}", a.identity, names.join(", ")));
    };
    let p = StableParams::new(a.d, a.alpha)?;
    let inputs = Inputs::from_eval(a);
    if let Some(extra) = inputs.args.keys().find(|k| !wanted.contains(k)) {
        return config_err(format!("--{extra} is not an argument of {name} (takes: {})", arg_list(wanted)));
    }
    if let Some(missing) = wanted.iter().find(|k| !inputs.args.contains_key(*k)) {
        return config_err(format!("{name} requires --{missing} (takes: {})", arg_list(wanted)));
    }
    let value = evaluate(name, &p, &inputs)?;
    let mut params = Map::new();
    params.insert("d".into(), json!(a.d));
    params.insert("alpha".into(), num(a.alpha));
    for k in wanted.iter() {
        params.insert((*k).into(), inputs.json(k)?);
    }
    Ok(json!({ "identity": name, "params": params, "value": num(value) }))
}

fn arg_list(args: &[&str]) -> String {
    if args.is_empty() {
        "no arguments".into()
    } else {
        args.iter().map(|k| format!("--{k}")).collect::<Vec<_>>().join(" ")
    }
}

/// JSON form of a report; `params` becomes an object.
pub fn report_json(r: &IdentityReport) -> Value {
    let params: Map<String, Value> = r.params.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    json!({
        "name": r.name,
        "params": params,
        "lhs": num(r.lhs),
        "rhs": num(r.rhs),
        "abs_err": num(r.abs_err),
        "rel_err": num(r.rel_err),
        "tol": num(r.tol),
        "pass": r.pass,
    })
}

fn run_check(a: &CheckArgs) -> Result<(Value, bool)> {
    let suite: Suite = a.suite.parse()?;
    let p = StableParams::new(a.d, a.alpha)?;
    let reports = suite.run(&p, a.tol)?;
    let passed = reports.iter().filter(|r| r.pass).count();
    let failed = reports.len() - passed;
    let doc = json!({
        "suite": suite.name(),
        "cases": reports.iter().map(report_json).collect::<Vec<_>>(),
        "summary": { "passed": passed, "failed": failed },
    });
    Ok((doc, failed == 0))
}

/// Experiments exposed by `simulate`, with the parameters each one takes
/// (in CSV column order).
pub const EXPERIMENTS: &[(&str, &[&str])] = &[
    ("survival", &["x", "r", "dt"]),
    ("closest-reach-radial", &["x", "dt"]),
    ("first-entrance-position", &["x", "r", "dt"]),
    ("reflected-stationary", &["x", "dt", "doublings"]),
    ("occupation", &["x", "r", "lo", "hi", "dt"]),
];

fn build_experiment(a: &SimulateArgs) -> Result<(Experiment, Vec<(&'static str, String)>)> {
    let Some((name, keys)) = EXPERIMENTS.iter().find(|(n, _)| *n == a.experiment) else {
        let names: Vec<_> = EXPERIMENTS.iter().map(|(n, _)| *n).collect();
        return config_err(format!("unknown experiment '{}', expected one of: {}", a.experiment, names.join(", ")));
    };
    let given = [("r", a.r.is_some()), ("lo", a.lo.is_some()), ("hi", a.hi.is_some()), ("doublings", a.doublings.is_some())];
    if let Some((extra, _)) = given.iter().find(|(k, set)| *set && !keys.contains(k)) {
        return config_err(format!("--{extra} is not a parameter of {name}"));
    }
    let need = |k: &str, v: Option<f64>| v.ok_or_else(|| Error::Config(format!("{name} requires --{k}")));
    let x0 = parse_point("x", &a.x, a.d)?;
    let dt = a.dt.unwrap_or(DEFAULT_DT);
    let exp = match *name {
        "survival" => Experiment::Survival { x0, r: need("r", a.r)?, dt },
        "closest-reach-radial" => Experiment::ClosestReachRadial { x0, dt },
        "first-entrance-position" => Experiment::FirstEntrancePosition { x0, r: need("r", a.r)?, dt: a.dt },
        "reflected-stationary" => Experiment::ReflectedStationary { x0, dt, doublings: a.doublings.unwrap_or(DEFAULT_DOUBLINGS) },
        "occupation" => Experiment::Occupation { x0, r: need("r", a.r)?, lo: need("lo", a.lo)?, hi: need("hi", a.hi)?, dt },
        _ => unreachable!("registered experiment"),
    };
    let columns = keys
        .iter()
        .map(|&k| {
            let v = match k {
                "x" => a.x.split(',').map(|c| c.trim()).collect::<Vec<_>>().join(","),
                "r" => fmt_num(a.r.unwrap_or(f64::NAN)),
                "lo" => fmt_num(a.lo.unwrap_or(f64::NAN)),
                "hi" => fmt_num(a.hi.unwrap_or(f64::NAN)),
                "doublings" => a.doublings.unwrap_or(DEFAULT_DOUBLINGS).to_string(),
                "dt" => match (&exp, a.dt) {
                    (Experiment::FirstEntrancePosition { dt: None, .. }, _) => "exact".into(),
                    _ => fmt_num(dt),
                },
                _ => unreachable!("registered column"),
            };
            (k, v)
        })
        .collect();
    Ok((exp, columns))
}

/// CSV text of one simulation row, header included.
fn simulation_csv(name: &str, a: &SimulateArgs, columns: &[(&str, String)], out: &ExperimentOutcome) -> Result<String> {
    let mut header = vec!["experiment".to_string(), "d".into(), "alpha".into()];
    header.extend(columns.iter().map(|(k, _)| k.to_string()));
    header.extend(["estimate", "stderr", "n", "reference", "seed"].map(String::from));
    let mut row = vec![name.to_string(), a.d.to_string(), fmt_num(a.alpha)];
    row.extend(columns.iter().map(|(_, v)| v.clone()));
    row.extend([
        fmt_num(out.estimate.mean),
        fmt_num(out.estimate.stderr),
        out.estimate.n.to_string(),
        fmt_num(out.reference),
        a.seed.to_string(),
    ]);
    if let Some(ks) = out.ks {
        header.push("ks".into());
        row.push(fmt_num(ks));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("cannot format CSV: {e}"));
    w.write_record(&header).map_err(io)?;
    w.write_record(&row).map_err(io)?;
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("cannot format CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

fn run_simulate(a: &SimulateArgs, argv: &[String], stdout: &mut dyn Write) -> Result<i32> {
    let p = StableParams::new(a.d, a.alpha)?;
    let (exp, columns) = build_experiment(a)?;
    let started = Instant::now();
    let outcome = montecarlo::estimate(&p, &exp, a.n, a.seed, a.workers)?;
    let wall = started.elapsed().as_secs_f64();
    let csv_text = simulation_csv(&a.experiment, a, &columns, &outcome)?;

    let manifest_path = a.manifest.clone().or_else(|| {
        a.out.as_ref().map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    let manifest = manifest_path.as_ref().map(|_| {
        let mut config = Map::new();
        config.insert("experiment".into(), json!(a.experiment));
        config.insert("d".into(), json!(a.d));
        config.insert("alpha".into(), num(a.alpha));
        for (k, v) in &columns {
            config.insert((*k).into(), json!(v));
        }
        config.insert("n".into(), json!(a.n));
        config.insert("workers".into(), json!(a.workers));
        config.insert("seed".into(), json!(a.seed));
        if let Some(o) = &a.out {
            config.insert("out".into(), json!(o.display().to_string()));
        }
        json!({
            "command": "simulate",
            "argv": argv,
            "config": config,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": num(wall),
            "result": {
                "estimate": num(outcome.estimate.mean),
                "stderr": num(outcome.estimate.stderr),
                "n": outcome.estimate.n,
                "reference": num(outcome.reference),
                "ks": outcome.ks.map(num),
            },
        })
    });

    emit(stdout, a.out.as_deref(), &csv_text)?;
    if let (Some(path), Some(doc)) = (manifest_path, manifest) {
        write_atomic(&path, &json_text(&doc))?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["stablefluct"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn eval_survival() {
        let (code, out, _) = run_str(&["eval", "--identity", "survival", "--d", "2", "--alpha", "1.0", "--x", "2,0", "--r", "1.0"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-8);
        assert_eq!(v["params"]["x"], json!([2.0, 0.0]));
    }

    #[test]
    fn eval_domain_error() {
        let (code, out, err) = run_str(&["eval", "--identity", "survival", "--d", "2", "--alpha", "1.0", "--x", "0.5,0", "--r", "1.0"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.contains("require |x| > r"), "{err}");
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn eval_rejects_dimension_mismatch_and_stray_args() {
        let (code, _, err) = run_str(&["eval", "--identity", "survival", "--d", "3", "--alpha", "1.0", "--x", "2,0", "--r", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("d = 3"), "{err}");
        let (code, _, err) =
            run_str(&["eval", "--identity", "survival", "--d", "2", "--alpha", "1.0", "--x", "2,0", "--r", "1", "--y", "1,0"]);
        assert_eq!(code, 2);
        assert!(err.contains("--y"), "{err}");
    }

    #[test]
    fn every_identity_is_dispatched() {
        let p = StableParams::new(2, 1.0).unwrap();
        let inputs = Inputs { d: 2, args: BTreeMap::new() };
        for (name, _) in IDENTITIES {
            let e = evaluate(name, &p, &inputs);
            if let Err(Error::Config(msg)) = &e {
                assert!(!msg.contains("no evaluator"), "{name}");
            }
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_str(&["check", "--suite", "normalization", "--d", "2", "--alpha", "3.0"]).0, 2);
        assert_eq!(run_str(&["check", "--suite", "nope", "--d", "2", "--alpha", "1"]).0, 2);
        assert_eq!(run_str(&["frobnicate"]).0, 2);
        assert_eq!(run_str(&["eval", "--d", "2"]).0, 2);
    }

    #[test]
    fn check_phi_minus_json() {
        let (code, out, _) = run_str(&["check", "--suite", "phi-minus", "--d", "2", "--alpha", "1.0", "--tol", "1e-8"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["summary"]["failed"], json!(0));
        assert!(v["cases"].as_array().unwrap().iter().any(|c| c["lhs"] == json!(2.0) && c["rhs"] == json!(2.0)));
    }

    #[test]
    fn rounding_keeps_nine_digits() {
        assert_eq!(round9(2.0 / 3.0), 0.666666667);
        assert_eq!(fmt_num(0.1754748123456), "0.175474812");
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"command":"eval","identity":"survival","d":2,"alpha":1,"x":[2,0],"r":1,"colour":"red"}"#).unwrap();
        let (code, _, err) = run_str(&["--config", path.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("colour"), "{err}");
        fs::write(&path, r#"{"command":"eval","identity":"survival","d":2,"alpha":1,"x":[2,0],"r":1}"#).unwrap();
        let (code, out, _) = run_str(&["--config", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.contains("0.666666667"));
        // command-line flags win
        let (code, out, _) = run_str(&["eval", "--config", path.to_str().unwrap(), "--x", "3,0"]);
        assert_eq!(code, 0);
        assert!(!out.contains("0.666666667"));
    }

    #[test]
    fn simulate_csv_shape() {
        let (code, out, err) = run_str(&[
            "simulate",
            "--experiment",
            "first-entrance-position",
            "--d",
            "2",
            "--alpha",
            "1",
            "--x",
            "2,0",
            "--r",
            "1",
            "--n",
            "200",
            "--seed",
            "3",
        ]);
        assert_eq!(code, 0, "{err}");
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "experiment,d,alpha,x,r,dt,estimate,stderr,n,reference,seed,ks");
        let row = lines.next().unwrap();
        assert!(row.starts_with("first-entrance-position,2,1,\"2,0\",1,exact,"), "{row}");
    }
}
