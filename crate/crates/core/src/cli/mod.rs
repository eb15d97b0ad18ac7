//! Command-line surface: argument and config-file parsing into a
//! [`RunConfig`], and dispatch of a config to the library.
//!
//! Exit codes: 0 success, 1 computational failure, 2 unknown command or
//! key, 3 type mismatch, 4 parameter out of range.

mod run;

use std::collections::BTreeMap;
use std::fmt;

use clap::error::ErrorKind;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde::ser::Serializer;
use serde::Serialize;

pub use run::run;

pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_TYPE: i32 = 3;
pub const EXIT_RANGE: i32 = 4;

/// Failure carrying the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        let code = if e.is_parameter_error() { EXIT_RANGE } else { EXIT_COMPUTATION };
        CliError::new(code, e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Str,
    IntList,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(u64),
    Float(f64),
    Str(String),
    IntList(Vec<u64>),
}

impl Serialize for ParamValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ParamValue::Int(v) => s.serialize_u64(*v),
            ParamValue::Float(v) if v.is_finite() => s.serialize_f64(*v),
            ParamValue::Float(v) => s.serialize_str(&v.to_string()),
            ParamValue::Str(v) => s.serialize_str(v),
            ParamValue::IntList(v) => v.serialize(s),
        }
    }
}

struct Param {
    name: &'static str,
    kind: Kind,
    default: Option<&'static str>,
    help: &'static str,
}

const fn req(name: &'static str, kind: Kind, help: &'static str) -> Param {
    Param { name, kind, default: None, help }
}

const fn opt(name: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Param {
    Param { name, kind, default: Some(default), help }
}

/// Parameters shared by every command that takes a coefficient family.
const FAMILY: [Param; 7] = [
    opt("preset", Kind::Str, "", "moebius | extremal-g | linear-form | monomial | identity (or use --family)"),
    opt("family", Kind::Str, "", "family JSON document, inline, @path, or - for stdin"),
    opt("a", Kind::Float, "0.5", "Möbius parameter in (0,1)"),
    opt("dim", Kind::Int, "1", "dimension for extremal-g and linear-form presets"),
    opt("q", Kind::Float, "2", "value-space exponent of the linear-form preset"),
    opt("alpha", Kind::Str, "1", "comma-separated multi-index of the monomial preset"),
    opt("gp", Kind::Float, "", "exponent defining the extremal-g preset (defaults to --p)"),
];

struct CommandSpec {
    name: &'static str,
    about: &'static str,
    params: Vec<Param>,
    takes_family: bool,
    default_output: OutputFormat,
}

fn commands() -> Vec<CommandSpec> {
    use Kind::*;
    let spec = |name, about, params, takes_family| CommandSpec {
        name,
        about,
        params,
        takes_family,
        default_output: OutputFormat::Json,
    };
    vec![
        spec(
            "exact-h2",
            "exact p-Bohr radius of the unit ball of H^2(D^n): (1-2^{-1/n})^{1/p-1/2}, p < 2",
            vec![req("n", Int, "dimension"), req("p", Float, "exponent in (0,2)")],
            false,
        ),
        spec(
            "residual",
            "defining equation of the exact H^2 radius: ((1-r^{2p/(2-p)})^{-n}-1)^{1-p/2} - 1",
            vec![req("n", Int, "dimension"), req("p", Float, "exponent in (0,2)"), req("r", Float, "radius")],
            false,
        ),
        spec(
            "solve",
            "per-family p-Bohr radius by bisection of the powered majorant (polydisk or l_t ball)",
            vec![req("p", Float, "exponent"), opt("t", Float, "inf", "domain exponent; inf = polydisk")],
            true,
        ),
        spec(
            "pluri",
            "pluriharmonic radius of h + conj(g): summands (|a_α|^p + |b_α|^p)|z^α|^p",
            vec![
                req("p", Float, "exponent"),
                opt("t", Float, "inf", "domain exponent; inf = polydisk"),
                opt("anti", Str, "zero", "g: zero | same | family JSON (inline or @path)"),
            ],
            true,
        ),
        spec(
            "certify",
            "certified lower bound from the per-degree hypothesis (Σ‖x_α‖^q)^{1/q} <= C^k and the count chain",
            vec![
                req("n", Int, "dimension"),
                req("p", Float, "exponent"),
                opt("q", Float, "2", "per-degree summability exponent, >= p"),
                opt("C", Float, "1", "per-degree base"),
                opt("mode", Str, "closed_form", "closed_form | numeric"),
            ],
            false,
        ),
        spec(
            "witness",
            "upper bound from the normalized l_q-valued linear form at the equal-coordinate point",
            vec![
                req("n", Int, "dimension"),
                req("p", Float, "exponent"),
                opt("q", Float, "2", "value-space exponent"),
                opt("t", Float, "inf", "domain exponent; inf = polydisk"),
            ],
            false,
        ),
        spec(
            "coeff-check",
            "coefficient estimate ‖x_α‖ <= e^{k/t}(k!/α!)^{1/t} on certified presets of H^inf(B(l_t^n))",
            vec![
                req("t", Float, "ball exponent"),
                opt("shape", Str, "monomial", "monomial | coordinate | moebius-linear"),
                opt("n", Int, "2", "dimension"),
                opt("alpha", Str, "1,1", "comma-separated multi-index (monomial shape)"),
                opt("a", Float, "0.5", "Möbius parameter (moebius-linear shape)"),
                opt("degree", Int, "8", "truncation degree (moebius-linear shape)"),
            ],
            false,
        ),
        spec(
            "sandwich",
            "certified lower bound (q=2, C=1) against the exact H^2 radius",
            vec![
                req("n", Int, "dimension"),
                req("p", Float, "exponent in (0,2)"),
                opt("mode", Str, "numeric", "closed_form | numeric"),
            ],
            false,
        ),
        spec(
            "maximize-ball",
            "powered majorant sup over r·B(l_t^n) with its maximizer",
            vec![req("p", Float, "exponent"), req("t", Float, "ball exponent"), req("r", Float, "radius in [0,1)")],
            true,
        ),
        CommandSpec {
            name: "sweep",
            about: "evaluate a radius or bound over a list of dimensions",
            params: vec![
                req("generator", Str, "exact-h2 | certify-closed | certify-numeric | witness | solve-extremal | constant"),
                opt("p", Float, "1", "exponent"),
                opt("q", Float, "2", "certificate or value-space exponent"),
                opt("C", Float, "1", "certificate base"),
                opt("t", Float, "inf", "domain exponent (witness)"),
                opt("value", Float, "1", "constant generator value"),
                opt("n-list", IntList, "", "comma-separated dimensions"),
                opt("log-start", Float, "3", "first exponent of a log10 grid"),
                opt("log-end", Float, "6", "last exponent of a log10 grid"),
                opt("log-step", Float, "0.5", "log10 grid step"),
            ],
            takes_family: false,
            default_output: OutputFormat::Csv,
        },
        spec(
            "fit",
            "least-squares scaling exponent of sweep records (CSV)",
            vec![
                opt("input", Str, "-", "CSV file from sweep, or - for stdin"),
                opt("model", Str, "power", "power | log-power"),
            ],
            false,
        ),
        spec(
            "limit-check",
            "n^{1/p-1/2}·r_0(n,p) against its limit (ln 2)^{1/p-1/2}",
            vec![req("p", Float, "exponent in (0,2)"), opt("n", Int, "1000000", "dimension")],
            false,
        ),
    ]
}

impl CommandSpec {
    fn all_params(&self) -> impl Iterator<Item = &Param> {
        let family: &'static [Param] = if self.takes_family { &FAMILY } else { &[] };
        self.params.iter().chain(family.iter().filter(|f| !self.params.iter().any(|p| p.name == f.name)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub params: BTreeMap<String, ParamValue>,
    pub seed: u64,
    pub output: OutputFormat,
    pub tol: f64,
}

impl RunConfig {
    pub fn float(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(ParamValue::Float(v)) => Some(*v),
            Some(ParamValue::Int(v)) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn int(&self, key: &str) -> Option<u64> {
        match self.params.get(key) {
            Some(ParamValue::Int(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        match self.params.get(key) {
            Some(ParamValue::Str(v)) if !v.is_empty() => Some(v),
            _ => None,
        }
    }

    pub fn int_list(&self, key: &str) -> Option<&[u64]> {
        match self.params.get(key) {
            Some(ParamValue::IntList(v)) if !v.is_empty() => Some(v),
            _ => None,
        }
    }
}

fn parse_int_list(s: &str) -> Result<Vec<u64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| x.trim().parse::<u64>().map_err(|e| format!("{x:?}: {e}"))).collect()
}

fn parse_float(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))
}

fn arg_for(p: &Param) -> Arg {
    let arg = Arg::new(p.name).long(p.name).help(p.help).action(ArgAction::Set);
    match p.kind {
        Kind::Int => arg.value_parser(clap::value_parser!(u64)),
        Kind::Float => arg.value_parser(parse_float),
        Kind::Str => arg.value_parser(clap::value_parser!(String)),
        Kind::IntList => arg.value_parser(parse_int_list),
    }
}

fn cli_command() -> Command {
    let mut root = Command::new("bohr-lab")
        .about("Powered Bohr radii of power series on polydisks and l_t balls")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .after_help("Exit codes: 0 ok, 1 computation failed, 2 unknown command/key, 3 type error, 4 out of range.\nEnvironment: BOHR_LAB_THREADS caps parallelism (0 = all cores).");
    for spec in commands() {
        let mut cmd = Command::new(spec.name)
            .about(spec.about)
            .arg(Arg::new("config").long("config").help("TOML key = value file; flags override it").action(ArgAction::Set))
            .arg(Arg::new("seed").long("seed").help("random seed (default 0)").value_parser(clap::value_parser!(u64)))
            .arg(
                Arg::new("output")
                    .long("output")
                    .help("json | csv")
                    .value_parser(["json", "csv"]),
            )
            .arg(Arg::new("tol").long("tol").help("bisection tolerance (default 1e-10)").value_parser(parse_float));
        for p in spec.all_params() {
            cmd = cmd.arg(arg_for(p));
        }
        root = root.subcommand(cmd);
    }
    root
}

/// Full `--help` text.
pub fn help_text() -> String {
    cli_command().render_long_help().to_string()
}

fn from_toml(key: &str, kind: Kind, v: &toml::Value) -> Result<ParamValue, CliError> {
    let mismatch = || CliError::new(EXIT_TYPE, format!("config key {key:?} has the wrong type"));
    Ok(match (kind, v) {
        (Kind::Int, toml::Value::Integer(i)) if *i >= 0 => ParamValue::Int(*i as u64),
        (Kind::Int, toml::Value::Integer(_)) => {
            return Err(CliError::new(EXIT_RANGE, format!("config key {key:?} must be nonnegative")))
        }
        (Kind::Float, toml::Value::Float(f)) => ParamValue::Float(*f),
        (Kind::Float, toml::Value::Integer(i)) => ParamValue::Float(*i as f64),
        (Kind::Float, toml::Value::String(s)) => ParamValue::Float(parse_float(s).map_err(|_| mismatch())?),
        (Kind::Str, toml::Value::String(s)) => ParamValue::Str(s.clone()),
        (Kind::IntList, toml::Value::String(s)) => ParamValue::IntList(parse_int_list(s).map_err(|_| mismatch())?),
        (Kind::IntList, toml::Value::Array(items)) => ParamValue::IntList(
            items
                .iter()
                .map(|x| x.as_integer().filter(|i| *i >= 0).map(|i| i as u64).ok_or_else(mismatch))
                .collect::<Result<_, _>>()?,
        ),
        _ => return Err(mismatch()),
    })
}

fn from_default(kind: Kind, s: &str) -> ParamValue {
    match kind {
        Kind::Int => ParamValue::Int(s.parse().expect("valid default")),
        Kind::Float => ParamValue::Float(parse_float(s).expect("valid default")),
        Kind::Str => ParamValue::Str(s.to_string()),
        Kind::IntList => ParamValue::IntList(parse_int_list(s).expect("valid default")),
    }
}

fn from_matches(m: &ArgMatches, p: &Param) -> Option<ParamValue> {
    match p.kind {
        Kind::Int => m.get_one::<u64>(p.name).map(|v| ParamValue::Int(*v)),
        Kind::Float => m.get_one::<f64>(p.name).map(|v| ParamValue::Float(*v)),
        Kind::Str => m.get_one::<String>(p.name).map(|v| ParamValue::Str(v.clone())),
        Kind::IntList => m.get_one::<Vec<u64>>(p.name).map(|v| ParamValue::IntList(v.clone())),
    }
}

fn clap_failure(e: clap::Error) -> CliError {
    let code = match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
        ErrorKind::InvalidValue | ErrorKind::ValueValidation => EXIT_TYPE,
        _ => EXIT_UNKNOWN,
    };
    CliError::new(code, e.render().to_string())
}

/// Resolve `argv` (program name first) and an optional config file into a
/// [`RunConfig`]. Precedence: flags, then the config file, then defaults.
/// Help and version requests come back as a [`CliError`] with code 0.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = cli_command().try_get_matches_from(argv).map_err(clap_failure)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let spec = commands().into_iter().find(|c| c.name == name).expect("registered command");

    let mut file: BTreeMap<String, toml::Value> = BTreeMap::new();
    if let Some(path) = sub.get_one::<String>("config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(EXIT_RANGE, format!("cannot read config {path}: {e}")))?;
        let table: toml::Table =
            text.parse().map_err(|e| CliError::new(EXIT_TYPE, format!("malformed config {path}: {e}")))?;
        file.extend(table);
    }
    for key in file.keys() {
        let known = matches!(key.as_str(), "seed" | "output" | "tol") || spec.all_params().any(|p| p.name == key);
        if !known {
            return Err(CliError::new(EXIT_UNKNOWN, format!("unknown config key {key:?} for command {name}")));
        }
    }

    let mut params = BTreeMap::new();
    for p in spec.all_params() {
        let value = match from_matches(sub, p) {
            Some(v) => Some(v),
            None => match file.get(p.name) {
                Some(v) => Some(from_toml(p.name, p.kind, v)?),
                None => match p.default {
                    Some("") => continue,
                    d => d.map(|d| from_default(p.kind, d)),
                },
            },
        };
        match value {
            Some(v) => {
                params.insert(p.name.to_string(), v);
            }
            None => return Err(CliError::new(EXIT_UNKNOWN, format!("missing required parameter --{}", p.name))),
        }
    }

    let seed = match (sub.get_one::<u64>("seed"), file.get("seed")) {
        (Some(s), _) => *s,
        (None, Some(v)) => match from_toml("seed", Kind::Int, v)? {
            ParamValue::Int(s) => s,
            _ => unreachable!(),
        },
        (None, None) => 0,
    };
    let output = match (sub.get_one::<String>("output"), file.get("output")) {
        (Some(s), _) => s.clone(),
        (None, Some(toml::Value::String(s))) => s.clone(),
        (None, Some(_)) => return Err(CliError::new(EXIT_TYPE, "config key \"output\" must be a string")),
        (None, None) => match spec.default_output {
            OutputFormat::Json => "json".into(),
            OutputFormat::Csv => "csv".into(),
        },
    };
    let output = match output.as_str() {
        "json" => OutputFormat::Json,
        "csv" => OutputFormat::Csv,
        other => return Err(CliError::new(EXIT_RANGE, format!("unknown output format {other:?}"))),
    };
    let tol = match (sub.get_one::<f64>("tol"), file.get("tol")) {
        (Some(t), _) => *t,
        (None, Some(v)) => match from_toml("tol", Kind::Float, v)? {
            ParamValue::Float(t) => t,
            _ => unreachable!(),
        },
        (None, None) => crate::radius::DEFAULT_TOLERANCE,
    };
    if !(tol > 0.0) {
        return Err(CliError::new(EXIT_RANGE, format!("tolerance must be positive, got {tol}")));
    }
    Ok(RunConfig { command: name.to_string(), params, seed, output, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        parse_config(std::iter::once("bohr-lab").chain(args.iter().copied()))
    }

    #[test]
    fn exact_h2_flags() {
        let c = parse(&["exact-h2", "--n", "2", "--p", "1"]).unwrap();
        assert_eq!(c.command, "exact-h2");
        assert_eq!(c.params.get("n"), Some(&ParamValue::Int(2)));
        assert_eq!(c.params.get("p"), Some(&ParamValue::Float(1.0)));
        assert_eq!(c.seed, 0);
        assert_eq!(c.output, OutputFormat::Json);
    }

    #[test]
    fn error_codes() {
        assert_eq!(parse(&["exact-h2", "--n", "1", "--p", "abc"]).unwrap_err().code, EXIT_TYPE);
        assert_eq!(parse(&["frobnicate"]).unwrap_err().code, EXIT_UNKNOWN);
        assert_eq!(parse(&["exact-h2", "--n", "1", "--p", "1", "--bogus", "3"]).unwrap_err().code, EXIT_UNKNOWN);
        assert_eq!(parse(&["exact-h2", "--p", "1"]).unwrap_err().code, EXIT_UNKNOWN);
        assert_eq!(parse(&["--help"]).unwrap_err().code, 0);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join(format!("bohr-lab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "seed = 42\nn = 3\np = 0.5\n").unwrap();
        let p = path.to_str().unwrap();
        let c = parse(&["exact-h2", "--config", p, "--seed", "7"]).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.params.get("n"), Some(&ParamValue::Int(3)));
        let c = parse(&["exact-h2", "--config", p, "--p", "1.5"]).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.params.get("p"), Some(&ParamValue::Float(1.5)));

        std::fs::write(&path, "n = 3\np = 1\nwhatever = 1\n").unwrap();
        assert_eq!(parse(&["exact-h2", "--config", p]).unwrap_err().code, EXIT_UNKNOWN);
        std::fs::write(&path, "n = \"three\"\np = 1\n").unwrap();
        assert_eq!(parse(&["exact-h2", "--config", p]).unwrap_err().code, EXIT_TYPE);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn help_lists_every_command() {
        let help = help_text();
        for spec in commands() {
            assert!(help.contains(spec.name), "{} missing from help", spec.name);
        }
    }

    #[test]
    fn infinite_exponent_accepted() {
        let c = parse(&["witness", "--n", "4", "--p", "1", "--t", "inf"]).unwrap();
        assert_eq!(c.float("t"), Some(f64::INFINITY));
    }
}
