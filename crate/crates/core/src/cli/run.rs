use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::{CliError, OutputFormat, RunConfig, EXIT_COMPUTATION, EXIT_RANGE, EXIT_UNKNOWN};
use crate::asymptotics::{fit_exponent, h2_limit_check, log_grid, read_csv, sweep, write_csv, FitModel, Generator};
use crate::bounds::{
    certified_lower_bound, coefficient_bound_check, h2_bound_pair, witness_upper_linear_form, CertificateInput,
    CertificateMode,
};
use crate::family::{CoefficientFamily, Preset};
use crate::majorant::{powered_majorant_ball, BallOptions, DomainSpec};
use crate::multiindex::MultiIndex;
use crate::radius::{exact_h2_radius, h2_defining_residual, pluriharmonic_radius, solve_bohr_radius, PluriharmonicFamily, SolveOptions};
use crate::Error;

type CliResult<T> = std::result::Result<T, CliError>;

fn range(msg: impl Into<String>) -> CliError {
    CliError::new(EXIT_RANGE, msg)
}

fn need_f64(c: &RunConfig, key: &str) -> CliResult<f64> {
    c.float(key).ok_or_else(|| CliError::new(EXIT_UNKNOWN, format!("missing parameter --{key}")))
}

fn need_u64(c: &RunConfig, key: &str) -> CliResult<u64> {
    c.int(key).ok_or_else(|| CliError::new(EXIT_UNKNOWN, format!("missing parameter --{key}")))
}

fn mode(c: &RunConfig) -> CliResult<CertificateMode> {
    match c.str("mode").unwrap_or("closed_form") {
        "closed_form" | "closed-form" => Ok(CertificateMode::ClosedForm),
        "numeric" => Ok(CertificateMode::Numeric),
        other => Err(range(format!("unknown mode {other:?}; expected closed_form or numeric"))),
    }
}

fn parse_alpha(s: &str) -> CliResult<MultiIndex> {
    let parts = s
        .split(',')
        .map(|x| x.trim().parse::<u32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::new(super::EXIT_TYPE, format!("bad multi-index {s:?}: {e}")))?;
    Ok(MultiIndex::new(parts)?)
}

fn read_source(spec: &str, stdin: &mut dyn BufRead) -> CliResult<String> {
    if spec == "-" {
        let mut s = String::new();
        stdin.read_to_string(&mut s).map_err(|e| range(format!("cannot read stdin: {e}")))?;
        Ok(s)
    } else if let Some(path) = spec.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(|e| range(format!("cannot read {path}: {e}")))
    } else {
        Ok(spec.to_string())
    }
}

fn family_from_json(spec: &str, stdin: &mut dyn BufRead) -> CliResult<CoefficientFamily> {
    let text = read_source(spec, stdin)?;
    Ok(CoefficientFamily::from_json(&text)?)
}

/// Family selected by `--family` or `--preset`; `t` is the domain exponent
/// of the command, used by presets normalized on a ball.
fn family(c: &RunConfig, t: f64, stdin: &mut dyn BufRead) -> CliResult<CoefficientFamily> {
    if let Some(spec) = c.str("family") {
        if c.str("preset").is_some() {
            return Err(range("give either --family or --preset, not both"));
        }
        return family_from_json(spec, stdin);
    }
    let preset = match c.str("preset") {
        Some("moebius") => Preset::Moebius { a: need_f64(c, "a")? },
        Some("extremal-g") => {
            let p = match c.float("gp") {
                Some(gp) => gp,
                None => need_f64(c, "p")?,
            };
            Preset::ExtremalG { n: need_u64(c, "dim")? as usize, p }
        }
        Some("linear-form") => Preset::LinearForm { n: need_u64(c, "dim")? as usize, q: need_f64(c, "q")?, t },
        Some("monomial") => {
            Preset::NormalizedMonomial { alpha: parse_alpha(c.str("alpha").unwrap_or("1"))?, t }
        }
        Some("identity") => Preset::Explicit { dimension: 1, entries: vec![(MultiIndex::unit(1, 0), 1.0)] },
        Some(other) => return Err(range(format!("unknown preset {other:?}"))),
        None => return Err(CliError::new(EXIT_UNKNOWN, "a family is required: use --preset or --family")),
    };
    Ok(CoefficientFamily::build(&preset)?)
}

fn solve_options(c: &RunConfig) -> SolveOptions {
    SolveOptions { tol: c.tol, ball: BallOptions { seed: c.seed, ..BallOptions::default() } }
}

fn to_object<T: Serialize>(v: &T) -> Map<String, Value> {
    match serde_json::to_value(v).expect("serializable result") {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

fn generator(c: &RunConfig) -> CliResult<Generator> {
    let p = need_f64(c, "p")?;
    let q = need_f64(c, "q")?;
    let cc = need_f64(c, "C")?;
    Ok(match c.str("generator").unwrap_or("") {
        "exact-h2" | "exact_h2" => Generator::ExactH2 { p },
        "certify-closed" | "certify_closed_form" => Generator::CertifyClosedForm { p, q, c: cc },
        "certify-numeric" | "certify_numeric" => Generator::CertifyNumeric { p, q, c: cc },
        "witness" | "witness_linear_form" => Generator::WitnessLinearForm { p, q, t: need_f64(c, "t")? },
        "solve-extremal" | "solve_extremal" => Generator::SolveExtremal { p },
        "constant" => Generator::Constant { value: need_f64(c, "value")? },
        other => return Err(range(format!("unknown generator {other:?}"))),
    })
}

fn dimensions(c: &RunConfig) -> CliResult<Vec<u64>> {
    if let Some(list) = c.int_list("n-list") {
        return Ok(list.to_vec());
    }
    Ok(log_grid(need_f64(c, "log-start")?, need_f64(c, "log-end")?, need_f64(c, "log-step")?)?)
}

fn emit_json(config: &RunConfig, mut body: Map<String, Value>, out: &mut dyn Write) -> CliResult<()> {
    body.insert("command".into(), json!(config.command));
    body.insert("config".into(), serde_json::to_value(config).expect("serializable config"));
    let text = serde_json::to_string(&Value::Object(body)).expect("serializable output");
    writeln!(out, "{text}").map_err(|e| CliError::new(EXIT_COMPUTATION, format!("write failed: {e}")))
}

/// Execute a resolved config, writing one JSON object (or a CSV row-set
/// for sweeps) to `out`.
pub fn run(config: &RunConfig, stdin: &mut dyn BufRead, out: &mut dyn Write) -> CliResult<()> {
    let c = config;
    if c.output == OutputFormat::Csv && c.command != "sweep" {
        return Err(range(format!("csv output is only available for sweep, not {}", c.command)));
    }
    let body = match c.command.as_str() {
        "exact-h2" => {
            let value = exact_h2_radius(need_u64(c, "n")?, need_f64(c, "p")?)?;
            to_object(&json!({ "value": value }))
        }
        "residual" => {
            let value = h2_defining_residual(need_u64(c, "n")?, need_f64(c, "p")?, need_f64(c, "r")?)?;
            to_object(&json!({ "value": value }))
        }
        "solve" => {
            let t = need_f64(c, "t")?;
            let f = family(c, t, stdin)?;
            let dom = DomainSpec::lt_ball(t)?;
            to_object(&solve_bohr_radius(&f, need_f64(c, "p")?, &dom, &solve_options(c))?)
        }
        "pluri" => {
            let t = need_f64(c, "t")?;
            let holo = family(c, t, stdin)?;
            let anti = match c.str("anti").unwrap_or("zero") {
                "zero" => CoefficientFamily::explicit(holo.dimension(), [])?,
                "same" => holo.clone(),
                spec => family_from_json(spec, stdin)?,
            };
            let pf = PluriharmonicFamily::new(holo, anti)?;
            to_object(&pluriharmonic_radius(&pf, need_f64(c, "p")?, t, &solve_options(c))?)
        }
        "certify" => {
            let input = CertificateInput::new(need_u64(c, "n")?, need_f64(c, "p")?, need_f64(c, "q")?, need_f64(c, "C")?)?;
            to_object(&certified_lower_bound(&input, mode(c)?)?)
        }
        "witness" => to_object(&witness_upper_linear_form(
            need_u64(c, "n")?,
            need_f64(c, "p")?,
            need_f64(c, "q")?,
            need_f64(c, "t")?,
        )?),
        "coeff-check" => {
            let t = need_f64(c, "t")?;
            let n = need_u64(c, "n")? as usize;
            let preset = match c.str("shape").unwrap_or("monomial") {
                "monomial" => Preset::NormalizedMonomial { alpha: parse_alpha(c.str("alpha").unwrap_or("1,1"))?, t },
                "coordinate" => Preset::NormalizedMonomial { alpha: MultiIndex::unit(n.max(1), 0), t },
                "moebius-linear" => Preset::MoebiusLinear {
                    a: need_f64(c, "a")?,
                    n,
                    t,
                    truncation: u32::try_from(need_u64(c, "degree")?).map_err(|_| range("degree too large"))?,
                },
                other => return Err(range(format!("unknown shape {other:?}"))),
            };
            let f = CoefficientFamily::build(&preset)?;
            let mut m = to_object(&coefficient_bound_check(&f, t)?);
            m.insert("family".into(), json!(f.label()));
            m
        }
        "sandwich" => {
            let mode = match c.str("mode").unwrap_or("numeric") {
                "closed_form" | "closed-form" => CertificateMode::ClosedForm,
                "numeric" => CertificateMode::Numeric,
                other => return Err(range(format!("unknown mode {other:?}"))),
            };
            to_object(&h2_bound_pair(need_u64(c, "n")?, need_f64(c, "p")?, mode)?)
        }
        "maximize-ball" => {
            let t = need_f64(c, "t")?;
            let f = family(c, t, stdin)?;
            let opts = BallOptions { seed: c.seed, ..BallOptions::default() };
            to_object(&powered_majorant_ball(&f, need_f64(c, "p")?, t, need_f64(c, "r")?, &opts)?)
        }
        "sweep" => {
            let g = generator(c)?;
            let ns = dimensions(c)?;
            let records = match sweep(&g, &ns) {
                Ok(r) => r,
                Err(Error::SweepAborted { n, partial, source }) => {
                    log::error!("sweep stopped at n = {n} after {} records: {source}", partial.len());
                    return Err(Error::SweepAborted { n, partial, source }.into());
                }
                Err(e) => return Err(e.into()),
            };
            if c.output == OutputFormat::Csv {
                let cfg = serde_json::to_string(c).expect("serializable config");
                return write_csv(&records, &[format!("config {cfg}")], out)
                    .map_err(|e| CliError::new(EXIT_COMPUTATION, format!("write failed: {e}")));
            }
            to_object(&json!({ "records": records }))
        }
        "fit" => {
            let text = match c.str("input").unwrap_or("-") {
                "-" => read_source("-", stdin)?,
                path => std::fs::read_to_string(path).map_err(|e| range(format!("cannot read {path}: {e}")))?,
            };
            let records = read_csv(text.as_bytes())?;
            let model = match c.str("model").unwrap_or("power") {
                "power" => FitModel::Power,
                "log-power" | "log_power" => FitModel::LogPower,
                other => return Err(range(format!("unknown model {other:?}"))),
            };
            to_object(&fit_exponent(&records, model)?)
        }
        "limit-check" => to_object(&h2_limit_check(need_f64(c, "p")?, need_u64(c, "n")?)?),
        other => return Err(CliError::new(EXIT_UNKNOWN, format!("unknown command {other:?}"))),
    };
    emit_json(c, body, out)
}
