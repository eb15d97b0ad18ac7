//! Dimension sweeps and scaling-exponent fits.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{certified_lower_bound, witness_upper_linear_form, CertificateInput, CertificateMode};
use crate::error::{domain, Error, Result};
use crate::family::{CoefficientFamily, Preset};
use crate::majorant::DomainSpec;
use crate::radius::{exact_h2_radius, solve_bohr_radius, SolveOptions};

/// First line of every CSV this crate writes.
pub const CSV_VERSION_LINE: &str = "# bohr-lab v1";
pub const CSV_COLUMNS: [&str; 6] = ["n", "value", "generator", "p", "q", "t"];

/// A radius or bound evaluated as a function of the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    ExactH2 { p: f64 },
    CertifyClosedForm { p: f64, q: f64, c: f64 },
    CertifyNumeric { p: f64, q: f64, c: f64 },
    WitnessLinearForm { p: f64, q: f64, t: f64 },
    /// Bisection radius of the extremal `H^2` family on the polydisk.
    SolveExtremal { p: f64 },
    Constant { value: f64 },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::ExactH2 { .. } => "exact_h2",
            Generator::CertifyClosedForm { .. } => "certify_closed_form",
            Generator::CertifyNumeric { .. } => "certify_numeric",
            Generator::WitnessLinearForm { .. } => "witness_linear_form",
            Generator::SolveExtremal { .. } => "solve_extremal",
            Generator::Constant { .. } => "constant",
        }
    }

    /// `(p, q, t)` where applicable.
    pub fn params(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        match *self {
            Generator::ExactH2 { p } | Generator::SolveExtremal { p } => (Some(p), None, None),
            Generator::CertifyClosedForm { p, q, .. } | Generator::CertifyNumeric { p, q, .. } => {
                (Some(p), Some(q), None)
            }
            Generator::WitnessLinearForm { p, q, t } => (Some(p), Some(q), Some(t)),
            Generator::Constant { .. } => (None, None, None),
        }
    }

    pub fn evaluate(&self, n: u64) -> Result<f64> {
        match *self {
            Generator::ExactH2 { p } => exact_h2_radius(n, p),
            Generator::CertifyClosedForm { p, q, c } => {
                certified_lower_bound(&CertificateInput::new(n, p, q, c)?, CertificateMode::ClosedForm).map(|r| r.value)
            }
            Generator::CertifyNumeric { p, q, c } => {
                certified_lower_bound(&CertificateInput::new(n, p, q, c)?, CertificateMode::Numeric).map(|r| r.value)
            }
            Generator::WitnessLinearForm { p, q, t } => witness_upper_linear_form(n, p, q, t).map(|r| r.value),
            Generator::SolveExtremal { p } => {
                let g = CoefficientFamily::build(&Preset::ExtremalG { n: n as usize, p })?;
                solve_bohr_radius(&g, p, &DomainSpec::Polydisk, &SolveOptions::default()).map(|r| r.value)
            }
            Generator::Constant { value } => Ok(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: u64,
    pub value: f64,
    pub generator: String,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub t: Option<f64>,
}

/// Evaluate `generator` at every `n`, concurrently. Records come back
/// sorted by `n` whatever the input order; on failure the records for all
/// smaller dimensions are returned inside the error.
pub fn sweep(generator: &Generator, n_list: &[u64]) -> Result<Vec<SweepRecord>> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return domain("sweep dimensions must be distinct");
    }
    if ns.first() == Some(&0) {
        return domain("sweep dimensions must be at least 1");
    }
    let (p, q, t) = generator.params();
    let values: Vec<Result<f64>> = ns.par_iter().map(|&n| generator.evaluate(n)).collect();
    let mut records = Vec::with_capacity(ns.len());
    for (&n, value) in ns.iter().zip(values) {
        let value = value.and_then(|v| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Domain(format!("generator produced non-positive value {v}")))
            }
        });
        match value {
            Ok(value) => records.push(SweepRecord { n, value, generator: generator.name().into(), p, q, t }),
            Err(e) => return Err(Error::SweepAborted { n, partial: records, source: Box::new(e) }),
        }
    }
    Ok(records)
}

/// `round(10^e)` for `e = start, start + step, ..., end`, deduplicated.
pub fn log_grid(start_exp: f64, end_exp: f64, step: f64) -> Result<Vec<u64>> {
    if !(step > 0.0) || !(end_exp >= start_exp) || !(start_exp >= 0.0) {
        return domain("log grid needs 0 <= start <= end and step > 0");
    }
    let count = ((end_exp - start_exp) / step + 1e-9).floor() as usize;
    let mut out: Vec<u64> = (0..=count).map(|i| 10f64.powf(start_exp + i as f64 * step).round() as u64).collect();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `value ≈ c · n^β`
    Power,
    /// `value ≈ c · (log n / n)^β`
    LogPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub constant: f64,
    pub model: FitModel,
    pub r_squared: f64,
    pub window: (u64, u64),
    pub points: usize,
}

/// Ordinary least squares of `log value` on `log n` (power model) or on
/// `log(log n / n)` (log-power model).
pub fn fit_exponent(records: &[SweepRecord], model: FitModel) -> Result<FitResult> {
    if records.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 records, got {}", records.len())));
    }
    let mut xs = Vec::with_capacity(records.len());
    let mut ys = Vec::with_capacity(records.len());
    for r in records {
        if !(r.value > 0.0) {
            return Err(Error::DegenerateFit(format!("non-positive value {} at n = {}", r.value, r.n)));
        }
        let n = r.n as f64;
        let x = match model {
            FitModel::Power => n.ln(),
            FitModel::LogPower => {
                if r.n < 2 {
                    return Err(Error::DegenerateFit("log-power model needs n >= 2".into()));
                }
                (n.ln() / n).ln()
            }
        };
        xs.push(x);
        ys.push(r.value.ln());
    }
    let m = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateFit("all regressor values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let r_squared = if ss_res <= 1e-28 * m || ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    let n_min = records.iter().map(|r| r.n).min().unwrap();
    let n_max = records.iter().map(|r| r.n).max().unwrap();
    Ok(FitResult {
        exponent: slope,
        constant: intercept.exp(),
        model,
        r_squared,
        window: (n_min, n_max),
        points: records.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Compares `n^{1/p-1/2} r_0(n, p)` with its limit `(ln 2)^{1/p-1/2}`.
pub fn h2_limit_check(p: f64, n: u64) -> Result<LimitCheck> {
    let r0 = exact_h2_radius(n, p)?;
    let e = 1.0 / p - 0.5;
    let lhs = (n as f64).powf(e) * r0;
    let rhs = std::f64::consts::LN_2.powf(e);
    Ok(LimitCheck { lhs, rhs, rel_err: (lhs - rhs).abs() / rhs })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Versioned CSV: the version line, optional `#` comment lines, then the
/// header and one row per record.
pub fn write_csv<W: Write>(records: &[SweepRecord], comments: &[String], out: W) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "{CSV_VERSION_LINE}")?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.value.to_string(),
            r.generator.clone(),
            fmt_opt(r.p),
            fmt_opt(r.q),
            fmt_opt(r.t),
        ])?;
    }
    w.flush()
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<SweepRecord>> {
    let mut body = String::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if !line.starts_with('#') {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(Error::Format(format!("unexpected CSV header {headers:?}")));
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::Format(format!("bad number {s:?}")))
        }
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Format(e.to_string()))?;
        out.push(SweepRecord {
            n: row[0].parse().map_err(|_| Error::Format(format!("bad dimension {:?}", &row[0])))?,
            value: row[1].parse().map_err(|_| Error::Format(format!("bad value {:?}", &row[1])))?,
            generator: row[2].to_string(),
            p: parse_opt(&row[3])?,
            q: parse_opt(&row[4])?,
            t: parse_opt(&row[5])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(c: f64, beta: f64, ns: &[u64]) -> Vec<SweepRecord> {
        ns.iter()
            .map(|&n| SweepRecord { n, value: c * (n as f64).powf(beta), generator: "synthetic".into(), p: None, q: None, t: None })
            .collect()
    }

    #[test]
    fn exact_h2_sweep_decreases() {
        let recs = sweep(&Generator::ExactH2 { p: 1.0 }, &[1000, 10_000, 100_000, 1_000_000]).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.windows(2).all(|w| w[1].value < w[0].value));
    }

    #[test]
    fn constant_sweep_and_fit() {
        let recs = sweep(&Generator::Constant { value: 1.0 }, &[10, 20, 40, 80]).unwrap();
        assert!(recs.iter().all(|r| r.value == 1.0));
        let fit = fit_exponent(&recs, FitModel::Power).unwrap();
        assert_eq!(fit.exponent, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn closed_form_certificate_is_exact_power_law() {
        let ns = log_grid(1.0, 4.0, 0.5).unwrap();
        let recs = sweep(&Generator::CertifyClosedForm { p: 1.0, q: 2.0, c: 1.0 }, &ns).unwrap();
        let fit = fit_exponent(&recs, FitModel::Power).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_synthetic_exponents() {
        let ns = [3u64, 10, 31, 100, 316, 1000];
        for &beta in &[-1.5, -0.5, 0.0, 0.25, 2.0] {
            let fit = fit_exponent(&synthetic(0.7, beta, &ns), FitModel::Power).unwrap();
            assert!((fit.exponent - beta).abs() < 1e-12, "beta={beta}");
            assert!((fit.constant - 0.7).abs() < 1e-12);
        }
        let recs: Vec<_> = ns
            .iter()
            .map(|&n| {
                let x = (n as f64).ln() / n as f64;
                SweepRecord { n, value: 2.0 * x.powf(0.75), generator: "s".into(), p: None, q: None, t: None }
            })
            .collect();
        let fit = fit_exponent(&recs, FitModel::LogPower).unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        let recs = synthetic(1.0, 1.0, &[5, 5, 5]);
        assert!(matches!(fit_exponent(&recs, FitModel::Power), Err(Error::DegenerateFit(_))));
        assert!(fit_exponent(&synthetic(1.0, 1.0, &[5, 6]), FitModel::Power).is_err());
        assert!(fit_exponent(&synthetic(1.0, 1.0, &[1, 5, 6]), FitModel::LogPower).is_err());
    }

    #[test]
    fn sweep_is_order_independent() {
        let g = Generator::CertifyNumeric { p: 1.0, q: 2.0, c: 1.0 };
        let a = sweep(&g, &[5, 1, 40, 12]).unwrap();
        let b = sweep(&g, &[1, 5, 12, 40]).unwrap();
        assert_eq!(a, b);
        assert!(sweep(&g, &[3, 3]).is_err());
    }

    #[test]
    fn sweep_failure_keeps_partial_results() {
        let err = sweep(&Generator::Constant { value: -1.0 }, &[1, 2]).unwrap_err();
        assert!(matches!(err, Error::SweepAborted { n: 1, ref partial, .. } if partial.is_empty()));
    }

    #[test]
    fn limit_check_examples() {
        let c = h2_limit_check(1.0, 1_000_000).unwrap();
        assert!((c.rhs - 0.832_554_6).abs() < 1e-7);
        assert!(c.rel_err < 1e-5);
        let c = h2_limit_check(1.0, 1).unwrap();
        assert!((c.lhs - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((c.rel_err - 0.1507).abs() < 1e-3);
        let c = h2_limit_check(2.0 - 1e-13, 10).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-11 && (c.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_grid_values() {
        assert_eq!(log_grid(3.0, 4.0, 0.5).unwrap(), vec![1000, 3162, 10_000]);
        assert!(log_grid(3.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let recs = sweep(&Generator::WitnessLinearForm { p: 1.0, q: 2.0, t: 2.0 }, &[4, 9, 16]).unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &["note".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# bohr-lab v1\n# note\nn,value,generator,p,q,t\n"));
        assert_eq!(read_csv(&buf[..]).unwrap(), recs);
    }
}
