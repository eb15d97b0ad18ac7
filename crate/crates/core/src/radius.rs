//! Radius solvers: monotone bisection on `S_p(f, r) = 1`, the exact `H^2`
//! class radius, and the pluriharmonic radius.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::family::{one_minus_half_root, AnalyticTail, CoefficientFamily};
use crate::majorant::{powered_majorant, BallOptions, DomainSpec};
use crate::multiindex::enumerate;

/// Radius at which saturation is decided; the tails diverge at `r = 1`.
pub const SATURATION_PROBE: f64 = 1.0 - 1e-9;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    ClosedForm,
    Bisection,
    SaturatedAtOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusResult {
    pub value: f64,
    pub method: RadiusMethod,
    pub residual: f64,
    pub bracket: [f64; 2],
    pub evaluations: u32,
}

impl RadiusResult {
    pub fn closed_form(value: f64) -> Self {
        Self { value, method: RadiusMethod::ClosedForm, residual: 0.0, bracket: [value, value], evaluations: 0 }
    }

    pub fn saturated(evaluations: u32) -> Self {
        Self {
            value: 1.0,
            method: RadiusMethod::SaturatedAtOne,
            residual: 0.0,
            bracket: [SATURATION_PROBE, 1.0],
            evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub ball: BallOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOLERANCE, ball: BallOptions::default() }
    }
}

/// Largest `r ∈ [0,1]` with `sum(r) <= 1` for a nondecreasing `sum` with
/// `sum(0) <= 1`. The returned value is the lower end of the final
/// bracket, so `sum(value) <= 1` always holds.
pub fn bisect_unit_crossing<F>(mut sum: F, tol: f64) -> Result<RadiusResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let mut evaluations = 1;
    let at_probe = sum(SATURATION_PROBE).map_err(|e| Error::Bracket { lo: 0.0, hi: 1.0, source: Box::new(e) })?;
    if at_probe <= 1.0 {
        return Ok(RadiusResult::saturated(evaluations));
    }
    let (mut lo, mut hi) = (0.0, SATURATION_PROBE);
    let mut at_lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        let s = sum(mid).map_err(|e| Error::Bracket { lo, hi, source: Box::new(e) })?;
        if s <= 1.0 {
            lo = mid;
            at_lo = s;
        } else {
            hi = mid;
        }
    }
    Ok(RadiusResult {
        value: lo,
        method: RadiusMethod::Bisection,
        residual: (at_lo - 1.0).abs(),
        bracket: [lo, hi],
        evaluations,
    })
}

/// Per-family p-Bohr radius: the largest `r` with `S_p(f, r, domain) <= 1`.
pub fn solve_bohr_radius(f: &CoefficientFamily, p: f64, dom: &DomainSpec, opts: &SolveOptions) -> Result<RadiusResult> {
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("exponent p must be positive, got {p}"));
    }
    if !f.has_positive_term() {
        return Ok(RadiusResult::saturated(0));
    }
    bisect_unit_crossing(|r| powered_majorant(f, p, dom, r, &opts.ball).map(|m| m.value), opts.tol)
}

fn check_h2_exponent(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 2.0) {
        return domain(format!(
            "the exact H^2 radius is only available for p in (0,2); got p = {p}"
        ));
    }
    Ok(())
}

/// `(1 - 2^{-1/n})^{1/p - 1/2}` for `p ∈ (0,2)`.
pub fn exact_h2_radius(n: u64, p: f64) -> Result<f64> {
    check_h2_exponent(p)?;
    if n == 0 {
        return domain("dimension must be at least 1");
    }
    Ok(one_minus_half_root(n as f64).powf(1.0 / p - 0.5))
}

/// `((1 - r^{2p/(2-p)})^{-n} - 1)^{1-p/2} - 1`: negative below the exact
/// radius, zero at it, positive above.
pub fn h2_defining_residual(n: u64, p: f64, r: f64) -> Result<f64> {
    check_h2_exponent(p)?;
    if n == 0 {
        return domain("dimension must be at least 1");
    }
    if !(r >= 0.0) {
        return domain(format!("radius must be nonnegative, got {r}"));
    }
    let w = r.powf(2.0 * p / (2.0 - p));
    if w >= 1.0 {
        return domain(format!("r^(2p/(2-p)) = {w} must be below 1"));
    }
    let bracket = (-(n as f64) * (-w).ln_1p()).exp_m1();
    Ok(bracket.powf(1.0 - p / 2.0) - 1.0)
}

/// `f = h + conj(g)` with coefficient norms `a_α` (of `h`) and `b_α` (of `g`).
#[derive(Debug, Clone, PartialEq)]
pub struct PluriharmonicFamily {
    holo: CoefficientFamily,
    anti: CoefficientFamily,
}

impl PluriharmonicFamily {
    /// The constant term of `g` is discarded (`g(0) = 0`).
    pub fn new(holo: CoefficientFamily, anti: CoefficientFamily) -> Result<Self> {
        if holo.dimension() != anti.dimension() {
            return domain(format!(
                "holomorphic and antiholomorphic parts have dimensions {} and {}",
                holo.dimension(),
                anti.dimension()
            ));
        }
        let anti = if anti.entries().keys().any(|a| a.degree() == 0) {
            let entries = anti.entries().iter().filter(|(a, _)| a.degree() > 0).map(|(a, &v)| (a.clone(), v)).collect();
            CoefficientFamily::from_parts(
                anti.dimension(),
                entries,
                anti.truncation_degree(),
                anti.tail().copied(),
                anti.is_complete(),
                anti.label().to_string(),
            )
        } else {
            anti
        };
        Ok(Self { holo, anti })
    }

    pub fn holo(&self) -> &CoefficientFamily {
        &self.holo
    }

    pub fn anti(&self) -> &CoefficientFamily {
        &self.anti
    }

    /// Family with per-index weight `(a_α^p + b_α^p)^{1/p}`, whose one-sided
    /// powered majorant is the pluriharmonic sum. With `g = 0` this is `h`
    /// itself, unchanged.
    pub fn merged(&self, p: f64) -> Result<CoefficientFamily> {
        let (h, g) = (&self.holo, &self.anti);
        if !g.has_positive_term() {
            return Ok(h.clone());
        }
        let combine = |a: f64, b: f64| {
            if b == 0.0 {
                a
            } else if a == 0.0 {
                b
            } else {
                (a.powf(p) + b.powf(p)).powf(1.0 / p)
            }
        };
        let k_max = h.truncation_degree().max(g.truncation_degree());
        let mut entries = materialize(h, k_max)?;
        for (alpha, b) in materialize(g, k_max)? {
            let slot = entries.entry(alpha).or_insert(0.0);
            *slot = combine(*slot, b);
        }
        let tail = match (h.tail(), g.tail()) {
            (None, None) => None,
            (Some(t), None) | (None, Some(t)) => Some(*t),
            (Some(a), Some(b)) if a.parameter == b.parameter => {
                Some(AnalyticTail::geometric(a.parameter, combine(a.scale, b.scale))?)
            }
            (Some(a), Some(b)) => return Err(Error::IncompatibleTails(a.parameter, b.parameter)),
        };
        Ok(CoefficientFamily::from_parts(
            h.dimension(),
            entries,
            k_max,
            tail,
            h.is_complete() && g.is_complete(),
            format!("pluriharmonic({} + conj {})", h.label(), g.label()),
        ))
    }
}

/// Stored entries plus tail entries written out up to degree `k_max`.
fn materialize(f: &CoefficientFamily, k_max: u32) -> Result<BTreeMap<crate::multiindex::MultiIndex, f64>> {
    let mut out = f.entries().clone();
    if let Some(t) = f.tail() {
        for k in f.truncation_degree() + 1..=k_max {
            let v = t.scale * t.parameter.powi(k as i32);
            out.extend(enumerate(f.dimension(), k)?.into_iter().map(|a| (a, v)));
        }
    }
    Ok(out)
}

/// Largest `r` with `sup_{z ∈ rB(l_t^n)} Σ (a_α^p + b_α^p)|z^α|^p <= 1`.
pub fn pluriharmonic_radius(f: &PluriharmonicFamily, p: f64, t: f64, opts: &SolveOptions) -> Result<RadiusResult> {
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("exponent p must be positive, got {p}"));
    }
    let dom = DomainSpec::lt_ball(t)?;
    solve_bohr_radius(&f.merged(p)?, p, &dom, opts)
}
