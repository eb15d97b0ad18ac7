//! Certified lower bounds on class radii, witness upper bounds, and the
//! coefficient estimate on `B(l_t^n)`.
//!
//! A certificate takes a per-degree hypothesis
//! `(Σ_{|α|=k} ‖x_α‖^q)^{1/q} <= C^k` and turns it into a radius valid for
//! every family satisfying it, through Hölder's inequality against the
//! count `C(n+k-1,k)` of indices of degree `k`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::family::CoefficientFamily;
use crate::radius::{bisect_unit_crossing, exact_h2_radius, RadiusResult, DEFAULT_TOLERANCE};

/// Slack allowed when comparing a lower bound against an upper bound.
pub const SANDWICH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateInput {
    pub n: u64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl CertificateInput {
    pub fn new(n: u64, p: f64, q: f64, c: f64) -> Result<Self> {
        if n == 0 {
            return domain("dimension must be at least 1");
        }
        if !(p > 0.0 && p.is_finite()) {
            return domain(format!("exponent p must be positive, got {p}"));
        }
        if !(q >= p) {
            return domain(format!("certificate needs p <= q, got p = {p}, q = {q}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("per-degree base C must be positive, got {c}"));
        }
        Ok(Self { n, p, q, c })
    }

    /// Scalar `H^2` functions of norm at most one: Parseval gives `q = 2`,
    /// `C = 1` in every degree.
    pub fn h2(n: u64, p: f64) -> Result<Self> {
        Self::new(n, p, 2.0, 1.0)
    }

    /// Preset for `H^∞(B(l_t^n), X)` with `X` of cotype `q`: exponent
    /// `γ = min(q, t)` and base `e^{1/t}` from the coefficient estimate.
    pub fn lt_ball_hinf(n: u64, p: f64, q: f64, t: f64) -> Result<Self> {
        if !(t >= 1.0) {
            return domain(format!("ball exponent t must be >= 1, got {t}"));
        }
        Self::new(n, p, q.min(t), (1.0 / t).exp())
    }

    fn hoelder_exponent(&self) -> f64 {
        1.0 / self.p - 1.0 / self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    ClosedForm,
    Numeric,
}

fn clip_to_unit(value: f64) -> RadiusResult {
    if value >= 1.0 {
        RadiusResult::saturated(0)
    } else {
        RadiusResult::closed_form(value)
    }
}

/// Lower bound on the radius of every family satisfying the certificate
/// hypothesis.
///
/// `ClosedForm` evaluates `1 / (2^{1/p} (2e)^{1/p-1/q} C n^{1/p-1/q})`,
/// which rests on `C(n+k-1,k) <= (2en)^k`. `Numeric` keeps the exact
/// counts and solves `Σ_k (Cr)^{pk} C(n+k-1,k)^{1-p/q} = 1`; it is never
/// smaller than the closed form.
pub fn certified_lower_bound(input: &CertificateInput, mode: CertificateMode) -> Result<RadiusResult> {
    let input = CertificateInput::new(input.n, input.p, input.q, input.c)?;
    match mode {
        CertificateMode::ClosedForm => {
            let e = input.hoelder_exponent();
            let denom = 2f64.powf(1.0 / input.p)
                * (2.0 * std::f64::consts::E).powf(e)
                * input.c
                * (input.n as f64).powf(e);
            Ok(clip_to_unit(1.0 / denom))
        }
        CertificateMode::Numeric => {
            bisect_unit_crossing(|r| Ok(certificate_sum(&input, r)), DEFAULT_TOLERANCE)
        }
    }
}

/// Upper bound on `Σ_{k>=1} s^k C(n+k-1,k)^θ`, `s = (Cr)^p`, `θ = 1 - p/q`.
///
/// Terms are summed exactly until the ratio `s ((n+k)/(k+1))^θ`, which
/// bounds every later term ratio, certifies a geometric remainder below
/// roundoff. Returns `∞` once `s >= 1` (divergence) or the running sum
/// already exceeds one.
pub fn certificate_sum(input: &CertificateInput, r: f64) -> f64 {
    let s = (input.c * r).powf(input.p);
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return f64::INFINITY;
    }
    let theta = 1.0 - input.p / input.q;
    let nf = input.n as f64;
    let ln_s = s.ln();
    let mut ln_count = 0.0;
    let mut sum = 0.0;
    for k in 1..=10_000_000u64 {
        let kf = k as f64;
        ln_count += ((nf - 1.0 + kf) / kf).ln();
        let term = (kf * ln_s + theta * ln_count).exp();
        sum += term;
        if sum > 1.0 {
            return sum;
        }
        let ratio = s * ((nf + kf) / (kf + 1.0)).powf(theta);
        if ratio < 1.0 {
            let remainder = term * ratio / (1.0 - ratio);
            if remainder <= 1e-17 * sum {
                return sum + remainder;
            }
        }
    }
    f64::INFINITY
}

/// `M · n^{1/t - 1/p}` with `M = max(1, n^{1/q - 1/t})`: the radius of the
/// normalized `l_q^n`-valued form `Σ e_k z_k / M` at the equal-coordinate
/// point of `B(l_t^n)`. Exact for that family when `p <= t`, and an upper
/// bound on the class radius for `X = l_q^n` in every case. Values above
/// one are reported as saturated.
pub fn witness_upper_linear_form(n: u64, p: f64, q: f64, t: f64) -> Result<RadiusResult> {
    if n == 0 {
        return domain("dimension must be at least 1");
    }
    if !(p > 0.0 && p.is_finite()) || !(q >= 1.0) || !(t >= 1.0) {
        return domain(format!("need p > 0, q >= 1, t >= 1; got p={p}, q={q}, t={t}"));
    }
    // max(n^{1/t}, n^{1/q}) n^{-1/p} as a single power
    let exponent = (1.0 / t).max(1.0 / q) - 1.0 / p;
    Ok(clip_to_unit((n as f64).powf(exponent)))
}

fn ln_factorial(m: u32) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// `e^{k/t} (k!/α!)^{1/t}`.
pub fn coefficient_bound(alpha: &crate::multiindex::MultiIndex, t: f64) -> f64 {
    let k = alpha.degree();
    let ln_multinomial = ln_factorial(k) - alpha.parts().iter().map(|&a| ln_factorial(a)).sum::<f64>();
    ((k as f64 + ln_multinomial) / t).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCheck {
    pub ok: bool,
    pub worst_ratio: f64,
}

/// Checks `‖x_α‖ <= e^{k/t} (k!/α!)^{1/t}` on every stored entry of a family
/// certified to have sup norm at most one on `B(l_t^n)`.
pub fn coefficient_bound_check(f: &CoefficientFamily, t: f64) -> Result<CoefficientCheck> {
    if !(t >= 1.0) {
        return domain(format!("ball exponent t must be >= 1, got {t}"));
    }
    match f.certificate() {
        Some(c) if c.t == t => {}
        _ => return Err(Error::Uncertified { t }),
    }
    let worst_ratio = f
        .entries()
        .iter()
        .map(|(alpha, &x)| x / coefficient_bound(alpha, t))
        .fold(0.0, f64::max);
    Ok(CoefficientCheck { ok: worst_ratio <= 1.0 + 1e-12, worst_ratio })
}

/// The class a bound refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub n: u64,
    pub p: f64,
    pub space: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfiguredBound {
    pub result: RadiusResult,
    pub config: BoundConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: RadiusResult,
    pub upper: RadiusResult,
    pub config: BoundConfig,
    pub consistent: bool,
}

/// `lower <= upper + 1e-12` for two bounds on the same class.
pub fn sandwich_check(lower: &ConfiguredBound, upper: &ConfiguredBound) -> Result<bool> {
    if lower.config != upper.config {
        return Err(Error::ConfigMismatch(format!("{:?} vs {:?}", lower.config, upper.config)));
    }
    let holds = lower.result.value <= upper.result.value + SANDWICH_SLACK;
    if !holds {
        log::warn!(
            "sandwich violated for {:?}: lower {:?} exceeds upper {:?}",
            lower.config,
            lower.result,
            upper.result
        );
    }
    Ok(holds)
}

/// Certificate with `q = 2, C = 1` against the exact `H^2` radius.
pub fn h2_bound_pair(n: u64, p: f64, mode: CertificateMode) -> Result<BoundPair> {
    let config = BoundConfig { n, p, space: "H2(D^n, C)".into() };
    let lower = ConfiguredBound {
        result: certified_lower_bound(&CertificateInput::h2(n, p)?, mode)?,
        config: config.clone(),
    };
    let upper = ConfiguredBound { result: RadiusResult::closed_form(exact_h2_radius(n, p)?), config: config.clone() };
    let consistent = sandwich_check(&lower, &upper)?;
    Ok(BoundPair { lower: lower.result, upper: upper.result, config, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Preset;
    use crate::multiindex::{enumerate, MultiIndex};
    use crate::radius::RadiusMethod;

    fn cert(n: u64, p: f64, q: f64, c: f64, mode: CertificateMode) -> f64 {
        certified_lower_bound(&CertificateInput::new(n, p, q, c).unwrap(), mode).unwrap().value
    }

    #[test]
    fn closed_form_one_variable() {
        let v = cert(1, 1.0, 2.0, 1.0, CertificateMode::ClosedForm);
        assert!((v - 1.0 / (2.0 * (2.0 * std::f64::consts::E).sqrt())).abs() < 1e-15);
        assert!((v - 0.2144).abs() < 1e-4);
    }

    #[test]
    fn numeric_one_variable_is_geometric() {
        // r/(1-r) = 1
        let v = cert(1, 1.0, 2.0, 1.0, CertificateMode::Numeric);
        assert!((v - 0.5).abs() < 1e-10);
    }

    #[test]
    fn equal_exponents_are_dimension_free() {
        for &p in &[0.5, 1.0, 1.5] {
            for &n in &[1u64, 10, 1000] {
                let v = cert(n, p, p, 1.0, CertificateMode::ClosedForm);
                assert!((v - 2f64.powf(-1.0 / p)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn numeric_dominates_closed_form() {
        for &n in &[1u64, 2, 7, 50, 1000] {
            for &p in &[0.5, 1.0, 1.5] {
                for &q in &[2.0, 3.0] {
                    for &c in &[0.5, 1.0, 2.0] {
                        let a = cert(n, p, q, c, CertificateMode::ClosedForm);
                        let b = cert(n, p, q, c, CertificateMode::Numeric);
                        assert!(b >= a, "n={n} p={p} q={q} C={c}: {b} < {a}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_p_above_q() {
        assert!(CertificateInput::new(3, 2.5, 2.0, 1.0).is_err());
        assert!(CertificateInput::new(3, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn certificate_sum_diverges_past_one_over_c() {
        let input = CertificateInput::new(3, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(certificate_sum(&input, 0.5), f64::INFINITY);
        assert_eq!(certificate_sum(&input, 0.0), 0.0);
    }

    #[test]
    fn certificate_sum_matches_brute_force() {
        // direct partial sums with exact counts as oracle
        let input = CertificateInput::new(4, 1.0, 3.0, 1.0).unwrap();
        let r = 0.05;
        let s: f64 = r;
        let mut brute = 0.0;
        for k in 1..400u32 {
            let c = crate::multiindex::count_f64(4, k);
            brute += s.powi(k as i32) * c.powf(2.0 / 3.0);
        }
        let got = certificate_sum(&input, r);
        assert!(got >= brute && got - brute < 1e-15 * brute.max(1.0), "{got} vs {brute}");
    }

    #[test]
    fn witness_examples() {
        let w = witness_upper_linear_form(4, 1.0, 2.0, f64::INFINITY).unwrap();
        assert_eq!(w.value, 0.5);
        assert_eq!(witness_upper_linear_form(5, 1.5, 1.5, 1.5).unwrap().method, RadiusMethod::SaturatedAtOne);
        let w = witness_upper_linear_form(9, 1.0, 2.0, 2.0).unwrap();
        assert!((w.value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn coefficient_check_examples() {
        let z1 = CoefficientFamily::explicit(3, [(MultiIndex::unit(3, 0), 1.0)])
            .unwrap()
            .certify_sup_norm(2.0, "coordinate function");
        let c = coefficient_bound_check(&z1, 2.0).unwrap();
        assert!(c.ok);
        assert!((c.worst_ratio - (-0.5f64).exp()).abs() < 1e-15);

        for k in 1..=8 {
            for alpha in enumerate(3, k).unwrap() {
                let m = CoefficientFamily::build(&Preset::NormalizedMonomial { alpha, t: 2.0 }).unwrap();
                assert!(coefficient_bound_check(&m, 2.0).unwrap().ok);
            }
        }

        let alpha = MultiIndex::new(vec![2, 1]).unwrap();
        let inflated = CoefficientFamily::explicit(2, [(alpha.clone(), 2.0 * coefficient_bound(&alpha, 3.0))])
            .unwrap()
            .certify_sup_norm(3.0, "deliberately violated");
        let c = coefficient_bound_check(&inflated, 3.0).unwrap();
        assert!(!c.ok);
        assert!((c.worst_ratio - 2.0).abs() < 1e-14);
    }

    #[test]
    fn coefficient_check_refuses_uncertified() {
        let f = CoefficientFamily::explicit(1, [(MultiIndex::unit(1, 0), 1.0)]).unwrap();
        assert_eq!(coefficient_bound_check(&f, 2.0).unwrap_err(), Error::Uncertified { t: 2.0 });
        let g = f.certify_sup_norm(2.0, "x");
        assert!(coefficient_bound_check(&g, 3.0).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let cfg = BoundConfig { n: 1, p: 1.0, space: "H2".into() };
        let b = |v: f64| ConfiguredBound { result: RadiusResult::closed_form(v), config: cfg.clone() };
        assert!(sandwich_check(&b(0.2144), &b(0.7072)).unwrap());
        assert!(sandwich_check(&b(0.5), &b(0.5)).unwrap());
        assert!(!sandwich_check(&b(0.6), &b(0.5)).unwrap());
        let other = ConfiguredBound { result: RadiusResult::closed_form(0.9), config: BoundConfig { n: 2, ..cfg.clone() } };
        assert!(matches!(sandwich_check(&b(0.1), &other), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn h2_pairs_are_consistent() {
        for n in [1u64, 2, 10, 100] {
            for &p in &[0.5, 1.0, 1.5] {
                for mode in [CertificateMode::ClosedForm, CertificateMode::Numeric] {
                    assert!(h2_bound_pair(n, p, mode).unwrap().consistent);
                }
            }
        }
    }

    #[test]
    fn lt_ball_preset() {
        let c = CertificateInput::lt_ball_hinf(5, 1.0, 3.0, 2.0).unwrap();
        assert_eq!(c.q, 2.0);
        assert!((c.c - 0.5f64.exp()).abs() < 1e-15);
        assert!(CertificateInput::lt_ball_hinf(5, 2.5, 3.0, 2.0).is_err());
    }
}
