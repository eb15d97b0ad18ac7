//! Coefficient families `α ↦ ‖x_α‖` of power series `f(z) = Σ x_α z^α`.
//!
//! Only coefficient norms enter the Bohr sums, so a family is a finite
//! map of norms up to a truncation degree `K` plus an optional analytic
//! tail describing every degree above `K` in closed form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::multiindex::{count_f64, enumerate, multinomial_weight_big, MultiIndex};

/// Truncation degree used by presets with infinitely many coefficients.
pub const DEFAULT_TRUNCATION: u32 = 64;

/// Presets stop materializing degrees once this many entries are stored;
/// the analytic tail carries the rest.
pub const ENTRY_BUDGET: u64 = 1 << 16;

/// `1 - 2^{-1/n}` without cancellation: `-expm1(-ln 2 / n)`.
pub fn one_minus_half_root(n: f64) -> f64 {
    -(-std::f64::consts::LN_2 / n).exp_m1()
}

/// Geometric tail: every `α` with `|α| = k > K` carries `scale · v^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTail {
    pub kind: TailKind,
    pub parameter: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    GeometricUniform,
}

impl AnalyticTail {
    pub fn geometric(v: f64, scale: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&v) {
            return domain(format!("tail ratio must lie in [0,1), got {v}"));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return domain(format!("tail scale must be finite and nonnegative, got {scale}"));
        }
        Ok(Self { kind: TailKind::GeometricUniform, parameter: v, scale })
    }

    /// `Σ_{|α|=k, k>K} (scale · v^k · ρ^k)^p` for `n` variables, i.e. the
    /// tail's share of a powered sum taken at radius `ρ`.
    pub fn powered_sum(&self, n: usize, truncation: u32, p: f64, rho: f64) -> Result<f64> {
        let s = (self.parameter * rho).powf(p);
        if s >= 1.0 {
            return Err(Error::TailDivergence { ratio: s });
        }
        Ok(self.scale.powf(p) * geometric_count_tail(n, truncation, s))
    }
}

/// `Σ_{k>K} C(n+k-1,k) s^k` for `0 <= s < 1`.
///
/// Uses `(1-s)^{-n} - Σ_{k<=K} C(n+k-1,k) s^k` while that difference is
/// well conditioned, and sums the series directly once the tail is tiny
/// relative to the head.
pub fn geometric_count_tail(n: usize, truncation: u32, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let full = (-(n as f64) * (-s).ln_1p()).exp_m1();
    let mut head = 0.0;
    let mut term = 1.0;
    let nf = n as f64;
    for k in 1..=truncation {
        term *= s * (nf - 1.0 + k as f64) / k as f64;
        head += term;
    }
    let closed = full - head;
    if closed >= 1e-3 * full {
        return closed;
    }
    // the tail is small next to the head: sum it directly, stopping once the
    // geometric remainder bound falls below roundoff
    let mut tail = 0.0;
    let mut k = truncation;
    loop {
        k += 1;
        let kf = k as f64;
        term *= s * (nf - 1.0 + kf) / kf;
        tail += term;
        let ratio = s * (nf + kf) / (kf + 1.0);
        if term == 0.0 || (ratio < 1.0 && term * ratio / (1.0 - ratio) <= 1e-17 * tail) || k > truncation + 1_000_000 {
            break;
        }
    }
    tail
}

/// Vector in `l_q^m`; coordinates are moduli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqVector {
    pub coordinates: Vec<f64>,
    pub q: f64,
}

impl LqVector {
    pub fn new(coordinates: Vec<f64>, q: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return domain(format!("l_q exponent must be >= 1, got {q}"));
        }
        Ok(Self { coordinates, q })
    }

    pub fn norm(&self) -> f64 {
        lq_norm(&self.coordinates, self.q)
    }
}

/// `(Σ |v_i|^q)^{1/q}`, or `max |v_i|` for `q = ∞`.
pub fn lq_norm(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return v.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    // scale by the max to keep large q from overflowing
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Statement that the function behind a family has sup norm at most 1 on
/// `B(l_t^n)` (`t = ∞` for the polydisk).
#[derive(Debug, Clone, PartialEq)]
pub struct SupNormCertificate {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFamily {
    dimension: usize,
    entries: BTreeMap<MultiIndex, f64>,
    truncation_degree: u32,
    tail: Option<AnalyticTail>,
    label: String,
    /// False when degrees above `K` were dropped without a tail.
    complete: bool,
    certificate: Option<SupNormCertificate>,
    payloads: BTreeMap<MultiIndex, LqVector>,
}

/// Named constructions accepted by [`CoefficientFamily::build`].
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `(a - z)/(1 - a z)` on the unit disk.
    Moebius { a: f64 },
    /// Uniform `v^k` on every index of degree `k >= 1`, normalized to unit
    /// `H^2` norm; the sharpness witness for the exact `H^2` radius.
    ExtremalG { n: usize, p: f64 },
    /// `Σ e_k z_k / M` with values in `l_q^n`, sup norm 1 on `B(l_t^n)`.
    LinearForm { n: usize, q: f64, t: f64 },
    /// `z^α / sup_{B(l_t^n)} |z^α|`.
    NormalizedMonomial { alpha: MultiIndex, t: f64 },
    /// Möbius map composed with the scalar form `z ↦ n^{-1/t'} Σ z_i`
    /// (`1/t + 1/t' = 1`), truncated at `truncation`.
    MoebiusLinear { a: f64, n: usize, t: f64, truncation: u32 },
    Explicit { dimension: usize, entries: Vec<(MultiIndex, f64)> },
}

impl CoefficientFamily {
    /// Finite family from explicit entries; `K` is the largest degree seen.
    pub fn explicit(dimension: usize, entries: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        if dimension == 0 {
            return domain("dimension must be at least 1");
        }
        let mut map = BTreeMap::new();
        for (alpha, value) in entries {
            if alpha.dimension() != dimension {
                return domain(format!("index {alpha} does not have {dimension} parts"));
            }
            if !(value >= 0.0 && value.is_finite()) {
                return domain(format!("entry at {alpha} must be finite and nonnegative, got {value}"));
            }
            map.insert(alpha, value);
        }
        let truncation_degree = map.keys().map(MultiIndex::degree).max().unwrap_or(0);
        Ok(Self {
            dimension,
            entries: map,
            truncation_degree,
            tail: None,
            label: "explicit".into(),
            complete: true,
            certificate: None,
            payloads: BTreeMap::new(),
        })
    }

    /// Assemble a family from already-validated parts.
    pub(crate) fn from_parts(
        dimension: usize,
        entries: BTreeMap<MultiIndex, f64>,
        truncation_degree: u32,
        tail: Option<AnalyticTail>,
        complete: bool,
        label: String,
    ) -> Self {
        Self {
            dimension,
            entries,
            truncation_degree,
            tail,
            label,
            complete,
            certificate: None,
            payloads: BTreeMap::new(),
        }
    }

    pub fn build(preset: &Preset) -> Result<Self> {
        match preset {
            Preset::Moebius { a } => moebius(*a),
            Preset::ExtremalG { n, p } => extremal_g(*n, *p),
            Preset::LinearForm { n, q, t } => linear_form(*n, *q, *t),
            Preset::NormalizedMonomial { alpha, t } => normalized_monomial(alpha, *t),
            Preset::MoebiusLinear { a, n, t, truncation } => moebius_linear(*a, *n, *t, *truncation),
            Preset::Explicit { dimension, entries } => Self::explicit(*dimension, entries.iter().cloned()),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn truncation_degree(&self) -> u32 {
        self.truncation_degree
    }

    pub fn tail(&self) -> Option<&AnalyticTail> {
        self.tail.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.entries
    }

    pub fn entry(&self, alpha: &MultiIndex) -> f64 {
        self.entries.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn certificate(&self) -> Option<&SupNormCertificate> {
        self.certificate.as_ref()
    }

    pub fn payloads(&self) -> &BTreeMap<MultiIndex, LqVector> {
        &self.payloads
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Attach a tail covering every degree above the current `K`.
    pub fn with_tail(mut self, tail: AnalyticTail) -> Self {
        self.tail = Some(tail);
        self.complete = true;
        self
    }

    /// Caller asserts `sup_{B(l_t^n)} ‖f‖ <= 1`.
    pub fn certify_sup_norm(mut self, t: f64, reason: impl Into<String>) -> Self {
        self.certificate = Some(SupNormCertificate { t, reason: reason.into() });
        self
    }

    /// Drop every degree above `k` and the tail; the result is flagged
    /// incomplete so majorants computed from it are lower bounds.
    pub fn truncate(&self, k: u32) -> Self {
        let mut out = self.clone();
        out.entries.retain(|a, _| a.degree() <= k);
        out.payloads.retain(|a, _| a.degree() <= k);
        out.truncation_degree = k.min(self.truncation_degree);
        out.complete = self.complete && self.tail.is_none() && self.entries.keys().all(|a| a.degree() <= k);
        out.tail = None;
        out
    }

    /// True if some coefficient of degree >= 1 is positive.
    pub fn has_positive_term(&self) -> bool {
        self.entries.iter().any(|(a, &v)| a.degree() >= 1 && v > 0.0)
            || self.tail.is_some_and(|t| t.parameter > 0.0 && t.scale > 0.0)
    }

    /// `Σ_{|α|=k} ‖x_α‖^p` for the stored degrees `k = 0..=K`.
    pub fn degree_powered_sums(&self, p: f64) -> Vec<f64> {
        let mut sums = vec![0.0; self.truncation_degree as usize + 1];
        for (alpha, &v) in &self.entries {
            if v > 0.0 {
                sums[alpha.degree() as usize] += v.powf(p);
            }
        }
        sums
    }

    /// Entry-wise `x_α ↦ σ^α x_α`, the pullback under `z ↦ σ ⊙ z`.
    pub fn rescale(&self, sigma: &[f64]) -> Result<Self> {
        if sigma.len() != self.dimension {
            return domain(format!("scaling vector has {} parts, expected {}", sigma.len(), self.dimension));
        }
        if sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return domain("scaling factors must be positive and finite");
        }
        let constant = sigma.iter().all(|&s| s == sigma[0]);
        let tail = match self.tail {
            None => None,
            Some(_) if !constant => return Err(Error::RescaleWithTail),
            Some(t) => Some(AnalyticTail::geometric(t.parameter * sigma[0], t.scale)?),
        };
        let factor = |a: &MultiIndex| a.monomial(sigma);
        let entries = self.entries.iter().map(|(a, &v)| (a.clone(), factor(a) * v)).collect();
        let payloads = self
            .payloads
            .iter()
            .map(|(a, v)| {
                let f = factor(a);
                let coords = v.coordinates.iter().map(|c| c * f).collect();
                (a.clone(), LqVector { coordinates: coords, q: v.q })
            })
            .collect();
        let damping = sigma.iter().all(|&s| s <= 1.0);
        Ok(Self {
            dimension: self.dimension,
            entries,
            truncation_degree: self.truncation_degree,
            tail,
            label: format!("{} rescaled", self.label),
            complete: self.complete,
            certificate: if damping { self.certificate.clone() } else { None },
            payloads,
        })
    }

    /// `(Σ_α ‖x_α‖²)^{1/2}` including degree 0 and the tail.
    pub fn h2_norm(&self) -> Result<f64> {
        let head: f64 = self.entries.values().map(|v| v * v).sum();
        let tail = match &self.tail {
            Some(t) => t.powered_sum(self.dimension, self.truncation_degree, 2.0, 1.0)?,
            None => 0.0,
        };
        Ok((head + tail).sqrt())
    }

    pub fn to_document(&self) -> FamilyDocument {
        FamilyDocument {
            dimension: self.dimension,
            truncation_degree: self.truncation_degree,
            entries: self.entries.iter().map(|(a, &v)| (a.clone(), v)).collect(),
            tail: self.tail,
            label: self.label.clone(),
        }
    }

    pub fn from_document(doc: FamilyDocument) -> Result<Self> {
        let mut family = Self::explicit(doc.dimension, doc.entries)?;
        if family.truncation_degree > doc.truncation_degree {
            return Err(Error::Format(format!(
                "entry of degree {} above truncation degree {}",
                family.truncation_degree, doc.truncation_degree
            )));
        }
        family.truncation_degree = doc.truncation_degree;
        family.label = doc.label;
        if let Some(t) = doc.tail {
            family.tail = Some(AnalyticTail::geometric(t.parameter, t.scale)?);
        }
        Ok(family)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("family documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: FamilyDocument = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_document(doc)
    }
}

/// Wire form of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDocument {
    pub dimension: usize,
    pub truncation_degree: u32,
    pub entries: Vec<(MultiIndex, f64)>,
    #[serde(default)]
    pub tail: Option<AnalyticTail>,
    #[serde(default)]
    pub label: String,
}

fn moebius(a: f64) -> Result<CoefficientFamily> {
    if !(a > 0.0 && a < 1.0) {
        return domain(format!("Möbius parameter must lie in (0,1), got {a}"));
    }
    let k_max = DEFAULT_TRUNCATION;
    let mut entries = vec![(MultiIndex::new(vec![0])?, a)];
    let lead = 1.0 - a * a;
    for k in 1..=k_max {
        entries.push((MultiIndex::new(vec![k])?, lead * a.powi(k as i32 - 1)));
    }
    let family = CoefficientFamily::explicit(1, entries)?
        .with_tail(AnalyticTail::geometric(a, lead / a)?)
        .with_label(format!("moebius(a={a})"))
        .certify_sup_norm(f64::INFINITY, "Möbius automorphism of the disk");
    Ok(family)
}

/// Largest `K <= DEFAULT_TRUNCATION` whose degrees `0..=K` fit the budget.
fn budgeted_truncation(n: usize) -> u32 {
    let mut total = 0.0;
    for k in 0..=DEFAULT_TRUNCATION {
        total += count_f64(n, k);
        if total > ENTRY_BUDGET as f64 {
            return k.saturating_sub(1);
        }
    }
    DEFAULT_TRUNCATION
}

fn extremal_g(n: usize, p: f64) -> Result<CoefficientFamily> {
    if n == 0 {
        return domain("dimension must be at least 1");
    }
    if !(p > 0.0 && p < 2.0) {
        return domain(format!("extremal family needs p in (0,2), got {p}"));
    }
    // v = r0^{p/(2-p)} with r0 = (1-2^{-1/n})^{1/p-1/2} collapses to
    // v = (1-2^{-1/n})^{1/2}
    let v = one_minus_half_root(n as f64).sqrt();
    let k_max = budgeted_truncation(n);
    let mut entries = vec![(MultiIndex::zero(n), 0.0)];
    for k in 1..=k_max {
        let value = v.powi(k as i32);
        entries.extend(enumerate(n, k)?.into_iter().map(|a| (a, value)));
    }
    let mut family = CoefficientFamily::explicit(n, entries)?;
    family.truncation_degree = k_max;
    Ok(family
        .with_tail(AnalyticTail::geometric(v, 1.0)?)
        .with_label(format!("extremal_g(n={n}, p={p})")))
}

/// `sup_{z ∈ B(l_t^n)} ‖z‖_q = max(1, n^{1/q - 1/t})`.
pub fn lq_over_lt_ball_sup(n: usize, q: f64, t: f64) -> f64 {
    (n as f64).powf(1.0 / q - 1.0 / t).max(1.0)
}

fn linear_form(n: usize, q: f64, t: f64) -> Result<CoefficientFamily> {
    if n == 0 {
        return domain("dimension must be at least 1");
    }
    if !(q >= 1.0) || !(t >= 1.0) {
        return domain(format!("linear form needs q, t in [1, inf], got q={q}, t={t}"));
    }
    let m = lq_over_lt_ball_sup(n, q, t);
    let mut family = CoefficientFamily::explicit(n, (0..n).map(|i| (MultiIndex::unit(n, i), 1.0 / m)))?;
    family.payloads = (0..n)
        .map(|i| {
            let mut coords = vec![0.0; n];
            coords[i] = 1.0 / m;
            (MultiIndex::unit(n, i), LqVector { coordinates: coords, q })
        })
        .collect();
    Ok(family
        .with_label(format!("linear_form(n={n}, q={q}, t={t}); concrete l_q realization"))
        .certify_sup_norm(t, "normalized l_q-valued linear form"))
}

/// `sup_{B(l_t^n)} |z^α| = Π (α_i/k)^{α_i/t}` by weighted AM-GM.
pub fn monomial_sup_on_ball(alpha: &MultiIndex, t: f64) -> f64 {
    if t.is_infinite() || alpha.degree() == 0 {
        return 1.0;
    }
    let k = alpha.degree() as f64;
    alpha
        .parts()
        .iter()
        .filter(|&&a| a > 0)
        .map(|&a| (a as f64 / k).powf(a as f64 / t))
        .product()
}

fn normalized_monomial(alpha: &MultiIndex, t: f64) -> Result<CoefficientFamily> {
    if !(t >= 1.0) {
        return domain(format!("ball exponent must be >= 1, got {t}"));
    }
    let value = 1.0 / monomial_sup_on_ball(alpha, t);
    Ok(CoefficientFamily::explicit(alpha.dimension(), [(alpha.clone(), value)])?
        .with_label(format!("monomial z^{alpha} normalized on l_{t} ball"))
        .certify_sup_norm(t, "monomial divided by its sup"))
}

fn moebius_linear(a: f64, n: usize, t: f64, truncation: u32) -> Result<CoefficientFamily> {
    if !(a > 0.0 && a < 1.0) {
        return domain(format!("Möbius parameter must lie in (0,1), got {a}"));
    }
    if n == 0 || !(t >= 1.0) {
        return domain("composition needs n >= 1 and t >= 1");
    }
    // the dual-norm-one coefficient vector c_i = n^{-1/t'}
    let dual_exponent = 1.0 - 1.0 / t;
    let c = (n as f64).powf(-dual_exponent);
    let mut entries = vec![(MultiIndex::zero(n), a)];
    for k in 1..=truncation {
        let lead = (1.0 - a * a) * a.powi(k as i32 - 1) * c.powi(k as i32);
        for alpha in enumerate(n, k)? {
            let w = num_traits::ToPrimitive::to_f64(&multinomial_weight_big(&alpha)).unwrap_or(f64::INFINITY);
            entries.push((alpha, lead * w));
        }
    }
    let mut family = CoefficientFamily::explicit(n, entries)?;
    family.truncation_degree = truncation;
    family.complete = false;
    Ok(family
        .with_label(format!("moebius(a={a}) of normalized linear form on l_{t}^{n}"))
        .certify_sup_norm(t, "Möbius map of a linear form with unit dual norm"))
}
