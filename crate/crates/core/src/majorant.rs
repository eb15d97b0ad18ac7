//! Powered majorants `S_p(f, r) = sup_{z ∈ rR} Σ_{k>=1} Σ_{|α|=k} ‖x_α‖^p |z^α|^p`.
//!
//! On the polydisk every `|z^α|` peaks at `|z_i| = r`, so the supremum is a
//! closed-form sum. On `B(l_t^n)` the substitution `u_i = |z_i|^t` turns
//! the objective into a posynomial `Σ c_α Π u_i^{pα_i/t}` that is
//! coordinate-monotone, hence maximized on the simplex `Σ u_i = r^t`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::family::CoefficientFamily;
use crate::multiindex::{count_f64, MultiIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Polydisk,
    LtBall { t: f64 },
}

impl DomainSpec {
    pub fn lt_ball(t: f64) -> Result<Self> {
        if !(t >= 1.0) {
            return domain(format!("ball exponent t must be >= 1, got {t}"));
        }
        if t.is_infinite() {
            return Ok(DomainSpec::Polydisk);
        }
        Ok(DomainSpec::LtBall { t })
    }

    /// The exponent `t`, with `∞` for the polydisk.
    pub fn exponent(&self) -> f64 {
        match self {
            DomainSpec::Polydisk => f64::INFINITY,
            DomainSpec::LtBall { t } => *t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    LowerBound,
    Optimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantValue {
    pub value: f64,
    pub exactness: Exactness,
    /// Moduli `|z_i|` attaining the value.
    pub maximizer: Option<Vec<f64>>,
    /// Polydisk bound on the analytic tail, already included in `value`.
    pub tail_enclosure: f64,
}

/// Multistart settings for the ball maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallOptions {
    pub seed: u64,
    pub starts: usize,
    pub max_iter: usize,
    /// Stop once the objective gained less than this fraction over
    /// `window` iterations.
    pub rel_tol: f64,
    pub window: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self { seed: 0, starts: 16, max_iter: 100_000, rel_tol: 1e-12, window: 50 }
    }
}

fn check_radius(p: f64, r: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return domain(format!("exponent p must be positive, got {p}"));
    }
    if !(0.0..1.0).contains(&r) {
        return domain(format!("radius must lie in [0,1), got {r}"));
    }
    Ok(())
}

pub fn powered_majorant(f: &CoefficientFamily, p: f64, dom: &DomainSpec, r: f64, opts: &BallOptions) -> Result<MajorantValue> {
    match dom {
        DomainSpec::Polydisk => powered_majorant_polydisk(f, p, r),
        DomainSpec::LtBall { t } => powered_majorant_ball(f, p, *t, r, opts),
    }
}

pub fn powered_majorant_polydisk(f: &CoefficientFamily, p: f64, r: f64) -> Result<MajorantValue> {
    check_radius(p, r)?;
    let tail = tail_share(f, p, r)?;
    let sums = f.degree_powered_sums(p);
    let rp = r.powf(p);
    let mut value = 0.0;
    let mut scale = 1.0;
    for s in sums.iter().skip(1) {
        scale *= rp;
        value += scale * s;
    }
    Ok(MajorantValue {
        value: value + tail,
        exactness: if f.is_complete() { Exactness::Exact } else { Exactness::LowerBound },
        maximizer: Some(vec![r; f.dimension()]),
        tail_enclosure: 0.0,
    })
}

fn tail_share(f: &CoefficientFamily, p: f64, r: f64) -> Result<f64> {
    match f.tail() {
        Some(t) => t.powered_sum(f.dimension(), f.truncation_degree(), p, r),
        None => Ok(0.0),
    }
}

/// Posynomial `Σ c_j Π u_i^{e_ji}` over the simplex `Σ u_i = total`.
#[derive(Debug, Clone)]
struct Posynomial {
    n: usize,
    coeffs: Vec<f64>,
    exponents: Vec<Vec<f64>>,
}

impl Posynomial {
    fn from_family(f: &CoefficientFamily, p: f64, t: f64) -> Self {
        let mut coeffs = Vec::new();
        let mut exponents = Vec::new();
        for (alpha, &x) in f.entries() {
            if alpha.degree() == 0 || x <= 0.0 {
                continue;
            }
            coeffs.push(x.powf(p));
            exponents.push(alpha.parts().iter().map(|&a| p * a as f64 / t).collect());
        }
        Self { n: f.dimension(), coeffs, exponents }
    }

    fn monomial(&self, j: usize, u: &[f64]) -> f64 {
        let mut m = self.coeffs[j];
        for (&e, &ui) in self.exponents[j].iter().zip(u) {
            if e != 0.0 {
                m *= ui.powf(e);
            }
        }
        m
    }

    fn value(&self, u: &[f64]) -> f64 {
        (0..self.coeffs.len()).map(|j| self.monomial(j, u)).sum()
    }

    /// `u_i ∂F/∂u_i`, finite even on the simplex boundary.
    fn responsibilities(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for j in 0..self.coeffs.len() {
            let m = self.monomial(j, u);
            for (g, &e) in out.iter_mut().zip(&self.exponents[j]) {
                *g += e * m;
            }
        }
    }
}

struct Ascent {
    value: f64,
    point: Vec<f64>,
    converged: bool,
}

/// Multiplicative ascent `u_i ← total · u_i∂_iF / Σ_j u_j∂_jF` with
/// backtracking along the segment towards the update. The update
/// direction always has nonnegative directional derivative
/// (Cauchy-Schwarz), so the accepted iterates are monotone.
fn ascend(poly: &Posynomial, mut u: Vec<f64>, total: f64, opts: &BallOptions) -> Ascent {
    let n = poly.n;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut value = poly.value(&u);
    let mut history = std::collections::VecDeque::with_capacity(opts.window + 1);
    history.push_back(value);
    for _ in 0..opts.max_iter {
        poly.responsibilities(&u, &mut grad);
        let norm: f64 = grad.iter().sum();
        if !(norm > 0.0) {
            return Ascent { value, point: u, converged: true };
        }
        let target: Vec<f64> = grad.iter().map(|g| total * g / norm).collect();
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..n {
                trial[i] = (1.0 - step) * u[i] + step * target[i];
            }
            let v = poly.value(&trial);
            if v >= value {
                if v == value && step < 1.0 {
                    break;
                }
                accepted = true;
                value = v;
                std::mem::swap(&mut u, &mut trial);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Ascent { value, point: u, converged: true };
        }
        history.push_back(value);
        if history.len() > opts.window {
            let old = history.pop_front().unwrap();
            if value - old <= opts.rel_tol * value.abs() {
                return Ascent { value, point: u, converged: true };
            }
        }
    }
    Ascent { value, point: u, converged: false }
}

fn start_points(poly: &Posynomial, total: f64, opts: &BallOptions) -> Vec<Vec<f64>> {
    let n = poly.n;
    let centroid = vec![total / n as f64; n];
    let mut starts = vec![centroid.clone()];
    // α-proportional points, the AM-GM maximizers of single terms, nudged
    // into the interior; largest coefficients first
    let mut order: Vec<usize> = (0..poly.coeffs.len()).collect();
    order.sort_by(|&a, &b| poly.coeffs[b].total_cmp(&poly.coeffs[a]).then(a.cmp(&b)));
    for &j in order.iter().take(5) {
        let e = &poly.exponents[j];
        let s: f64 = e.iter().sum();
        let point: Vec<f64> = e.iter().zip(&centroid).map(|(ei, c)| 0.9 * total * ei / s + 0.1 * c).collect();
        if !starts.contains(&point) {
            starts.push(point);
        }
    }
    for i in 0..n {
        let mut corner = vec![0.0; n];
        corner[i] = total;
        starts.push(corner);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.starts {
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = w.iter().sum();
        starts.push(w.iter().map(|x| total * x / s).collect());
    }
    starts.truncate(opts.starts.max(1));
    starts
}

/// Closed-form maxima where they exist: a single term (weighted AM-GM) and
/// purely linear families.
fn closed_form_ball(poly: &Posynomial, total: f64, p: f64, t: f64) -> Option<(f64, Vec<f64>)> {
    if poly.coeffs.len() == 1 {
        let e = &poly.exponents[0];
        let s: f64 = e.iter().sum();
        let u: Vec<f64> = e.iter().map(|ei| total * ei / s).collect();
        return Some((poly.value(&u), u));
    }
    let degree_one = poly.exponents.iter().all(|e| e.iter().filter(|&&x| x != 0.0).count() == 1);
    if !degree_one {
        return None;
    }
    let gamma = p / t;
    let mut weight = vec![0.0; poly.n];
    for (c, e) in poly.coeffs.iter().zip(&poly.exponents) {
        let i = e.iter().position(|&x| x != 0.0)?;
        if (e[i] - gamma).abs() > 0.0 {
            return None;
        }
        weight[i] += c;
    }
    if gamma < 1.0 {
        // Lagrange: u_i ∝ c_i^{1/(1-γ)}
        let powered: Vec<f64> = weight.iter().map(|c| c.powf(1.0 / (1.0 - gamma))).collect();
        let s: f64 = powered.iter().sum();
        let u: Vec<f64> = powered.iter().map(|w| total * w / s).collect();
        let value = total.powf(gamma) * s.powf(1.0 - gamma);
        Some((value, u))
    } else {
        // convex in u: a vertex wins
        let (best, c) = weight
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
        let mut u = vec![0.0; poly.n];
        u[best] = total;
        Some((c * total.powf(gamma), u))
    }
}

pub fn powered_majorant_ball(f: &CoefficientFamily, p: f64, t: f64, r: f64, opts: &BallOptions) -> Result<MajorantValue> {
    check_radius(p, r)?;
    if !(t >= 1.0) {
        return domain(format!("ball exponent t must be >= 1, got {t}"));
    }
    if t.is_infinite() {
        return powered_majorant_polydisk(f, p, r);
    }
    let tail = tail_share(f, p, r)?;
    let n = f.dimension();
    let poly = Posynomial::from_family(f, p, t);
    let total = r.powf(t);
    let finish = |value: f64, u: Vec<f64>, exact: bool| MajorantValue {
        value: value + tail,
        exactness: if !f.is_complete() {
            Exactness::LowerBound
        } else if exact && tail == 0.0 {
            Exactness::Exact
        } else {
            Exactness::Optimizer
        },
        maximizer: Some(u.iter().map(|x| x.powf(1.0 / t)).collect()),
        tail_enclosure: tail,
    };
    if poly.coeffs.is_empty() || total == 0.0 {
        return Ok(finish(0.0, vec![0.0; n], true));
    }
    if let Some((value, u)) = closed_form_ball(&poly, total, p, t) {
        return Ok(finish(value, u, true));
    }
    let starts = start_points(&poly, total, opts);
    let runs: Vec<Ascent> = starts.into_par_iter().map(|u| ascend(&poly, u, total, opts)).collect();
    if runs.iter().all(|a| !a.converged) {
        let best = runs.iter().map(|a| a.value).fold(0.0, f64::max);
        return Err(Error::NonConvergence { best });
    }
    let best = runs
        .into_iter()
        .reduce(|a, b| match a.value.total_cmp(&b.value) {
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Equal => {
                if b.point.iter().zip(&a.point).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne())
                    == Some(std::cmp::Ordering::Greater)
                {
                    b
                } else {
                    a
                }
            }
        })
        .expect("at least one start");
    Ok(finish(best.value, best.point, false))
}

/// Objective `Σ ‖x_α‖^p |z^α|^p` at explicit moduli `z`, for checking
/// reported maximizers.
pub fn powered_sum_at(f: &CoefficientFamily, p: f64, z: &[f64]) -> f64 {
    f.entries()
        .iter()
        .filter(|(a, _)| a.degree() > 0)
        .map(|(a, &x)| (x * a.monomial(z)).powf(p))
        .sum()
}

/// `(Σ_{|α|=k} ‖x_α‖²)^{1/2}`, with the tail supplying degrees above `K`.
pub fn per_degree_l2(f: &CoefficientFamily, k: u32) -> f64 {
    if k <= f.truncation_degree() {
        let s: f64 = f.entries().iter().filter(|(a, _)| a.degree() == k).map(|(_, &v)| v * v).sum();
        return s.sqrt();
    }
    match f.tail() {
        Some(t) => {
            let coeff = t.scale * t.parameter.powi(k as i32);
            (count_f64(f.dimension(), k)).sqrt() * coeff
        }
        None => 0.0,
    }
}

/// Polynomial with complex coefficients, for sup-norm sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPolynomial {
    pub dimension: usize,
    pub terms: Vec<(MultiIndex, Complex64)>,
}

impl SignedPolynomial {
    /// Coefficients taken as the (nonnegative) stored norms.
    pub fn from_family(f: &CoefficientFamily) -> Self {
        Self {
            dimension: f.dimension(),
            terms: f.entries().iter().map(|(a, &v)| (a.clone(), Complex64::new(v, 0.0))).collect(),
        }
    }

    /// `(a - z)/(1 - a z) = a - (1-a²) Σ_{k>=1} a^{k-1} z^k`, truncated.
    pub fn moebius(a: f64, truncation: u32) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return domain(format!("Möbius parameter must lie in (0,1), got {a}"));
        }
        let mut terms = vec![(MultiIndex::zero(1), Complex64::new(a, 0.0))];
        for k in 1..=truncation {
            let c = -(1.0 - a * a) * a.powi(k as i32 - 1);
            terms.push((MultiIndex::new(vec![k])?, Complex64::new(c, 0.0)));
        }
        Ok(Self { dimension: 1, terms })
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(a, c)| {
                a.parts()
                    .iter()
                    .zip(z)
                    .filter(|(&e, _)| e > 0)
                    .fold(*c, |acc, (&e, zi)| acc * zi.powu(e))
            })
            .sum()
    }
}

/// Largest `|f(z)|` over `samples` seeded uniform points of the
/// distinguished boundary: the torus for the polydisk, random moduli on
/// `Σ|z_i|^t = 1` with uniform phases for `B(l_t^n)`. Always a lower bound
/// on the sup norm.
pub fn torus_sup_lower_bound(f: &SignedPolynomial, dom: &DomainSpec, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return domain("need at least one sample");
    }
    let n = f.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..samples {
        let moduli: Vec<f64> = match dom {
            DomainSpec::Polydisk => vec![1.0; n],
            DomainSpec::LtBall { t } => {
                let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| (x / s).powf(1.0 / t)).collect()
            }
        };
        for (zi, m) in z.iter_mut().zip(&moduli) {
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            *zi = Complex64::from_polar(*m, theta);
        }
        best = best.max(f.eval(&z).norm());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Preset;

    fn idx(p: &[u32]) -> MultiIndex {
        MultiIndex::new(p.to_vec()).unwrap()
    }

    fn identity() -> CoefficientFamily {
        CoefficientFamily::explicit(1, [(idx(&[1]), 1.0)]).unwrap()
    }

    #[test]
    fn polydisk_identity() {
        for &p in &[0.5, 1.0, 2.0] {
            let m = powered_majorant_polydisk(&identity(), p, 0.6).unwrap();
            assert!((m.value - 0.6f64.powf(p)).abs() < 1e-15);
            assert_eq!(m.exactness, Exactness::Exact);
        }
    }

    #[test]
    fn polydisk_extremal_g_hits_one_at_r0() {
        for &(n, p) in &[(1usize, 1.0), (2, 1.0), (5, 0.5)] {
            let g = CoefficientFamily::build(&Preset::ExtremalG { n, p }).unwrap();
            let r0 = crate::family::one_minus_half_root(n as f64).powf(1.0 / p - 0.5);
            let m = powered_majorant_polydisk(&g, p, r0).unwrap();
            assert!((m.value - 1.0).abs() < 1e-12, "n={n} p={p}: {}", m.value);
        }
    }

    #[test]
    fn polydisk_moebius() {
        let f = CoefficientFamily::build(&Preset::Moebius { a: 0.5 }).unwrap();
        let m = powered_majorant_polydisk(&f, 1.0, 0.8).unwrap();
        assert!((m.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polydisk_rejects_bad_radius() {
        assert!(powered_majorant_polydisk(&identity(), 1.0, 1.0).is_err());
        assert!(powered_majorant_polydisk(&identity(), 0.0, 0.5).is_err());
    }

    #[test]
    fn truncated_family_reports_lower_bound() {
        let f = CoefficientFamily::build(&Preset::Moebius { a: 0.5 }).unwrap().truncate(5);
        let m = powered_majorant_polydisk(&f, 1.0, 0.8).unwrap();
        assert_eq!(m.exactness, Exactness::LowerBound);
        assert!(m.value < 1.0);
    }

    #[test]
    fn ball_single_monomial_amgm() {
        let f = CoefficientFamily::explicit(2, [(idx(&[1, 1]), 1.0)]).unwrap();
        let m = powered_majorant_ball(&f, 1.0, 2.0, 0.999_999_999_999, &BallOptions::default()).unwrap();
        assert!((m.value - 0.5).abs() < 1e-11);
        let z = m.maximizer.unwrap();
        assert!((z[0] - 0.5f64.sqrt()).abs() < 1e-11 && (z[1] - z[0]).abs() < 1e-15);
        assert_eq!(m.exactness, Exactness::Exact);
    }

    #[test]
    fn ball_degree_one_equal_coordinates() {
        let f = CoefficientFamily::explicit(3, (0..3).map(|i| (MultiIndex::unit(3, i), 1.0))).unwrap();
        let m = powered_majorant_ball(&f, 1.0, 2.0, 0.7, &BallOptions::default()).unwrap();
        assert!((m.value - 3f64.sqrt() * 0.7).abs() < 1e-14);
        // p >= t: a vertex
        let m = powered_majorant_ball(&f, 3.0, 2.0, 0.7, &BallOptions::default()).unwrap();
        assert!((m.value - 0.7f64.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn ball_optimizer_is_feasible_and_consistent() {
        let f = CoefficientFamily::explicit(
            2,
            [(idx(&[1, 0]), 0.3), (idx(&[0, 2]), 0.9), (idx(&[2, 1]), 0.5), (idx(&[1, 1]), 0.2)],
        )
        .unwrap();
        let (p, t, r) = (1.0, 1.5, 0.7);
        let m = powered_majorant_ball(&f, p, t, r, &BallOptions::default()).unwrap();
        assert_eq!(m.exactness, Exactness::Optimizer);
        let z = m.maximizer.unwrap();
        let used: f64 = z.iter().map(|x| x.powf(t)).sum();
        assert!(used <= r.powf(t) + 1e-12);
        assert!((powered_sum_at(&f, p, &z) - m.value).abs() < 1e-10);
        // the ball sits inside the polydisk
        assert!(m.value <= powered_majorant_polydisk(&f, p, r).unwrap().value);
    }

    #[test]
    fn ball_result_independent_of_thread_count() {
        let f = CoefficientFamily::explicit(
            3,
            [(idx(&[1, 0, 0]), 0.3), (idx(&[0, 2, 1]), 0.9), (idx(&[2, 1, 0]), 0.5), (idx(&[0, 0, 3]), 0.6)],
        )
        .unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| powered_majorant_ball(&f, 1.0, 2.0, 0.8, &BallOptions::default()).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn per_degree_examples() {
        let g = CoefficientFamily::build(&Preset::ExtremalG { n: 2, p: 1.0 }).unwrap();
        let v = (1.0 - 0.5f64.sqrt()).sqrt();
        assert!((per_degree_l2(&g, 1) - (2.0 * v * v).sqrt()).abs() < 1e-15);
        assert_eq!(per_degree_l2(&identity(), 1), 1.0);
        assert_eq!(per_degree_l2(&identity(), 2), 0.0);
        let m = CoefficientFamily::build(&Preset::Moebius { a: 0.5 }).unwrap();
        assert_eq!(per_degree_l2(&m, 3), 0.1875);
        assert_eq!(per_degree_l2(&m, 4), 0.09375);
        // beyond K the tail answers
        let k = 70;
        assert!((per_degree_l2(&m, k) - 0.75 * 0.5f64.powi(k as i32 - 1)).abs() < 1e-30);
    }

    #[test]
    fn torus_sampling() {
        let z = SignedPolynomial::from_family(&identity());
        let s = torus_sup_lower_bound(&z, &DomainSpec::Polydisk, 1000, 0).unwrap();
        assert!(s > 0.999 && s <= 1.0 + 1e-15);
        let m = SignedPolynomial::moebius(0.5, 64).unwrap();
        let s = torus_sup_lower_bound(&m, &DomainSpec::Polydisk, 10_000, 7).unwrap();
        assert!(s <= 1.0 + 1e-12 && s > 0.99);
        let zero = SignedPolynomial { dimension: 2, terms: vec![] };
        assert_eq!(torus_sup_lower_bound(&zero, &DomainSpec::Polydisk, 10, 0).unwrap(), 0.0);
        assert!(torus_sup_lower_bound(&zero, &DomainSpec::Polydisk, 0, 0).is_err());
        let a = torus_sup_lower_bound(&m, &DomainSpec::Polydisk, 100, 3).unwrap();
        let b = torus_sup_lower_bound(&m, &DomainSpec::Polydisk, 100, 3).unwrap();
        assert_eq!(a, b);
    }
}
