//! Multi-indices and the combinatorics of homogeneous monomials.
//!
//! A multi-index `α = (α_1, ..., α_n)` addresses the monomial
//! `z^α = z_1^{α_1} ... z_n^{α_n}` of total degree `|α| = Σ α_i`.
//! Counts and multinomial weights are exact; they promote to
//! [`BigUint`] wherever 64 bits are not enough.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default refusal threshold for [`enumerate`].
pub const DEFAULT_ENUMERATION_CAP: u64 = 100_000_000;

/// Ordered by degree first, then lexicographically on the parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    degree: u32,
    parts: Vec<u32>,
}

impl MultiIndex {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() {
            return domain("multi-index must have at least one part");
        }
        let degree = parts
            .iter()
            .try_fold(0u32, |acc, &a| acc.checked_add(a))
            .ok_or_else(|| Error::Overflow("multi-index degree".into()))?;
        Ok(Self { degree, parts })
    }

    /// The multi-index `(0, ..., 0)` in `n` variables.
    pub fn zero(n: usize) -> Self {
        Self { degree: 0, parts: vec![0; n.max(1)] }
    }

    /// The unit multi-index `e_i` in `n` variables.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut parts = vec![0; n];
        parts[i] = 1;
        Self { degree: 1, parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.parts.len()
    }

    /// `Π x_i^{α_i}` with the convention `0^0 = 1`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.parts
            .iter()
            .zip(x)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let parts = Vec::<u32>::deserialize(d)?;
        MultiIndex::new(parts).map_err(serde::de::Error::custom)
    }
}

/// Number of multi-indices of degree `k` in `n` variables, `C(n+k-1, k)`.
pub fn count(n: usize, k: u32) -> BigUint {
    let mut c = BigUint::one();
    let base = n as u64 - 1;
    for i in 1..=k as u64 {
        c *= base + i;
        c /= i;
    }
    c
}

/// `C(n+k-1, k)` in floating point; relative error of order `k` ulps.
pub fn count_f64(n: usize, k: u32) -> f64 {
    let base = n as f64 - 1.0;
    (1..=k).fold(1.0, |acc, i| acc * (base + i as f64) / i as f64)
}

/// All multi-indices with `|α| = k` in `n` variables, lexicographically
/// descending on the parts, refusing beyond [`DEFAULT_ENUMERATION_CAP`].
pub fn enumerate(n: usize, k: u32) -> Result<Vec<MultiIndex>> {
    enumerate_with_cap(n, k, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_with_cap(n: usize, k: u32, cap: u64) -> Result<Vec<MultiIndex>> {
    if n == 0 {
        return domain("dimension n must be at least 1");
    }
    let total = count(n, k);
    let len = match total.to_u64() {
        Some(c) if c <= cap => c as usize,
        _ => return Err(Error::Capacity { count: total.to_string(), cap }),
    };
    let mut out = Vec::with_capacity(len);
    out.extend(Compositions::new(n, k));
    debug_assert_eq!(out.len(), len);
    Ok(out)
}

/// Streaming iterator behind [`enumerate`].
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u32>>,
    degree: u32,
}

impl Compositions {
    pub fn new(n: usize, k: u32) -> Self {
        let mut first = vec![0; n.max(1)];
        first[0] = k;
        Self { current: Some(first), degree: k }
    }
}

impl Iterator for Compositions {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let parts = self.current.take()?;
        let n = parts.len();
        // successor: move one unit from the last nonzero non-final slot to
        // the slot after it, collecting everything to its right there
        if let Some(i) = (0..n - 1).rev().find(|&i| parts[i] > 0) {
            let mut next = parts.clone();
            let rest: u32 = next[i + 1..].iter().sum();
            next[i] -= 1;
            next[i + 1..].iter_mut().for_each(|a| *a = 0);
            next[i + 1] = rest + 1;
            self.current = Some(next);
        }
        Some(MultiIndex { degree: self.degree, parts })
    }
}

/// `k!/α!` as an exact machine integer.
pub fn multinomial_weight(alpha: &MultiIndex) -> Result<u128> {
    let mut acc: u128 = 1;
    let mut partial: u128 = 0;
    for &a in alpha.parts() {
        for j in 1..=a as u128 {
            partial += 1;
            // acc * partial / j stays integral at every step
            acc = acc
                .checked_mul(partial)
                .ok_or_else(|| Error::Overflow(format!("{}!/{}!", alpha.degree(), alpha)))?
                / j;
        }
    }
    Ok(acc)
}

/// `k!/α!` with arbitrary precision.
pub fn multinomial_weight_big(alpha: &MultiIndex) -> BigUint {
    let mut acc = BigUint::one();
    let mut partial: u64 = 0;
    for &a in alpha.parts() {
        for j in 1..=a as u64 {
            partial += 1;
            acc *= partial;
            acc /= j;
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountBound {
    pub count: BigUint,
    pub bound_ok: bool,
}

/// Exact count `C(n+k-1,k)` together with a check of
/// `C(n+k-1,k) <= e^k (1+n/k)^k <= (2e)^k max{1, (n/k)^k}`.
///
/// Right-hand sides are rounded upward by a few ulps before comparing, so
/// a `false` means a genuine violation rather than rounding noise. Both
/// exponentials share the same evaluation path so the `n = k` equality
/// case compares like with like.
pub fn count_and_bound(n: usize, k: u32) -> Result<CountBound> {
    if n == 0 || k == 0 {
        return domain("count bound needs n >= 1 and k >= 1");
    }
    let c = count(n, k);
    let kf = k as f64;
    let ratio = n as f64 / kf;
    let middle = (kf * (1.0 + ratio.ln_1p())).exp();
    let right = (kf * (1.0 + std::f64::consts::LN_2 + ratio.ln().max(0.0))).exp();
    let round_up = |x: f64| x * (1.0 + 8.0 * f64::EPSILON);

    let middle_up = round_up(middle);
    let first = match BigUint::from_f64(middle_up.floor()) {
        Some(bound) => c <= bound,
        None => middle_up.is_infinite(),
    };
    let second = middle <= round_up(right);
    Ok(CountBound { count: c, bound_ok: first && second })
}

/// Relative defect of `Σ_{|α|=k} (k!/α!) x^α = (Σ x_i)^k`.
pub fn multinomial_identity_residual(x: &[f64], k: u32) -> Result<f64> {
    if x.iter().any(|&v| !(v >= 0.0)) {
        return domain("multinomial identity needs nonnegative coordinates");
    }
    if k == 0 {
        return domain("degree must be at least 1");
    }
    let mut lhs = 0.0;
    for alpha in enumerate(x.len(), k)? {
        let w = multinomial_weight_big(&alpha).to_f64().unwrap_or(f64::INFINITY);
        lhs += w * alpha.monomial(x);
    }
    let rhs = x.iter().sum::<f64>().powi(k as i32);
    Ok((lhs - rhs).abs() / rhs.max(1.0))
}
