//! Sparse multivariate polynomials with complex coefficients.
//!
//! One type serves every polynomial in the crate: functions of `z`, the
//! `PolyW` coefficients depending on the parameter `w`, and joint
//! polynomials in `(z, w)` where the first `n` variables are `z`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    arity: usize,
    terms: BTreeMap<MultiIndex, C64>,
}

/// Polynomial in the parameter `w`.
pub type PolyW = Poly;

impl Poly {
    pub fn zero(arity: usize) -> Self {
        Poly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: C64) -> Self {
        Self::monomial(MultiIndex::zero(arity), c)
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, C64::new(1.0, 0.0))
    }

    pub fn monomial(exp: MultiIndex, c: C64) -> Self {
        let arity = exp.arity();
        let mut terms = BTreeMap::new();
        if c != C64::new(0.0, 0.0) {
            terms.insert(exp, c);
        }
        Poly { arity, terms }
    }

    /// The coordinate function `x_i`.
    pub fn var(arity: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(arity, i), C64::new(1.0, 0.0))
    }

    pub fn from_terms<I>(arity: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, C64)>,
    {
        let mut p = Poly::zero(arity);
        for (e, c) in terms {
            if e.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: e.arity(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &MultiIndex) -> C64 {
        self.terms.get(exp).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, exp: MultiIndex, c: C64) {
        let e = self.terms.entry(exp.clone()).or_default();
        *e += c;
        if *e == C64::new(0.0, 0.0) {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::order).max()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut out = Poly::zero(self.arity);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn eval(&self, x: &[C64]) -> Result<C64> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for (xi, &k) in x.iter().zip(e.entries()) {
                if k > 0 {
                    m *= xi.powu(k);
                }
            }
            acc += m;
        }
        acc
    }

    /// Coefficientwise comparison relative to the larger coefficient scale.
    pub fn approx_eq(&self, other: &Poly, tol: f64) -> bool {
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            return true;
        }
        (self - other).max_abs() <= tol * scale
    }

    /// Drop coefficients with `|c| ≤ tol · max|c|`.
    pub fn cleaned(&self, tol: f64) -> Poly {
        let cut = tol * self.max_abs();
        Poly {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > cut)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Expansion of `Π (xᵢ − cᵢ)^{αᵢ}` in powers of `x`.
    pub fn shifted_monomial(exp: &MultiIndex, center: &[C64]) -> Poly {
        let arity = exp.arity();
        let mut out = Poly::one(arity);
        for (i, &k) in exp.entries().iter().enumerate() {
            if k == 0 {
                continue;
            }
            let lin = &Poly::var(arity, i) - &Poly::constant(arity, center[i]);
            let mut pw = Poly::one(arity);
            for _ in 0..k {
                pw = &pw * &lin;
            }
            out = &out * &pw;
        }
        out
    }

    /// Taylor coefficients at `to` of the polynomial whose coefficients are
    /// given at `from`: `Σ a_γ (x − from)^γ = Σ b_α (x − to)^α`.
    pub fn recenter(&self, from: &[C64], to: &[C64]) -> Result<Poly> {
        if from.len() != self.arity || to.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: from.len().min(to.len()),
            });
        }
        let delta: Vec<C64> = to.iter().zip(from).map(|(t, f)| t - f).collect();
        let mut out = Poly::zero(self.arity);
        for (gamma, a) in &self.terms {
            // (u + δ)^γ = Σ_{α ≤ γ} C(γ, α) δ^{γ−α} u^α
            let mut parts: Vec<Vec<(u32, C64)>> = Vec::with_capacity(self.arity);
            for (i, &g) in gamma.entries().iter().enumerate() {
                let mut row = Vec::with_capacity(g as usize + 1);
                for k in 0..=g {
                    let c = crate::multi_index::binomial(g, k) * delta[i].powu(g - k);
                    row.push((k, c));
                }
                parts.push(row);
            }
            let mut acc: Vec<(Vec<u32>, C64)> = vec![(Vec::new(), *a)];
            for row in &parts {
                let mut next = Vec::with_capacity(acc.len() * row.len());
                for (e, c) in &acc {
                    for (k, ck) in row {
                        if *ck == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut e2 = e.clone();
                        e2.push(*k);
                        next.push((e2, c * ck));
                    }
                }
                acc = next;
            }
            for (e, c) in acc {
                out.add_term(MultiIndex::new(e), c);
            }
        }
        Ok(out)
    }

    /// Substitute values for the trailing `values.len()` variables.
    pub fn specialize_tail(&self, values: &[C64]) -> Result<Poly> {
        let m = values.len();
        if m > self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: m,
            });
        }
        let n = self.arity - m;
        let mut out = Poly::zero(n);
        for (e, c) in &self.terms {
            let (head, tail) = e.split_at(n);
            let mut v = *c;
            for (x, &k) in values.iter().zip(tail.entries()) {
                if k > 0 {
                    v *= x.powu(k);
                }
            }
            out.add_term(head, v);
        }
        Ok(out)
    }

    /// View a polynomial in `(z, w)` as a polynomial in the first `n`
    /// variables with coefficients in the remaining ones.
    pub fn split_head(&self, n: usize) -> BTreeMap<MultiIndex, PolyW> {
        let m = self.arity - n;
        let mut out: BTreeMap<MultiIndex, PolyW> = BTreeMap::new();
        for (e, c) in &self.terms {
            let (head, tail) = e.split_at(n);
            out.entry(head).or_insert_with(|| Poly::zero(m)).add_term(tail, *c);
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Drop every term whose order in the first `n` variables is `≥ order`.
    pub fn truncate_head(&self, n: usize, order: usize) -> Poly {
        Poly {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.entries()[..n].iter().map(|&k| k as usize).sum::<usize>() < order)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// True if any term involves one of the trailing `m` variables.
    pub fn depends_on_tail(&self, m: usize) -> bool {
        let n = self.arity - m;
        self.terms.keys().any(|e| e.entries()[n..].iter().any(|&k| k > 0))
    }

    /// Indices of the variables that actually occur.
    pub fn support_vars(&self) -> Vec<usize> {
        (0..self.arity)
            .filter(|&i| self.terms.keys().any(|e| e.get(i) > 0))
            .collect()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.arity, rhs.arity, "polynomial arity mismatch");
        let mut acc: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                *acc.entry(ea.add(eb)).or_default() += ca * cb;
            }
        }
        acc.retain(|_, c| *c != C64::new(0.0, 0.0));
        Poly {
            arity: self.arity,
            terms: acc,
        }
    }
}

/// JSON form: `{"arity": k, "terms": [{"exp": [...], "re": .., "im": ..}]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRepr {
    arity: usize,
    terms: Vec<PolyTermRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyTermRepr {
    exp: Vec<u32>,
    re: f64,
    #[serde(default)]
    im: f64,
}

impl Serialize for Poly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| PolyTermRepr {
                    exp: e.entries().to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PolyRepr::deserialize(d)?;
        Poly::from_terms(
            r.arity,
            r.terms
                .into_iter()
                .map(|t| (MultiIndex::new(t.exp), C64::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Term of a joint polynomial in `(z, w)`, `{"alpha": [...], "beta": [...], "re", "im"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTerm {
    pub alpha: Vec<u32>,
    #[serde(default)]
    pub beta: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Build a joint polynomial of arity `n + m` from `(alpha, beta)` terms.
pub fn joint_from_terms(n: usize, m: usize, terms: &[JointTerm]) -> Result<Poly> {
    let mut p = Poly::zero(n + m);
    for t in terms {
        if t.alpha.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                found: t.alpha.len(),
            });
        }
        let beta = if t.beta.is_empty() { vec![0; m] } else { t.beta.clone() };
        if beta.len() != m {
            return Err(Error::ArityMismatch {
                expected: m,
                found: beta.len(),
            });
        }
        let e = MultiIndex::new(t.alpha.clone()).concat(&MultiIndex::new(beta));
        p.add_term(e, C64::new(t.re, t.im));
    }
    Ok(p)
}

pub fn joint_to_terms(p: &Poly, n: usize) -> Vec<JointTerm> {
    p.terms()
        .map(|(e, c)| {
            let (a, b) = e.split_at(n);
            JointTerm {
                alpha: a.entries().to_vec(),
                beta: b.entries().to_vec(),
                re: c.re,
                im: c.im,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn arithmetic_and_eval() {
        let z = Poly::var(2, 0);
        let w = Poly::var(2, 1);
        let g = &z - &(&w * &Poly::constant(2, c(2.0, 0.0)));
        let sq = &g * &g;
        let v = sq.eval(&[c(1.0, 1.0), c(0.5, 0.0)]).unwrap();
        let direct = (c(1.0, 1.0) - c(1.0, 0.0)).powu(2);
        assert!((v - direct).norm() < 1e-14);
        assert_eq!(sq.degree(), Some(2));
        assert!((&sq - &sq).is_zero());
    }

    #[test]
    fn recenter_square() {
        // z² at 0 viewed at 1: (1 + u)² = 1 + 2u + u²
        let p = Poly::monomial(MultiIndex::from([2]), c(1.0, 0.0));
        let q = p.recenter(&[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap();
        assert_eq!(q.coeff(&MultiIndex::from([0])), c(1.0, 0.0));
        assert_eq!(q.coeff(&MultiIndex::from([1])), c(2.0, 0.0));
        assert_eq!(q.coeff(&MultiIndex::from([2])), c(1.0, 0.0));
    }

    #[test]
    fn split_and_specialize() {
        // z1 - w z2 with n = 2, m = 1
        let p = joint_from_terms(
            2,
            1,
            &[
                JointTerm {
                    alpha: vec![1, 0],
                    beta: vec![0],
                    re: 1.0,
                    im: 0.0,
                },
                JointTerm {
                    alpha: vec![0, 1],
                    beta: vec![1],
                    re: -1.0,
                    im: 0.0,
                },
            ],
        )
        .unwrap();
        let parts = p.split_head(2);
        assert_eq!(parts.len(), 2);
        assert_eq!(
            parts[&MultiIndex::from([0, 1])],
            Poly::monomial(MultiIndex::from([1]), c(-1.0, 0.0))
        );
        let at = p.specialize_tail(&[c(0.5, 0.0)]).unwrap();
        assert_eq!(at.coeff(&MultiIndex::from([0, 1])), c(-0.5, 0.0));
        assert!(p.depends_on_tail(1));
    }

    #[test]
    fn json_roundtrip() {
        let p = Poly::from_terms(1, [(MultiIndex::from([3]), c(1.0, -2.0))]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: Poly = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<Poly>(r#"{"arity":2,"terms":[{"exp":[1],"re":1}]}"#).is_err());
    }
}
