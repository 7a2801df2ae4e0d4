//! Finite-support functionals `ξ = (ξ_α)` acting on Taylor data.
//!
//! `(ξ·F)(z₀) = Σ ξ_α a_α` where `F(z) = Σ a_α (z − z₀)^α`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::poly::{Poly, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    arity: usize,
    coeffs: BTreeMap<MultiIndex, C64>,
}

impl Functional {
    pub fn new(arity: usize) -> Self {
        Functional {
            arity,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(arity: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, C64)>,
    {
        let mut f = Functional::new(arity);
        for (a, c) in terms {
            if a.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: a.arity(),
                });
            }
            *f.coeffs.entry(a).or_default() += c;
        }
        f.coeffs.retain(|_, c| *c != C64::new(0.0, 0.0));
        Ok(f)
    }

    /// Point evaluation, `ξ = δ₀`.
    pub fn dirac(arity: usize) -> Self {
        Self::coefficient(MultiIndex::zero(arity))
    }

    /// Extracts the Taylor coefficient `a_α`.
    pub fn coefficient(alpha: MultiIndex) -> Self {
        let arity = alpha.arity();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(alpha, C64::new(1.0, 0.0));
        Functional { arity, coeffs }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> C64 {
        self.coeffs.get(alpha).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `max |α|` over the support; `None` stands for `−∞` (empty support).
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.keys().map(MultiIndex::order).max()
    }

    pub fn scale(&self, s: C64) -> Functional {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out.coeffs.retain(|_, c| *c != C64::new(0.0, 0.0));
        out
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &Functional, b: C64) -> Result<Functional> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        let mut out = self.scale(a);
        for (k, c) in &other.coeffs {
            *out.coeffs.entry(k.clone()).or_default() += c * b;
        }
        out.coeffs.retain(|_, c| *c != C64::new(0.0, 0.0));
        Ok(out)
    }

    pub fn apply(&self, taylor: &TaylorData) -> Result<C64> {
        if taylor.arity() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: taylor.arity(),
            });
        }
        if let (Some(t), Some(d)) = (taylor.truncation, self.degree()) {
            if t < d {
                return Err(Error::InsufficientTruncation {
                    needed: d,
                    available: t,
                });
            }
        }
        Ok(self.coeffs.iter().map(|(a, x)| x * taylor.coeffs.coeff(a)).sum())
    }

    /// `(ξ·p)(z)` for a polynomial given by its coefficients at the origin.
    ///
    /// Same value as recentering `p` to `z` and calling [`apply`](Self::apply),
    /// without materializing the shifted polynomial.
    pub fn apply_poly_at(&self, p: &Poly, z: &[C64]) -> Result<C64> {
        if p.arity() != self.arity || z.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: if p.arity() != self.arity { p.arity() } else { z.len() },
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for (alpha, x) in &self.coeffs {
            let mut s = C64::new(0.0, 0.0);
            for (gamma, b) in p.terms() {
                if let Some(rest) = gamma.checked_sub(alpha) {
                    let mut m = b * gamma.binomial(alpha);
                    for (zi, &k) in z.iter().zip(rest.entries()) {
                        if k > 0 {
                            m *= zi.powu(k);
                        }
                    }
                    s += m;
                }
            }
            acc += x * s;
        }
        Ok(acc)
    }

    /// `Σ |ξ_α| ρ^{|α|}`.
    pub fn norm_at_rho(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        Ok(self
            .coeffs
            .iter()
            .map(|(a, c)| c.norm() * rho.powi(a.order() as i32))
            .sum())
    }

    /// Upper bound `M/(ρR)^k · Σ|ξ_α|ρ^{|α|}` for the tail
    /// `Σ_{|α|>k} |ξ_α| M / R^{|α|}`.
    pub fn tail_bound(&self, k: usize, rho: f64, radius: f64, m: f64) -> Result<f64> {
        if !(radius > 0.0) || !(m > 0.0) {
            return Err(Error::invalid("R and M must be positive"));
        }
        if !(rho > 0.0) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        let contraction = rho * radius;
        if contraction <= 1.0 {
            return Err(Error::NonContractive(contraction));
        }
        Ok(m / contraction.powi(k as i32) * self.norm_at_rho(rho)?)
    }
}

/// Taylor coefficients `a_α = F^{(α)}(z₀)/α!` of a function at `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorData {
    pub center: Vec<C64>,
    /// Coefficients in powers of `z − center`.
    pub coeffs: Poly,
    /// `None` for an exact polynomial; otherwise all coefficients of order
    /// `≤ t` are exact and the rest are unknown.
    pub truncation: Option<usize>,
}

impl TaylorData {
    pub fn polynomial(center: Vec<C64>, coeffs: Poly) -> Result<Self> {
        if center.len() != coeffs.arity() {
            return Err(Error::ArityMismatch {
                expected: coeffs.arity(),
                found: center.len(),
            });
        }
        Ok(TaylorData {
            center,
            coeffs,
            truncation: None,
        })
    }

    pub fn truncated(center: Vec<C64>, coeffs: Poly, degree: usize) -> Result<Self> {
        let mut t = Self::polynomial(center, coeffs)?;
        t.truncation = Some(degree);
        Ok(t)
    }

    /// Taylor data at `center` of a polynomial given at the origin.
    pub fn of_poly_at(p: &Poly, center: &[C64]) -> Result<Self> {
        let origin = vec![C64::new(0.0, 0.0); p.arity()];
        Self::polynomial(center.to_vec(), p.recenter(&origin, center)?)
    }

    pub fn arity(&self) -> usize {
        self.coeffs.arity()
    }

    /// Exact binomial Taylor shift to a new center.
    pub fn recenter(&self, to: &[C64]) -> Result<TaylorData> {
        if self.truncation.is_some() {
            return Err(Error::invalid("recentering requires polynomial Taylor data"));
        }
        Self::polynomial(to.to_vec(), self.coeffs.recenter(&self.center, to)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionalRepr {
    arity: usize,
    terms: Vec<FunctionalTermRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionalTermRepr {
    alpha: Vec<u32>,
    re: f64,
    #[serde(default)]
    im: f64,
}

impl Serialize for Functional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionalRepr {
            arity: self.arity,
            terms: self
                .coeffs
                .iter()
                .map(|(a, c)| FunctionalTermRepr {
                    alpha: a.entries().to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Functional {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FunctionalRepr::deserialize(d)?;
        Functional::from_terms(
            r.arity,
            r.terms
                .into_iter()
                .map(|t| (MultiIndex::new(t.alpha), C64::new(t.re, t.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn poly1(coeffs: &[f64]) -> Poly {
        Poly::from_terms(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &v)| (MultiIndex::from([k as u32]), c(v, 0.0))),
        )
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let f = TaylorData::polynomial(vec![c(0.0, 0.0)], poly1(&[3.0, 2.0])).unwrap();
        assert_eq!(Functional::dirac(1).apply(&f).unwrap(), c(3.0, 0.0));

        let g = TaylorData::polynomial(vec![c(0.0, 0.0)], poly1(&[3.0, 2.0, 5.0])).unwrap();
        let d1 = Functional::coefficient(MultiIndex::from([1]));
        assert_eq!(d1.apply(&g).unwrap(), c(2.0, 0.0));

        // ξ_{00}·1 + ξ_{11}·4 with ξ_{11} = 2i
        let xi = Functional::from_terms(
            2,
            [
                (MultiIndex::from([0, 0]), c(1.0, 0.0)),
                (MultiIndex::from([1, 1]), c(0.0, 2.0)),
            ],
        )
        .unwrap();
        let p = Poly::from_terms(
            2,
            [
                (MultiIndex::from([0, 0]), c(1.0, 0.0)),
                (MultiIndex::from([1, 1]), c(4.0, 0.0)),
            ],
        )
        .unwrap();
        let t = TaylorData::polynomial(vec![c(0.0, 0.0); 2], p).unwrap();
        assert_eq!(xi.apply(&t).unwrap(), c(1.0, 8.0));
    }

    #[test]
    fn apply_errors() {
        let t = TaylorData::polynomial(vec![c(0.0, 0.0)], poly1(&[1.0])).unwrap();
        assert!(matches!(
            Functional::dirac(2).apply(&t),
            Err(Error::ArityMismatch { .. })
        ));
        let tr = TaylorData::truncated(vec![c(0.0, 0.0)], poly1(&[1.0, 1.0]), 1).unwrap();
        let d3 = Functional::coefficient(MultiIndex::from([3]));
        assert!(matches!(
            d3.apply(&tr),
            Err(Error::InsufficientTruncation {
                needed: 3,
                available: 1
            })
        ));
        assert!(Functional::coefficient(MultiIndex::from([1])).apply(&tr).is_ok());
    }

    #[test]
    fn recenter_examples() {
        let z2 = TaylorData::polynomial(vec![c(0.0, 0.0)], poly1(&[0.0, 0.0, 1.0])).unwrap();
        let at1 = z2.recenter(&[c(1.0, 0.0)]).unwrap();
        assert_eq!(at1.coeffs, poly1(&[1.0, 2.0, 1.0]));

        let five = TaylorData::polynomial(vec![c(0.0, 0.0)], poly1(&[5.0])).unwrap();
        assert_eq!(five.recenter(&[c(-3.0, 7.0)]).unwrap().coeffs, poly1(&[5.0]));

        let tr = TaylorData::truncated(vec![c(0.0, 0.0)], poly1(&[1.0]), 3).unwrap();
        assert!(tr.recenter(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn recenter_bivariate_matches_pointwise() {
        // z₁z₂ at (0,0) moved to (1,0) is (1 + u₁)u₂
        let p = Poly::monomial(MultiIndex::from([1, 1]), c(1.0, 0.0));
        let t = TaylorData::polynomial(vec![c(0.0, 0.0); 2], p.clone()).unwrap();
        let s = t.recenter(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s.coeffs.num_terms(), 2);
        assert_eq!(s.coeffs.coeff(&MultiIndex::from([0, 1])), c(1.0, 0.0));
        assert_eq!(s.coeffs.coeff(&MultiIndex::from([1, 1])), c(1.0, 0.0));
        assert_eq!(s.coeffs.coeff(&MultiIndex::from([0, 0])), c(0.0, 0.0));
        // pointwise check at 10 pseudo-random points
        for k in 0..10 {
            let x = [c(0.3 * k as f64 - 1.0, 0.17 * k as f64), c(0.5 - 0.11 * k as f64, -0.2)];
            let u = [x[0] - c(1.0, 0.0), x[1]];
            let lhs = p.eval(&x).unwrap();
            let rhs = s.coeffs.eval(&u).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_poly_at_matches_recentered_apply() {
        let p = Poly::from_terms(
            2,
            [
                (MultiIndex::from([2, 1]), c(1.0, -1.0)),
                (MultiIndex::from([0, 3]), c(0.5, 0.0)),
                (MultiIndex::from([1, 0]), c(0.0, 2.0)),
            ],
        )
        .unwrap();
        let xi = Functional::from_terms(
            2,
            [
                (MultiIndex::from([0, 0]), c(1.0, 0.0)),
                (MultiIndex::from([1, 1]), c(0.2, 0.3)),
                (MultiIndex::from([0, 2]), c(-1.0, 0.0)),
            ],
        )
        .unwrap();
        let z = [c(0.3, -0.1), c(-0.2, 0.4)];
        let direct = xi.apply_poly_at(&p, &z).unwrap();
        let via = xi.apply(&TaylorData::of_poly_at(&p, &z).unwrap()).unwrap();
        assert!((direct - via).norm() < 1e-13);
    }

    #[test]
    fn norm_at_rho_examples() {
        assert_eq!(Functional::dirac(1).norm_at_rho(7.0).unwrap(), 1.0);
        let xi = Functional::from_terms(
            1,
            [
                (MultiIndex::from([1]), c(2.0, 0.0)),
                (MultiIndex::from([3]), c(1.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(xi.norm_at_rho(2.0).unwrap(), 12.0);
        assert_eq!(Functional::new(3).norm_at_rho(0.5).unwrap(), 0.0);
        assert!(xi.norm_at_rho(0.0).is_err());
        assert_eq!(Functional::new(1).degree(), None);
    }

    #[test]
    fn tail_bound_examples() {
        let xi = Functional::coefficient(MultiIndex::from([5]));
        let b = xi.tail_bound(4, 1.0, 2.0, 1.0).unwrap();
        assert!((b - 1.0 / 16.0).abs() < 1e-15);
        assert!(1.0 / 32.0 <= b);
        assert!(matches!(xi.tail_bound(4, 0.5, 2.0, 1.0), Err(Error::NonContractive(_))));
        let d3 = Functional::coefficient(MultiIndex::from([3]));
        assert!(d3.tail_bound(3, 2.0, 1.0, 1.0).unwrap() >= 0.0);
        let b1 = d3.tail_bound(2, 2.0, 1.0, 1.0).unwrap();
        let b2 = d3.tail_bound(4, 2.0, 1.0, 1.0).unwrap();
        assert!((b1 / b2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let xi = Functional::from_terms(1, [(MultiIndex::from([1]), c(2.0, -1.0))]).unwrap();
        let s = serde_json::to_string(&xi).unwrap();
        assert_eq!(s, r#"{"arity":1,"terms":[{"alpha":[1],"re":2.0,"im":-1.0}]}"#);
        let back: Functional = serde_json::from_str(&s).unwrap();
        assert_eq!(back, xi);
    }
}
