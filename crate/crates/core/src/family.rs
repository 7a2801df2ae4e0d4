//! Functional-valued maps `w ↦ ξ(w)` with polynomial coefficients `ξ_α(w)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::multi_index::MultiIndex;
use crate::poly::{PolyW, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalFamily {
    z_arity: usize,
    w_arity: usize,
    terms: BTreeMap<MultiIndex, PolyW>,
}

impl FunctionalFamily {
    pub fn new(z_arity: usize, w_arity: usize) -> Self {
        FunctionalFamily {
            z_arity,
            w_arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(z_arity: usize, w_arity: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, PolyW)>,
    {
        let mut fam = FunctionalFamily::new(z_arity, w_arity);
        for (alpha, p) in terms {
            if alpha.arity() != z_arity {
                return Err(Error::ArityMismatch {
                    expected: z_arity,
                    found: alpha.arity(),
                });
            }
            if p.arity() != w_arity {
                return Err(Error::ArityMismatch {
                    expected: w_arity,
                    found: p.arity(),
                });
            }
            let slot = fam.terms.entry(alpha).or_insert_with(|| PolyW::zero(w_arity));
            *slot = &*slot + &p;
        }
        fam.terms.retain(|_, p| !p.is_zero());
        Ok(fam)
    }

    /// The family that is `xi` for every `w`.
    pub fn constant(xi: &Functional, w_arity: usize) -> Self {
        let terms = xi
            .terms()
            .map(|(a, c)| (a.clone(), PolyW::constant(w_arity, *c)))
            .collect();
        FunctionalFamily {
            z_arity: xi.arity(),
            w_arity,
            terms,
        }
    }

    pub fn z_arity(&self) -> usize {
        self.z_arity
    }

    pub fn w_arity(&self) -> usize {
        self.w_arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &PolyW)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Option<&PolyW> {
        self.terms.get(alpha)
    }

    /// `max |α|` over the support.
    pub fn z_degree(&self) -> Option<usize> {
        self.terms.keys().map(MultiIndex::order).max()
    }

    pub fn eval(&self, w: &[C64]) -> Result<Functional> {
        if w.len() != self.w_arity {
            return Err(Error::ArityMismatch {
                expected: self.w_arity,
                found: w.len(),
            });
        }
        Functional::from_terms(
            self.z_arity,
            self.terms.iter().map(|(a, p)| (a.clone(), p.eval_unchecked(w))),
        )
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &FunctionalFamily, b: C64) -> Result<Self> {
        if self.z_arity != other.z_arity || self.w_arity != other.w_arity {
            return Err(Error::ArityMismatch {
                expected: self.z_arity,
                found: other.z_arity,
            });
        }
        let lhs = self.terms.iter().map(|(k, p)| (k.clone(), p.scale(a)));
        let rhs = other.terms.iter().map(|(k, p)| (k.clone(), p.scale(b)));
        FunctionalFamily::from_terms(self.z_arity, self.w_arity, lhs.chain(rhs))
    }

    /// For each `ρ`, the supremum over the grid of `Σ |ξ_α(w)| ρ^{|α|}`.
    ///
    /// Always finite: the support in `α` is finite and each coefficient is a
    /// polynomial.
    pub fn lub_check(&self, grid: &[Vec<C64>], rhos: &[f64]) -> Result<Vec<LubRow>> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let evaluated = grid.iter().map(|w| self.eval(w)).collect::<Result<Vec<_>>>()?;
        rhos.iter()
            .map(|&rho| {
                let mut sup = 0.0f64;
                let mut argmax = 0;
                for (i, xi) in evaluated.iter().enumerate() {
                    let v = xi.norm_at_rho(rho)?;
                    if v > sup {
                        sup = v;
                        argmax = i;
                    }
                }
                Ok(LubRow { rho, sup, argmax })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LubRow {
    pub rho: f64,
    pub sup: f64,
    /// Grid index attaining the supremum.
    pub argmax: usize,
}

/// A family as seen by the fiberwise harness: either the holomorphic family
/// itself, or the negative control evaluating `ξ_α(w̄)`.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySource {
    Holomorphic(FunctionalFamily),
    AntiHolomorphic(FunctionalFamily),
}

/// Wrap a family as the non-holomorphic control `w ↦ ξ(w̄)`.
pub fn anti_holomorphic_control(fam: FunctionalFamily) -> FamilySource {
    FamilySource::AntiHolomorphic(fam)
}

impl FamilySource {
    pub fn family(&self) -> &FunctionalFamily {
        match self {
            FamilySource::Holomorphic(f) | FamilySource::AntiHolomorphic(f) => f,
        }
    }

    pub fn is_holomorphic(&self) -> bool {
        matches!(self, FamilySource::Holomorphic(_))
    }

    pub fn eval(&self, w: &[C64]) -> Result<Functional> {
        match self {
            FamilySource::Holomorphic(f) => f.eval(w),
            FamilySource::AntiHolomorphic(f) => {
                let conj: Vec<C64> = w.iter().map(|x| x.conj()).collect();
                f.eval(&conj)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct FamilyRepr {
    z_arity: usize,
    w_arity: usize,
    terms: Vec<FamilyTermRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyTermRepr {
    alpha: Vec<u32>,
    poly: Vec<PolyWTermRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyWTermRepr {
    beta: Vec<u32>,
    re: f64,
    #[serde(default)]
    im: f64,
}

impl Serialize for FunctionalFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyRepr {
            z_arity: self.z_arity,
            w_arity: self.w_arity,
            terms: self
                .terms
                .iter()
                .map(|(a, p)| FamilyTermRepr {
                    alpha: a.entries().to_vec(),
                    poly: p
                        .terms()
                        .map(|(b, c)| PolyWTermRepr {
                            beta: b.entries().to_vec(),
                            re: c.re,
                            im: c.im,
                        })
                        .collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FunctionalFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FamilyRepr::deserialize(d)?;
        let m = r.w_arity;
        let terms = r
            .terms
            .into_iter()
            .map(|t| {
                let p = PolyW::from_terms(
                    m,
                    t.poly
                        .into_iter()
                        .map(|q| (MultiIndex::new(q.beta), C64::new(q.re, q.im))),
                )?;
                Ok((MultiIndex::new(t.alpha), p))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        FunctionalFamily::from_terms(r.z_arity, m, terms).map_err(serde::de::Error::custom)
    }
}
