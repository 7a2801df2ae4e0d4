//! Multi-indices `α ∈ ℕⁿ` with a graded ordering.
//!
//! Ordering is by total degree first; within a degree the index with the
//! larger leading exponent comes first, so for `n = 2` the order starts
//! `1, z₁, z₂, z₁², z₁z₂, z₂², …`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(arity: usize) -> Self {
        MultiIndex(vec![0; arity])
    }

    /// The unit index `e_i`.
    pub fn unit(arity: usize, i: usize) -> Self {
        let mut e = vec![0; arity];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// `|α| = Σ αᵢ`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Componentwise `self ≥ other`.
    pub fn dominates(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference; `None` unless `self` dominates `other`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !self.dominates(other) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// Concatenate `(α, β)`.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    /// Split into the first `k` entries and the rest.
    pub fn split_at(&self, k: usize) -> (MultiIndex, MultiIndex) {
        let (a, b) = self.0.split_at(k);
        (MultiIndex(a.to_vec()), MultiIndex(b.to_vec()))
    }

    /// `Π C(γᵢ, αᵢ)` for `γ = self`.
    pub fn binomial(&self, alpha: &MultiIndex) -> f64 {
        self.0.iter().zip(&alpha.0).map(|(&g, &a)| binomial(g, a)).product()
    }

    /// All indices of the given arity with `|α| ≤ max_order`, in graded order.
    pub fn all_up_to(arity: usize, max_order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(count_up_to(arity, max_order));
        for d in 0..=max_order {
            out.extend(Self::all_of_order(arity, d));
        }
        out
    }

    /// All indices with `|α| = order`, in graded order.
    pub fn all_of_order(arity: usize, order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        if arity == 0 {
            if order == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        let mut cur = vec![0u32; arity];
        fill(&mut cur, 0, order as u32, &mut out);
        out
    }

    /// All indices with `αᵢ ≤ caps[i]`, sorted in graded order.
    pub fn box_indices(caps: &[u32]) -> Vec<MultiIndex> {
        let mut out = vec![Vec::<u32>::new()];
        for &c in caps {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..=c).map(move |k| {
                        let mut w = v.clone();
                        w.push(k);
                        w
                    })
                })
                .collect();
        }
        let mut idx: Vec<MultiIndex> = out.into_iter().map(MultiIndex).collect();
        idx.sort();
        idx
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        fill(cur, pos + 1, remaining - k, out);
    }
    cur[pos] = 0;
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const K: usize> From<[u32; K]> for MultiIndex {
    fn from(v: [u32; K]) -> Self {
        MultiIndex(v.to_vec())
    }
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc.round()
}

/// Number of monomials of degree `≤ d` in `n` variables, `C(d + n, n)`.
pub fn count_up_to(n: usize, d: usize) -> usize {
    binomial((d + n) as u32, n as u32) as usize
}
