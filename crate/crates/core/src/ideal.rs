//! Jet-level descriptions of a holomorphic family of ideals `I_w`.
//!
//! `I_w` is generated by the fiber germs `F_i(·, w)`. Working modulo
//! `𝔪^N`, the space `I_w + 𝔪^N` is the column span of a matrix `A(w)` of
//! polynomials in `w`. A cofactor construction produces a polynomial matrix
//! `B(w)` with `B·A ≡ 0` whose rows are exactly the functionals cutting out
//! `I_w + 𝔪^N` on the Zariski-open set `U = {det C(w) ≠ 0}`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::family::{FamilySource, FunctionalFamily};
use crate::fiberwise::FamilyProblem;
use crate::functional::Functional;
use crate::linalg::{column_space, complete_pivots, numerical_rank, rank_gap, singular_values, CMat, CVec};
use crate::multi_index::MultiIndex;
use crate::poly::{joint_from_terms, joint_to_terms, JointTerm, Poly, PolyW, C64};
use crate::quadrature::QuadSpec;
use crate::weights::{multiplier_ideal_generators, Polydisc, WeightSpec};

/// Relative singular-value threshold for numerical ranks.
pub const RANK_TOL: f64 = 1e-9;
/// `w ∈ U` iff `|det C(w)|` exceeds this fraction of the Hadamard bound.
pub const DET_TOL: f64 = 1e-8;
/// Relative threshold for `(ξ·f)(o) = 0`.
pub const FUNCTIONAL_ZERO_TOL: f64 = 1e-9;
/// Relative residual threshold of the least-squares membership oracle.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-8;
/// `Ψ_N = −∞` when every kernel is at most this value.
pub const KERNEL_ZERO: f64 = 1e-14;
/// Relative coefficient size below which `B·A` counts as identically zero.
pub const IDENTITY_TOL: f64 = 1e-12;
const MAX_WITNESS_TRIES: usize = 10;

/// Generators `F₁, …, F_t` in the joint variables `(z, w)` and a jet order.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealFamily {
    z_arity: usize,
    w_arity: usize,
    generators: Vec<Poly>,
    order: usize,
}

impl IdealFamily {
    pub fn new(z_arity: usize, w_arity: usize, generators: Vec<Poly>, order: usize) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::invalid("ideal family needs at least one generator"));
        }
        if order == 0 {
            return Err(Error::invalid("truncation order N must be >= 1"));
        }
        if z_arity == 0 {
            return Err(Error::invalid("z arity must be >= 1"));
        }
        for g in &generators {
            if g.arity() != z_arity + w_arity {
                return Err(Error::ArityMismatch {
                    expected: z_arity + w_arity,
                    found: g.arity(),
                });
            }
        }
        Ok(IdealFamily {
            z_arity,
            w_arity,
            generators,
            order,
        })
    }

    pub fn z_arity(&self) -> usize {
        self.z_arity
    }

    pub fn w_arity(&self) -> usize {
        self.w_arity
    }

    pub fn generators(&self) -> &[Poly] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn with_order(&self, order: usize) -> Result<Self> {
        IdealFamily::new(self.z_arity, self.w_arity, self.generators.clone(), order)
    }

    /// Row basis `{z^α : |α| ≤ N − 1}`.
    pub fn jet_basis(&self) -> Vec<MultiIndex> {
        MultiIndex::all_up_to(self.z_arity, self.order - 1)
    }

    /// Fiber generator `F_i(·, w)`.
    pub fn fiber_generator(&self, i: usize, w: &[C64]) -> Result<Poly> {
        self.generators[i].specialize_tail(w)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct IdealRepr {
    z_arity: usize,
    #[serde(default)]
    w_arity: usize,
    generators: Vec<Vec<JointTerm>>,
    order: usize,
}

impl Serialize for IdealFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IdealRepr {
            z_arity: self.z_arity,
            w_arity: self.w_arity,
            generators: self
                .generators
                .iter()
                .map(|g| joint_to_terms(g, self.z_arity))
                .collect(),
            order: self.order,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IdealFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = IdealRepr::deserialize(d)?;
        let gens = r
            .generators
            .iter()
            .map(|g| joint_from_terms(r.z_arity, r.w_arity, g))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        IdealFamily::new(r.z_arity, r.w_arity, gens, r.order).map_err(serde::de::Error::custom)
    }
}

/// Dense matrix of polynomials in `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    w_arity: usize,
    entries: Vec<PolyW>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize, w_arity: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            w_arity,
            entries: vec![Poly::zero(w_arity); rows * cols],
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &PolyW {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: PolyW) {
        self.entries[i * self.cols + j] = p;
    }

    pub fn eval(&self, w: &[C64]) -> Result<CMat> {
        if w.len() != self.w_arity {
            return Err(Error::ArityMismatch {
                expected: self.w_arity,
                found: w.len(),
            });
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).eval_unchecked(w)
        }))
    }

    pub fn mul(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != other.rows {
            return Err(Error::ArityMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = PolyMatrix::zeros(self.rows, other.cols, self.w_arity);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Poly::zero(self.w_arity);
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Largest coefficient magnitude over all entries.
    pub fn max_coeff(&self) -> f64 {
        self.entries.iter().map(|p| p.max_abs()).fold(0.0, f64::max)
    }

    /// Determinant of the submatrix on `rows × cols` by Laplace expansion
    /// with memoization over row subsets.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> PolyW {
        assert_eq!(rows.len(), cols.len());
        assert!(rows.len() < 64, "minor too large for bitmask memo");
        let mut memo: HashMap<u64, PolyW> = HashMap::new();
        let full: u64 = if rows.is_empty() { 0 } else { (1u64 << rows.len()) - 1 };
        self.minor_rec(rows, cols, full, &mut memo)
    }

    fn minor_rec(&self, rows: &[usize], cols: &[usize], mask: u64, memo: &mut HashMap<u64, PolyW>) -> PolyW {
        let k = mask.count_ones() as usize;
        if k == 0 {
            return Poly::one(self.w_arity);
        }
        if let Some(p) = memo.get(&mask) {
            return p.clone();
        }
        // expand along column cols[len − k]
        let col = cols[cols.len() - k];
        let mut acc = Poly::zero(self.w_arity);
        let mut sign = 1.0;
        for (pos, &r) in rows.iter().enumerate() {
            if mask & (1 << pos) == 0 {
                continue;
            }
            let a = self.get(r, col);
            if !a.is_zero() {
                let sub = self.minor_rec(rows, cols, mask & !(1 << pos), memo);
                if !sub.is_zero() {
                    acc = &acc + &(a * &sub).scale(C64::new(sign, 0.0));
                }
            }
            sign = -sign;
        }
        memo.insert(mask, acc.clone());
        acc
    }
}

impl Serialize for PolyMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            rows: usize,
            cols: usize,
            entries: Vec<&'a [PolyW]>,
        }
        Repr {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.chunks(self.cols.max(1)).collect(),
        }
        .serialize(s)
    }
}

/// `A(w)`: entry `(α; β, i)` is the `z^α` coefficient of `z^β F_i(z, w)`.
pub fn build_coeff_matrix(fam: &IdealFamily) -> PolyMatrix {
    let basis = fam.jet_basis();
    let split: Vec<_> = fam.generators.iter().map(|g| g.split_head(fam.z_arity)).collect();
    let t = fam.generators.len();
    let mut a = PolyMatrix::zeros(basis.len(), basis.len() * t, fam.w_arity);
    for (bi, beta) in basis.iter().enumerate() {
        for (i, gen) in split.iter().enumerate() {
            let col = bi * t + i;
            for (row, alpha) in basis.iter().enumerate() {
                if let Some(gamma) = alpha.checked_sub(beta) {
                    if let Some(p) = gen.get(&gamma) {
                        a.set(row, col, p.clone());
                    }
                }
            }
        }
    }
    a
}

/// Jet vector of `f` in the row basis of `A`.
pub fn jet_vector(fam: &IdealFamily, f: &Poly) -> Result<CVec> {
    if f.arity() != fam.z_arity {
        return Err(Error::ArityMismatch {
            expected: fam.z_arity,
            found: f.arity(),
        });
    }
    let basis = fam.jet_basis();
    Ok(CVec::from_iterator(basis.len(), basis.iter().map(|a| f.coeff(a))))
}

/// Result of the maximal rank search.
#[derive(Clone, Debug)]
pub struct RankSearch {
    pub rank: usize,
    /// Points achieving the rank, best rank gap first.
    pub witnesses: Vec<Vec<C64>>,
}

/// Uniform random point in a polydisc.
pub fn random_point(rng: &mut ChaCha8Rng, domain: &Polydisc) -> Vec<C64> {
    domain
        .center
        .iter()
        .zip(&domain.radii)
        .map(|(c, r)| {
            let rho = r * rng.random::<f64>().sqrt() * 0.999;
            let th = rng.random::<f64>() * std::f64::consts::TAU;
            c + C64::from_polar(rho, th)
        })
        .collect()
}

/// `r = max_w rank A(w)` over the grid plus `extra` seeded random points.
pub fn max_rank(a: &PolyMatrix, grid: &[Vec<C64>], base: &Polydisc, extra: usize, seed: u64) -> Result<RankSearch> {
    if grid.is_empty() && extra == 0 {
        return Err(Error::EmptyGrid);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<C64>> = grid.to_vec();
    for _ in 0..extra {
        pts.push(random_point(&mut rng, base));
    }
    let scored = pts
        .par_iter()
        .map(|w| {
            let m = a.eval(w)?;
            let r = numerical_rank(&m, RANK_TOL);
            Ok((r, rank_gap(&m, r)))
        })
        .collect::<Result<Vec<_>>>()?;
    let rank = scored.iter().map(|s| s.0).max().unwrap_or(0);
    let mut idx: Vec<usize> = (0..pts.len()).filter(|&i| scored[i].0 == rank).collect();
    idx.sort_by(|&x, &y| scored[y].1.total_cmp(&scored[x].1).then(x.cmp(&y)));
    Ok(RankSearch {
        rank,
        witnesses: idx.into_iter().map(|i| pts[i].clone()).collect(),
    })
}

/// The cofactor annihilator and the data defining `U`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnihilatorResult {
    pub rank: usize,
    pub jet_rows: usize,
    pub pivot_rows: Vec<usize>,
    pub pivot_cols: Vec<usize>,
    #[serde(serialize_with = "ser_point")]
    pub witness: Vec<C64>,
    pub b: PolyMatrix,
    /// `det C(w)`; `U` is where it does not vanish.
    pub det_c: PolyW,
    #[serde(skip)]
    c: PolyMatrix,
    #[serde(skip)]
    basis: Vec<MultiIndex>,
}

fn ser_point<S: Serializer>(p: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    p.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
}

impl AnnihilatorResult {
    /// `w ∈ U`: `|det C(w)| > DET_TOL · Π‖rows of C(w)‖`.
    pub fn in_u(&self, w: &[C64]) -> Result<bool> {
        Ok(self.det_at(w)?.1)
    }

    fn det_at(&self, w: &[C64]) -> Result<(f64, bool)> {
        let det = self.det_c.eval(w)?.norm();
        if self.rank == 0 {
            return Ok((det, true));
        }
        let c = self.c.eval(w)?;
        let hadamard: f64 = c.row_iter().map(|r| r.norm()).product();
        Ok((det, hadamard > 0.0 && det > DET_TOL * hadamard))
    }

    pub fn require_u(&self, w: &[C64]) -> Result<()> {
        let (det, ok) = self.det_at(w)?;
        if ok {
            Ok(())
        } else {
            Err(Error::OutsideRegularSet { det })
        }
    }

    pub fn num_functionals(&self) -> usize {
        self.b.nrows()
    }
}

/// Bordered-minor construction of `B(w)`.
///
/// Pivot rows `P` and columns `Q` come from complete pivoting at a witness.
/// For each non-pivot row `e`, with `R = (P, e)`, the row of `B` has
/// `d_k = (−1)^{k+r} det A[R∖R_k, Q]` in position `R_k`; expanding the
/// `(r+1)`-minor `A[R, Q ∪ {c}]` along its last column shows `(B·A)_{·c}`
/// is a minor of size `r + 1`, hence identically zero.
pub fn annihilator(a: &PolyMatrix, search: &RankSearch, basis: &[MultiIndex]) -> Result<AnnihilatorResult> {
    let r = search.rank;
    let p = a.nrows();
    for w0 in search.witnesses.iter().take(MAX_WITNESS_TRIES) {
        let m = a.eval(w0)?;
        let smax = singular_values(&m).into_iter().fold(0.0, f64::max);
        let Some((prow, pcol)) = complete_pivots(&m, r, RANK_TOL * smax) else {
            continue;
        };
        let mut c = PolyMatrix::zeros(r, r, a.w_arity);
        for (i, &pi) in prow.iter().enumerate() {
            for (j, &pj) in pcol.iter().enumerate() {
                c.set(i, j, a.get(pi, pj).clone());
            }
        }
        let all: Vec<usize> = (0..r).collect();
        let det_c = c.minor(&all, &all);
        let mut b = PolyMatrix::zeros(p - r, p, a.w_arity);
        let others: Vec<usize> = (0..p).filter(|i| !prow.contains(i)).collect();
        for (j, &e) in others.iter().enumerate() {
            let mut rows = prow.clone();
            rows.push(e);
            for k in 0..=r {
                let sub: Vec<usize> = rows
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != k)
                    .map(|(_, &x)| x)
                    .collect();
                let sign = if (k + r).is_multiple_of(2) { 1.0 } else { -1.0 };
                b.set(j, rows[k], a.minor(&sub, &pcol).scale(C64::new(sign, 0.0)));
            }
        }
        let res = AnnihilatorResult {
            rank: r,
            jet_rows: p,
            pivot_rows: prow,
            pivot_cols: pcol,
            witness: w0.clone(),
            b,
            det_c,
            c,
            basis: basis.to_vec(),
        };
        if res.in_u(w0)? {
            return Ok(res);
        }
    }
    Err(Error::Degenerate(format!(
        "no nonsingular {r}x{r} pivot found at {} witness points",
        search.witnesses.len().min(MAX_WITNESS_TRIES)
    )))
}

/// Everything derived from an ideal family at one jet order.
#[derive(Clone, Debug)]
pub struct JetIdeal {
    pub family: IdealFamily,
    pub a: PolyMatrix,
    pub annihilator: AnnihilatorResult,
    pub functionals: Vec<FunctionalFamily>,
}

impl JetIdeal {
    /// Build `A`, find the maximal rank, construct `B` and the functionals.
    pub fn build(fam: &IdealFamily, grid: &[Vec<C64>], base: &Polydisc, seed: u64) -> Result<JetIdeal> {
        if base.arity() != fam.w_arity {
            return Err(Error::ArityMismatch {
                expected: fam.w_arity,
                found: base.arity(),
            });
        }
        let a = build_coeff_matrix(fam);
        let basis = fam.jet_basis();
        let mut last = None;
        for attempt in 0..MAX_WITNESS_TRIES as u64 {
            let search = max_rank(&a, grid, base, 16, seed.wrapping_add(attempt))?;
            match annihilator(&a, &search, &basis) {
                Ok(res) => {
                    let functionals = functionals_from_annihilator(&res, fam.z_arity);
                    return Ok(JetIdeal {
                        family: fam.clone(),
                        a,
                        annihilator: res,
                        functionals,
                    });
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    pub fn in_u(&self, w: &[C64]) -> Result<bool> {
        self.annihilator.in_u(w)
    }

    /// `f ∈ I_w + 𝔪^N` via `(ξ_i(w)·f)(o) = 0` for every functional.
    pub fn membership_by_functionals(&self, w: &[C64], f: &Poly) -> Result<bool> {
        self.annihilator.require_u(w)?;
        let o = vec![C64::new(0.0, 0.0); self.family.z_arity];
        let fmax = f.max_abs();
        for fam in &self.functionals {
            let xi = fam.eval(w)?;
            let l1: f64 = xi.terms().map(|(_, c)| c.norm()).sum();
            let v = xi.apply_poly_at(f, &o)?;
            if v.norm() > FUNCTIONAL_ZERO_TOL * l1 * fmax {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `f ∈ I_w + 𝔪^N` by projecting the jet of `f` onto the columns of `A(w)`.
    pub fn membership_oracle(&self, w: &[C64], f: &Poly) -> Result<bool> {
        membership_oracle(&self.family, w, f)
    }

    /// Rank and exactness checks at one point of `U`.
    pub fn exactness_at(&self, w: &[C64]) -> Result<ExactnessCheck> {
        let a = self.a.eval(w)?;
        let b = self.annihilator.b.eval(w)?;
        let rank_a = numerical_rank(&a, RANK_TOL);
        let rank_b = numerical_rank(&b, RANK_TOL);
        let null_b = null_space_cols(&b);
        let mut joined = CMat::zeros(a.nrows(), a.ncols() + null_b.ncols());
        joined.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(&a);
        joined
            .view_mut((0, a.ncols()), (a.nrows(), null_b.ncols()))
            .copy_from(&null_b);
        let rank_joined = numerical_rank(&joined, RANK_TOL);
        let r = self.annihilator.rank;
        let p = self.annihilator.jet_rows;
        Ok(ExactnessCheck {
            rank_a,
            rank_b,
            rank_joined,
            ok: rank_a == r && rank_b == p - r && rank_joined == r,
        })
    }

    /// Relative size of the largest coefficient of `B·A`.
    pub fn identity_residual(&self) -> Result<f64> {
        let prod = self.annihilator.b.mul(&self.a)?;
        let scale = self.annihilator.b.max_coeff().max(1.0) * self.a.max_coeff().max(1.0);
        Ok(prod.max_coeff() / scale)
    }
}

fn null_space_cols(b: &CMat) -> CMat {
    if b.nrows() == 0 {
        return CMat::identity(b.ncols(), b.ncols());
    }
    crate::linalg::null_space(b, RANK_TOL)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExactnessCheck {
    pub rank_a: usize,
    pub rank_b: usize,
    pub rank_joined: usize,
    pub ok: bool,
}

/// Rows of `B` as functional families: `(ξ_k(w))_α = b_{kα}(w)`.
pub fn functionals_from_annihilator(res: &AnnihilatorResult, z_arity: usize) -> Vec<FunctionalFamily> {
    (0..res.b.nrows())
        .map(|k| {
            let terms = res
                .basis
                .iter()
                .enumerate()
                .filter(|(j, _)| !res.b.get(k, *j).is_zero())
                .map(|(j, a)| (a.clone(), res.b.get(k, j).clone()));
            FunctionalFamily::from_terms(z_arity, res.b.w_arity, terms.collect::<Vec<_>>())
                .expect("basis and entries have matching arities")
        })
        .collect()
}

/// Independent membership test: least-squares projection of the jet of `f`
/// onto the column space of `A(w)`.
pub fn membership_oracle(fam: &IdealFamily, w: &[C64], f: &Poly) -> Result<bool> {
    let a = build_coeff_matrix(fam).eval(w)?;
    let b = jet_vector(fam, f)?;
    let bn = b.norm();
    if bn == 0.0 {
        return Ok(true);
    }
    let q = column_space(&a, RANK_TOL);
    let proj = &q * (q.adjoint() * &b);
    Ok((&b - &proj).norm() <= ORACLE_RESIDUAL_TOL * bn)
}

/// Fiber model parameters for `Ψ_N`.
#[derive(Clone, Debug)]
pub struct FiberParams {
    pub fiber: Polydisc,
    pub base: Polydisc,
    pub degree: usize,
    pub quad: QuadSpec,
}

/// `Ψ_N` at one base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PsiValue {
    #[serde(serialize_with = "ser_point")]
    pub w: Vec<C64>,
    pub in_u: bool,
    /// `sup_i log K_i`; `None` when outside `U` or `−∞`.
    pub psi: Option<f64>,
    pub neg_inf: bool,
}

/// Evaluator for `Ψ_N(w) = sup_i log K^{φ_w}_{ξ_i(w)}(o)`.
pub struct PsiEvaluator<'a> {
    jet: &'a JetIdeal,
    problem: FamilyProblem,
}

impl<'a> PsiEvaluator<'a> {
    pub fn new(jet: &'a JetIdeal, phi: &WeightSpec, params: &FiberParams) -> Result<Self> {
        let n = jet.family.z_arity;
        let m = jet.family.w_arity;
        let carrier = FunctionalFamily::constant(&Functional::dirac(n), m);
        let problem = FamilyProblem::new(
            params.fiber.clone(),
            params.base.clone(),
            phi.clone(),
            FamilySource::Holomorphic(carrier),
            params.degree,
            params.quad,
        )?;
        Ok(PsiEvaluator { jet, problem })
    }

    /// Per-functional kernels `K^{φ_w}_{ξ_i(w)}(o)`.
    pub fn kernels(&self, w: &[C64]) -> Result<Vec<f64>> {
        let n = self.jet.family.z_arity;
        let o = vec![C64::new(0.0, 0.0); n];
        let (model, a) = match self.problem.fiber_model(w) {
            Ok(x) => x,
            Err(Error::EmptyModel) => return Ok(vec![0.0; self.jet.functionals.len()]),
            Err(e) => return Err(e),
        };
        self.jet
            .functionals
            .iter()
            .map(|f| Ok(a.exp() * model.xi_kernel(&f.eval(w)?, &o)?))
            .collect()
    }

    /// `Ψ_N(w)` as a real number (`−∞` allowed); ignores `U`.
    pub fn psi_raw(&self, w: &[C64]) -> Result<f64> {
        let ks = self.kernels(w)?;
        if ks.iter().all(|k| *k <= KERNEL_ZERO) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(ks.into_iter().fold(f64::NEG_INFINITY, f64::max).ln())
    }

    pub fn value(&self, w: &[C64]) -> Result<PsiValue> {
        if !self.jet.in_u(w)? {
            return Ok(PsiValue {
                w: w.to_vec(),
                in_u: false,
                psi: None,
                neg_inf: false,
            });
        }
        let psi = self.psi_raw(w)?;
        Ok(PsiValue {
            w: w.to_vec(),
            in_u: true,
            psi: psi.is_finite().then_some(psi),
            neg_inf: psi == f64::NEG_INFINITY,
        })
    }
}

pub fn psi_n(jet: &JetIdeal, phi: &WeightSpec, grid: &[Vec<C64>], params: &FiberParams) -> Result<Vec<PsiValue>> {
    let ev = PsiEvaluator::new(jet, phi, params)?;
    grid.par_iter().map(|w| ev.value(w)).collect()
}

/// One grid point of a Λ scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LambdaRow {
    #[serde(flatten)]
    pub psi: PsiValue,
    /// Every multiplier-ideal generator of `φ_w` passes the functionals.
    pub oracle_in_lambda: Option<bool>,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LambdaScan {
    pub order: usize,
    pub rows: Vec<LambdaRow>,
    /// Grid section of `Λ_N`: `U`-grid points with `Ψ_N = −∞`.
    #[serde(serialize_with = "ser_points")]
    pub lambda_grid: Vec<Vec<C64>>,
    #[serde(serialize_with = "ser_points")]
    pub disagreements: Vec<Vec<C64>>,
}

fn ser_points<S: Serializer>(p: &[Vec<C64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    p.iter()
        .map(|w| w.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .serialize(s)
}

impl LambdaScan {
    pub fn consistent(&self) -> bool {
        self.disagreements.is_empty()
    }

    /// CSV `w_re,w_im,in_Lambda,PsiN` (first base coordinate).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("w_re,w_im,in_U,in_Lambda,PsiN\n");
        for r in &self.rows {
            let w = r.psi.w.first().copied().unwrap_or_default();
            let psi = match (r.psi.in_u, r.psi.psi) {
                (false, _) => "nan".to_string(),
                (true, Some(v)) => format!("{v:.12e}"),
                (true, None) => "-inf".to_string(),
            };
            let _ = writeln!(
                s,
                "{:.12e},{:.12e},{},{},{}",
                w.re,
                w.im,
                r.psi.in_u as u8,
                (r.psi.in_u && r.psi.neg_inf) as u8,
                psi
            );
        }
        s
    }
}

/// `Ψ_N`-based grid section of `Λ_N`, cross-checked against the
/// multiplier-ideal oracle.
pub fn lambda_scan(jet: &JetIdeal, phi: &WeightSpec, grid: &[Vec<C64>], params: &FiberParams) -> Result<LambdaScan> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let ev = PsiEvaluator::new(jet, phi, params)?;
    let rows = grid
        .par_iter()
        .map(|w| {
            let psi = ev.value(w)?;
            if !psi.in_u {
                return Ok(LambdaRow {
                    psi,
                    oracle_in_lambda: None,
                    agree: true,
                });
            }
            let fiber = phi.specialize(w)?;
            let gens = multiplier_ideal_generators(&fiber)?;
            let mut all = true;
            for g in &gens {
                if !jet.membership_by_functionals(w, g)? {
                    all = false;
                    break;
                }
            }
            let agree = all == psi.neg_inf;
            Ok(LambdaRow {
                psi,
                oracle_in_lambda: Some(all),
                agree,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda_grid = rows
        .iter()
        .filter(|r| r.psi.in_u && r.psi.neg_inf)
        .map(|r| r.psi.w.clone())
        .collect();
    let disagreements = rows.iter().filter(|r| !r.agree).map(|r| r.psi.w.clone()).collect();
    Ok(LambdaScan {
        order: jet.family.order,
        rows,
        lambda_grid,
        disagreements,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KrullLevel {
    pub order: usize,
    #[serde(serialize_with = "ser_points")]
    pub lambda_grid: Vec<Vec<C64>>,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KrullReport {
    pub levels: Vec<KrullLevel>,
    /// Smallest `N` after which the grid sections no longer change.
    pub stabilized_at: usize,
    #[serde(serialize_with = "ser_points")]
    pub intersection: Vec<Vec<C64>>,
}

/// `Λ_N` grid sections for `N = 2..=n_max` with the nesting check.
pub fn krull_stabilize(
    fam: &IdealFamily,
    phi: &WeightSpec,
    grid: &[Vec<C64>],
    params: &FiberParams,
    n_max: usize,
    seed: u64,
) -> Result<KrullReport> {
    if n_max < 2 {
        return Err(Error::invalid("krull stabilization needs N_max >= 2"));
    }
    let mut levels = Vec::new();
    let mut in_u_prev: Option<Vec<bool>> = None;
    let mut mask_prev: Option<Vec<bool>> = None;
    for order in 2..=n_max {
        let jet = JetIdeal::build(&fam.with_order(order)?, grid, &params.base, seed)?;
        let scan = lambda_scan(&jet, phi, grid, params)?;
        let in_u: Vec<bool> = scan.rows.iter().map(|r| r.psi.in_u).collect();
        let mask: Vec<bool> = scan.rows.iter().map(|r| r.psi.in_u && r.psi.neg_inf).collect();
        if let (Some(pu), Some(pm)) = (&in_u_prev, &mask_prev) {
            for i in 0..grid.len() {
                if pu[i] && in_u[i] && mask[i] && !pm[i] {
                    return Err(Error::NonNesting(order - 1, order));
                }
            }
        }
        levels.push(KrullLevel {
            order,
            lambda_grid: scan.lambda_grid.clone(),
            consistent: scan.consistent(),
        });
        in_u_prev = Some(in_u);
        mask_prev = Some(mask);
    }
    let last = &levels.last().expect("n_max >= 2").lambda_grid;
    let mut stabilized_at = n_max;
    for lvl in levels.iter().rev() {
        if &lvl.lambda_grid == last {
            stabilized_at = lvl.order;
        } else {
            break;
        }
    }
    Ok(KrullReport {
        intersection: last.clone(),
        levels,
        stabilized_at,
    })
}

/// `k × k` grid on `[−h, h]²` in the first base coordinate.
pub fn base_grid(m: usize, half_width: f64, points_per_side: usize) -> Vec<Vec<C64>> {
    crate::fiberwise::square_grid(C64::new(0.0, 0.0), half_width, points_per_side)
        .into_iter()
        .map(|w1| {
            let mut w = vec![C64::new(0.0, 0.0); m];
            if m > 0 {
                w[0] = w1;
            }
            w
        })
        .collect()
}
