//! Truncated models of weighted Bergman spaces and ξ-Bergman kernels.
//!
//! A model is spanned by `b_j = G·(z − c)^{α_j}` where `G` is the product of
//! the weight's divisor generators (1 if none) and `c` is the domain center.
//! Since `|G|² e^{−2 log|G|} = 1`, the Gram matrix only involves the regular
//! part of the weight.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::linalg::{hermitian_eigen, hermitize, CMat, CVec};
use crate::multi_index::MultiIndex;
use crate::poly::{Poly, C64};
use crate::quadrature::{DiscRule, QuadSpec};
use crate::weights::{monomial_moment, Polydisc, WeightSpec, WeightTerm};

/// Eigenvalues below this fraction of the largest are discarded.
pub const EIGEN_CUTOFF: f64 = 1e-12;

/// Which exponents `α` span the model.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisSpec {
    TotalDegree(usize),
    Explicit(Vec<MultiIndex>),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GramOptions {
    pub quad: QuadSpec,
    /// Skip the closed-form and separable paths.
    pub force_quadrature: bool,
}

/// How the Gram matrix was assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum GramPath {
    ClosedForm,
    Separable,
    Quadrature,
}

/// Orthonormalizing transform of a Gram matrix: `Tᴴ G T = I_r`.
#[derive(Clone, Debug)]
pub struct Orthonormal {
    pub t: CMat,
    pub rank: usize,
    /// Spectrum of the diagonally scaled Gram, ascending.
    pub spectrum: Vec<f64>,
}

impl Orthonormal {
    /// Eigen-decomposition of `D^{-1/2} G D^{-1/2}` with `D = diag(G)`.
    ///
    /// Diagonal scaling keeps the cutoff meaningful on small polydiscs where
    /// moments span many orders of magnitude.
    pub fn from_gram(gram: &CMat) -> Orthonormal {
        let n = gram.nrows();
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let d = gram[(i, i)].re;
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut scaled = gram.clone();
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] *= scale[i] * scale[j];
            }
        }
        let (vals, vecs) = hermitian_eigen(&hermitize(&scaled));
        let lmax = vals.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..n)
            .filter(|&k| lmax > 0.0 && vals[k] >= EIGEN_CUTOFF * lmax)
            .collect();
        let mut t = CMat::zeros(n, keep.len());
        for (col, &k) in keep.iter().enumerate() {
            let s = 1.0 / vals[k].sqrt();
            for i in 0..n {
                t[(i, col)] = vecs[(i, k)] * (scale[i] * s);
            }
        }
        Orthonormal {
            t,
            rank: keep.len(),
            spectrum: vals,
        }
    }
}

/// Gram data for `(z − c)^α` under the regular part of a weight. Shared
/// between fibers whose regular weight agrees.
#[derive(Clone, Debug)]
pub struct GramCore {
    pub domain: Polydisc,
    pub exponents: Vec<MultiIndex>,
    pub gram: CMat,
    pub ortho: Orthonormal,
    pub path: GramPath,
}

/// A truncated model of `A²(D, e^{−ψ})`.
#[derive(Clone, Debug)]
pub struct GramModel {
    core: Arc<GramCore>,
    weight: WeightSpec,
    factor: Option<Poly>,
    basis: Vec<Poly>,
}

impl GramModel {
    /// Assemble and orthonormalize in one step.
    pub fn assemble(
        domain: &Polydisc,
        weight: &WeightSpec,
        basis: &BasisSpec,
        opts: &GramOptions,
    ) -> Result<GramModel> {
        let core = GramCore::assemble(domain, weight, basis, opts)?;
        GramModel::with_core(Arc::new(core), weight)
    }

    /// Reuse a core for a weight with the same regular part.
    pub fn with_core(core: Arc<GramCore>, weight: &WeightSpec) -> Result<GramModel> {
        if weight.w_arity() != 0 || weight.z_arity() != core.domain.arity() {
            return Err(Error::ArityMismatch {
                expected: core.domain.arity(),
                found: weight.z_arity(),
            });
        }
        if weight.is_identically_neg_inf() {
            return Err(Error::EmptyModel);
        }
        let factor = weight.divisor_factor()?;
        let basis = core
            .exponents
            .iter()
            .map(|a| {
                let m = Poly::shifted_monomial(a, &core.domain.center);
                match &factor {
                    Some(g) => g * &m,
                    None => m,
                }
            })
            .collect();
        Ok(GramModel {
            core,
            weight: weight.clone(),
            factor,
            basis,
        })
    }

    pub fn core(&self) -> &Arc<GramCore> {
        &self.core
    }

    pub fn domain(&self) -> &Polydisc {
        &self.core.domain
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn factor(&self) -> Option<&Poly> {
        self.factor.as_ref()
    }

    pub fn exponents(&self) -> &[MultiIndex] {
        &self.core.exponents
    }

    /// Basis functions as polynomials in `z`.
    pub fn basis(&self) -> &[Poly] {
        &self.basis
    }

    pub fn gram(&self) -> &CMat {
        &self.core.gram
    }

    pub fn transform(&self) -> &CMat {
        &self.core.ortho.t
    }

    pub fn rank(&self) -> usize {
        self.core.ortho.rank
    }

    pub fn path(&self) -> GramPath {
        self.core.path
    }

    /// `cᴴ G c` for a basis-coefficient vector.
    pub fn norm_sq(&self, coeffs: &CVec) -> f64 {
        (coeffs.adjoint() * &self.core.gram * coeffs)[(0, 0)].re
    }

    /// Polynomial `Σ c_j b_j`.
    pub fn to_poly(&self, coeffs: &CVec) -> Poly {
        let mut out = Poly::zero(self.domain().arity());
        for (b, c) in self.basis.iter().zip(coeffs.iter()) {
            out = &out + &b.scale(*c);
        }
        out
    }

    /// `(ξ·b_j)(z)` for every basis function.
    pub fn functional_on_basis(&self, xi: &Functional, z: &[C64]) -> Result<CVec> {
        if xi.arity() != self.domain().arity() {
            return Err(Error::ArityMismatch {
                expected: self.domain().arity(),
                found: xi.arity(),
            });
        }
        if !self.domain().contains(z) {
            return Err(Error::OutsideDomain);
        }
        let vals = self
            .basis
            .iter()
            .map(|b| xi.apply_poly_at(b, z))
            .collect::<Result<Vec<_>>>()?;
        Ok(CVec::from_vec(vals))
    }

    /// `v_k = (ξ·e_k)(z)` over the orthonormal basis.
    fn orthonormal_values(&self, xi: &Functional, z: &[C64]) -> Result<CVec> {
        let u = self.functional_on_basis(xi, z)?;
        Ok(self.transform().transpose() * u)
    }

    /// `K^ψ_{ξ,D}(z) = Σ_k |(ξ·e_k)(z)|²` on the truncated space.
    pub fn xi_kernel(&self, xi: &Functional, z: &[C64]) -> Result<f64> {
        Ok(self.orthonormal_values(xi, z)?.norm_squared())
    }

    /// The maximizer `F₀ = Σ_k conj((ξ·e_k)(z))·e_k` as basis coefficients.
    pub fn extremal_function(&self, xi: &Functional, z: &[C64]) -> Result<CVec> {
        let v = self.orthonormal_values(xi, z)?;
        let k = v.norm_squared();
        let scale = self.kernel_scale(xi, z);
        if !(k > 1e-28 * scale) {
            return Err(Error::ZeroKernel);
        }
        Ok(self.transform() * v.conjugate())
    }

    /// Rough magnitude of the kernel if nothing cancelled, for zero tests.
    fn kernel_scale(&self, xi: &Functional, z: &[C64]) -> f64 {
        let l1: f64 = xi.terms().map(|(_, c)| c.norm()).sum();
        let r = z.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let tmax = self.transform().iter().map(|c| c.norm()).fold(0.0, f64::max);
        (l1 * r * tmax).powi(2).max(f64::MIN_POSITIVE)
    }

    /// `C_K = max_{z ∈ grid} K(z)`.
    pub fn boundedness_constant(&self, xi: &Functional, grid: &[Vec<C64>]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut best = 0.0f64;
        for z in grid {
            best = best.max(self.xi_kernel(xi, z)?);
        }
        Ok(best)
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            basis: self.core.exponents.clone(),
            factored: self.factor.is_some(),
            path: self.core.path,
            rank: self.rank(),
            spectrum: self.core.ortho.spectrum.clone(),
        }
    }
}

/// JSON-exportable model description.
#[derive(Clone, Debug, Serialize)]
pub struct ModelSummary {
    pub basis: Vec<MultiIndex>,
    pub factored: bool,
    pub path: GramPath,
    pub rank: usize,
    pub spectrum: Vec<f64>,
}

impl GramCore {
    pub fn assemble(domain: &Polydisc, weight: &WeightSpec, basis: &BasisSpec, opts: &GramOptions) -> Result<GramCore> {
        let n = domain.arity();
        if weight.w_arity() != 0 || weight.z_arity() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                found: weight.z_arity(),
            });
        }
        opts.quad.validate(domain.min_radius())?;
        if weight.is_identically_neg_inf() {
            return Err(Error::EmptyModel);
        }
        // rejects divisor exponents other than 1
        weight.divisor_factor()?;
        let logc = weight.log_monomial_exponents();
        let centered = domain.is_centered_at_origin();
        if !centered {
            for ((c, r), &e) in domain.center.iter().zip(&domain.radii).zip(&logc) {
                if e >= 1.0 && c.norm() <= *r {
                    return Err(Error::UnsupportedWeight(
                        "logMonomial with c >= 1 needs an origin-centered polydisc".into(),
                    ));
                }
            }
        }
        let candidates = match basis {
            BasisSpec::TotalDegree(d) => MultiIndex::all_up_to(n, *d),
            BasisSpec::Explicit(v) => {
                if let Some(a) = v.iter().find(|a| a.arity() != n) {
                    return Err(Error::ArityMismatch {
                        expected: n,
                        found: a.arity(),
                    });
                }
                v.clone()
            }
        };
        let exponents: Vec<MultiIndex> = candidates
            .into_iter()
            .filter(|a| !centered || (0..n).all(|i| f64::from(a.get(i)) - logc[i] + 1.0 > 0.0))
            .collect();
        if exponents.is_empty() {
            return Err(Error::EmptyModel);
        }
        let closed =
            !opts.force_quadrature && centered && opts.quad.inner_cutoff == 0.0 && weight.regular_is_closed_form();
        let (gram, path) = if closed {
            (closed_form_gram(domain, weight, &exponents), GramPath::ClosedForm)
        } else if let Some(sep) = weight.separable_regular().filter(|_| !opts.force_quadrature) {
            (
                separable_gram(domain, &sep, &exponents, &opts.quad),
                GramPath::Separable,
            )
        } else {
            (
                tensor_gram(domain, weight, &exponents, &opts.quad),
                GramPath::Quadrature,
            )
        };
        let gram = hermitize(&gram);
        let ortho = Orthonormal::from_gram(&gram);
        Ok(GramCore {
            domain: domain.clone(),
            exponents,
            gram,
            ortho,
            path,
        })
    }
}

fn closed_form_gram(domain: &Polydisc, weight: &WeightSpec, exps: &[MultiIndex]) -> CMat {
    let c = weight.log_monomial_exponents();
    let shift = (-weight.constant_shift()).exp();
    let mut g = CMat::zeros(exps.len(), exps.len());
    for (j, a) in exps.iter().enumerate() {
        g[(j, j)] = C64::new(shift * monomial_moment(&domain.radii, a, &c), 0.0);
    }
    g
}

fn max_exponents(exps: &[MultiIndex], n: usize) -> Vec<usize> {
    (0..n)
        .map(|i| exps.iter().map(|a| a.get(i) as usize).max().unwrap_or(0))
        .collect()
}

fn separable_gram(
    domain: &Polydisc,
    sep: &crate::weights::SeparableWeight,
    exps: &[MultiIndex],
    quad: &QuadSpec,
) -> CMat {
    let n = domain.arity();
    let caps = max_exponents(exps, n);
    // tables[i][p][q] = ∫ conj((x−c)^p) (x−c)^q e^{−ψᵢ(x)} dA(x)
    let tables: Vec<Vec<Vec<C64>>> = (0..n)
        .map(|i| {
            let rule = DiscRule::new(domain.center[i], domain.radii[i], quad);
            let dmax = caps[i];
            let mut t = vec![vec![C64::new(0.0, 0.0); dmax + 1]; dmax + 1];
            let mut pows = vec![C64::new(0.0, 0.0); dmax + 1];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let wt = w * (-sep.eval_var(i, *x)).exp();
                let u = x - domain.center[i];
                pows[0] = C64::new(1.0, 0.0);
                for p in 1..=dmax {
                    pows[p] = pows[p - 1] * u;
                }
                for p in 0..=dmax {
                    for q in 0..=dmax {
                        t[p][q] += pows[p].conj() * pows[q] * wt;
                    }
                }
            }
            t
        })
        .collect();
    let shift = (-sep.constant).exp();
    let mut g = CMat::zeros(exps.len(), exps.len());
    for (j, a) in exps.iter().enumerate() {
        for (k, b) in exps.iter().enumerate() {
            let mut v = C64::new(shift, 0.0);
            for (i, tab) in tables.iter().enumerate() {
                v *= tab[a.get(i) as usize][b.get(i) as usize];
            }
            g[(j, k)] = v;
        }
    }
    g
}

/// Quadrature nodes processed per parallel task.
const CHUNK: usize = 4096;

fn tensor_gram(domain: &Polydisc, weight: &WeightSpec, exps: &[MultiIndex], quad: &QuadSpec) -> CMat {
    let n = domain.arity();
    let rules: Vec<DiscRule> = (0..n)
        .map(|i| DiscRule::new(domain.center[i], domain.radii[i], quad))
        .collect();
    let total: usize = rules.iter().map(|r| r.len()).product();
    let caps = max_exponents(exps, n);
    let regular: Vec<WeightTerm> = weight.regular_terms().cloned().collect();
    let reg = WeightSpec::fiber(n, regular).expect("subset of a valid weight");
    let nb = exps.len();
    let partials: Vec<CMat> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let mut v = CMat::zeros(hi - lo, nb);
            let mut vw = CMat::zeros(hi - lo, nb);
            let mut z = vec![C64::new(0.0, 0.0); n];
            let mut pows: Vec<Vec<C64>> = caps.iter().map(|c| vec![C64::new(0.0, 0.0); c + 1]).collect();
            for (row, flat) in (lo..hi).enumerate() {
                let mut rest = flat;
                let mut w = 1.0;
                for i in 0..n {
                    let k = rest % rules[i].len();
                    rest /= rules[i].len();
                    z[i] = rules[i].points[k];
                    w *= rules[i].weights[k];
                    let u = z[i] - domain.center[i];
                    pows[i][0] = C64::new(1.0, 0.0);
                    for p in 1..=caps[i] {
                        pows[i][p] = pows[i][p - 1] * u;
                    }
                }
                let wt = w * (-reg.eval_joint(&z)).exp();
                for (j, a) in exps.iter().enumerate() {
                    let mut m = C64::new(1.0, 0.0);
                    for i in 0..n {
                        m *= pows[i][a.get(i) as usize];
                    }
                    v[(row, j)] = m;
                    vw[(row, j)] = m * wt;
                }
            }
            // G_jk = Σ conj(b_j) b_k w, so that ‖Σ c_j b_j‖² = cᴴ G c
            vw.adjoint() * v
        })
        .collect();
    let mut g = CMat::zeros(nb, nb);
    for p in partials {
        g += p;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn disc() -> Polydisc {
        Polydisc::unit(1)
    }

    #[test]
    fn diagonal_grams() {
        let m = GramModel::assemble(
            &disc(),
            &WeightSpec::zero(1),
            &BasisSpec::TotalDegree(2),
            &GramOptions::default(),
        )
        .unwrap();
        let expect = [PI, PI / 2.0, PI / 3.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((m.gram()[(i, i)].re - e).abs() < 1e-15);
        }
        let bi = GramModel::assemble(
            &Polydisc::unit(2),
            &WeightSpec::zero(2),
            &BasisSpec::TotalDegree(1),
            &GramOptions::default(),
        )
        .unwrap();
        let expect = [PI * PI, PI * PI / 2.0, PI * PI / 2.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((bi.gram()[(i, i)].re - e).abs() < 1e-13);
        }
        let lm = WeightSpec::fiber(1, vec![WeightTerm::LogMonomial { c: vec![0.5] }]).unwrap();
        let m = GramModel::assemble(&disc(), &lm, &BasisSpec::TotalDegree(1), &GramOptions::default()).unwrap();
        assert!((m.gram()[(0, 0)].re - 2.0 * PI).abs() < 1e-14);
        assert!((m.gram()[(1, 1)].re - 2.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let lm = WeightSpec::fiber(2, vec![WeightTerm::LogMonomial { c: vec![0.5, 0.0] }]).unwrap();
        let opts = GramOptions {
            force_quadrature: true,
            ..GramOptions::default()
        };
        let q = GramModel::assemble(&Polydisc::unit(2), &lm, &BasisSpec::TotalDegree(4), &opts).unwrap();
        let cf = GramModel::assemble(
            &Polydisc::unit(2),
            &lm,
            &BasisSpec::TotalDegree(4),
            &GramOptions::default(),
        )
        .unwrap();
        assert_eq!(q.path(), GramPath::Quadrature);
        assert_eq!(cf.path(), GramPath::ClosedForm);
        let diff = (q.gram() - cf.gram()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn orthonormalize_examples() {
        let g = CMat::from_diagonal(&CVec::from_vec(vec![c(PI, 0.0), c(PI / 2.0, 0.0)]));
        let o = Orthonormal::from_gram(&g);
        assert_eq!(o.rank, 2);
        let id = o.t.adjoint() * &g * &o.t;
        assert!((id - CMat::identity(2, 2)).iter().all(|x| x.norm() < 1e-14));
        let dup = CMat::from_element(2, 2, c(1.0, 0.0));
        assert_eq!(Orthonormal::from_gram(&dup).rank, 1);
    }

    #[test]
    fn kernel_examples() {
        let m = GramModel::assemble(
            &disc(),
            &WeightSpec::zero(1),
            &BasisSpec::TotalDegree(40),
            &GramOptions::default(),
        )
        .unwrap();
        let dirac = Functional::dirac(1);
        let k0 = m.xi_kernel(&dirac, &[c(0.0, 0.0)]).unwrap();
        assert!((k0 - 1.0 / PI).abs() < 1e-14);
        let k5 = m.xi_kernel(&dirac, &[c(0.5, 0.0)]).unwrap();
        assert!((k5 - 16.0 / (9.0 * PI)).abs() < 1e-6);
        let d1 = Functional::coefficient(MultiIndex::from([1]));
        assert!((m.xi_kernel(&d1, &[c(0.0, 0.0)]).unwrap() - 2.0 / PI).abs() < 1e-14);
        assert!(matches!(m.xi_kernel(&dirac, &[c(1.0, 0.0)]), Err(Error::OutsideDomain)));
    }

    #[test]
    fn extremal_examples() {
        let m = GramModel::assemble(
            &disc(),
            &WeightSpec::zero(1),
            &BasisSpec::TotalDegree(5),
            &GramOptions::default(),
        )
        .unwrap();
        let z0 = [c(0.0, 0.0)];
        let f = m.extremal_function(&Functional::dirac(1), &z0).unwrap();
        assert!(f.iter().skip(1).all(|x| x.norm() < 1e-14));
        let d1 = Functional::coefficient(MultiIndex::from([1]));
        let f = m.extremal_function(&d1, &z0).unwrap();
        assert!(f.iter().enumerate().all(|(i, x)| i == 1 || x.norm() < 1e-14));
        let d7 = Functional::coefficient(MultiIndex::from([7]));
        assert!(matches!(m.extremal_function(&d7, &z0), Err(Error::ZeroKernel)));
    }

    #[test]
    fn boundedness_examples() {
        let m = GramModel::assemble(
            &disc(),
            &WeightSpec::zero(1),
            &BasisSpec::TotalDegree(40),
            &GramOptions::default(),
        )
        .unwrap();
        let dirac = Functional::dirac(1);
        let c0 = m.boundedness_constant(&dirac, &[vec![c(0.0, 0.0)]]).unwrap();
        assert!((c0 - 1.0 / PI).abs() < 1e-14);
        let c1 = m
            .boundedness_constant(&dirac, &[vec![c(0.0, 0.0)], vec![c(0.5, 0.0)]])
            .unwrap();
        assert!((c1 - 16.0 / (9.0 * PI)).abs() < 1e-6);
        assert!(matches!(m.boundedness_constant(&dirac, &[]), Err(Error::EmptyGrid)));
    }

    #[test]
    fn factored_basis_cancels_divisor() {
        // ψ = 2 log|z₁ − z₂|: Gram of (z₁−z₂)z^α equals the unweighted Gram of z^α
        let g = &Poly::var(2, 0) - &Poly::var(2, 1);
        let w = WeightSpec::fiber(2, vec![WeightTerm::LogDivisor { g, c: 1.0 }]).unwrap();
        let m = GramModel::assemble(
            &Polydisc::unit(2),
            &w,
            &BasisSpec::TotalDegree(2),
            &GramOptions::default(),
        )
        .unwrap();
        assert_eq!(m.path(), GramPath::ClosedForm);
        assert!((m.gram()[(0, 0)].re - PI * PI).abs() < 1e-13);
        // ξ = ∂/∂z₂ at the origin hits (z₁ − z₂) with coefficient −1
        let xi = Functional::coefficient(MultiIndex::from([0, 1]));
        let k = m.xi_kernel(&xi, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((k - 1.0 / (PI * PI)).abs() < 1e-14);
    }

    #[test]
    fn neg_inf_weight_is_empty() {
        let w = WeightSpec::fiber(1, vec![WeightTerm::Constant { a: f64::NEG_INFINITY }]).unwrap();
        assert!(matches!(
            GramModel::assemble(&disc(), &w, &BasisSpec::TotalDegree(2), &GramOptions::default()),
            Err(Error::EmptyModel)
        ));
    }

    #[test]
    fn separable_and_tensor_agree() {
        let w = WeightSpec::fiber(
            2,
            vec![
                WeightTerm::Quadratic { c: vec![1.0, 0.5] },
                WeightTerm::ModulusSquared {
                    h: &Poly::var(2, 1) + &Poly::one(2),
                    c: 0.3,
                },
            ],
        )
        .unwrap();
        let quad = QuadSpec {
            radial: 16,
            angular: 24,
            inner_cutoff: 0.0,
        };
        let sep = GramModel::assemble(
            &Polydisc::unit(2),
            &w,
            &BasisSpec::TotalDegree(3),
            &GramOptions {
                quad,
                force_quadrature: false,
            },
        )
        .unwrap();
        let ten = GramModel::assemble(
            &Polydisc::unit(2),
            &w,
            &BasisSpec::TotalDegree(3),
            &GramOptions {
                quad,
                force_quadrature: true,
            },
        )
        .unwrap();
        assert_eq!(sep.path(), GramPath::Separable);
        let diff = (sep.gram() - ten.gram()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn norm_of_complex_combination_matches_direct_integral() {
        let dom = Polydisc::with_center(vec![c(0.1, 0.1)], vec![1.0]).unwrap();
        let w = WeightSpec::fiber(1, vec![WeightTerm::Quadratic { c: vec![1.0] }]).unwrap();
        let quad = QuadSpec::default();
        for force in [false, true] {
            let m = GramModel::assemble(
                &dom,
                &w,
                &BasisSpec::TotalDegree(3),
                &GramOptions {
                    quad,
                    force_quadrature: force,
                },
            )
            .unwrap();
            let v = CVec::from_vec(vec![c(1.0, 0.5), c(0.1, 0.1), c(-0.3, 0.2), c(0.0, 0.7)]);
            let p = m.to_poly(&v);
            let rule = DiscRule::new(c(0.1, 0.1), 1.0, &quad);
            let direct = rule.integrate(|z| p.eval_unchecked(&[z]).norm_sqr() * (-z.norm_sqr()).exp());
            assert!(
                (m.norm_sq(&v) - direct).abs() < 1e-10 * direct,
                "{} {direct}",
                m.norm_sq(&v)
            );
        }
    }
}
