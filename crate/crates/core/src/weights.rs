//! Catalog of plurisubharmonic weights on polydiscs.
//!
//! Every weight is a finite sum of catalog terms, each of which is
//! plurisubharmonic by construction:
//!
//! | variant          | ψ                         | why psh                          |
//! |------------------|---------------------------|----------------------------------|
//! | `constant`       | `a`                       | constant                         |
//! | `quadratic`      | `Σ cᵢ|xᵢ|²`, `cᵢ ≥ 0`      | convex                           |
//! | `logMonomial`    | `2 Σ cᵢ log|xᵢ|`, `cᵢ ≥ 0` | `log|holomorphic|` is psh        |
//! | `logDivisor`     | `2c log|g|`, `c > 0`      | `log|holomorphic|` is psh        |
//! | `modulusSquared` | `c|h|²`, `c ≥ 0`          | `|holomorphic|²` is psh          |
//!
//! Sums of psh functions are psh. Coefficient vectors and polynomials are
//! indexed by the joint variables `(z, w)`; a fiber weight has `w` arity 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_space, CMat, CVec};
use crate::multi_index::MultiIndex;
use crate::poly::{joint_from_terms, joint_to_terms, JointTerm, Poly, C64};
use crate::quadrature::gauss_legendre_on;

/// Product of discs `|xᵢ − cᵢ| < Rᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polydisc {
    pub center: Vec<C64>,
    pub radii: Vec<f64>,
}

impl Polydisc {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        let center = vec![C64::new(0.0, 0.0); radii.len()];
        Self::with_center(center, radii)
    }

    pub fn unit(n: usize) -> Self {
        Polydisc {
            center: vec![C64::new(0.0, 0.0); n],
            radii: vec![1.0; n],
        }
    }

    pub fn with_center(center: Vec<C64>, radii: Vec<f64>) -> Result<Self> {
        if center.len() != radii.len() {
            return Err(Error::ArityMismatch {
                expected: radii.len(),
                found: center.len(),
            });
        }
        if radii.is_empty() {
            return Err(Error::invalid("polydisc needs at least one factor"));
        }
        if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::invalid("polydisc radii must be positive"));
        }
        Ok(Polydisc { center, radii })
    }

    pub fn arity(&self) -> usize {
        self.radii.len()
    }

    pub fn is_centered_at_origin(&self) -> bool {
        self.center.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    /// Open polydisc membership.
    pub fn contains(&self, z: &[C64]) -> bool {
        z.len() == self.arity()
            && z.iter()
                .zip(&self.center)
                .zip(&self.radii)
                .all(|((x, c), r)| (x - c).norm() < *r)
    }

    /// Product `self × other`.
    pub fn product(&self, other: &Polydisc) -> Polydisc {
        let mut center = self.center.clone();
        center.extend_from_slice(&other.center);
        let mut radii = self.radii.clone();
        radii.extend_from_slice(&other.radii);
        Polydisc { center, radii }
    }

    pub fn min_radius(&self) -> f64 {
        self.radii.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolydiscRepr {
    radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    center: Option<Vec<[f64; 2]>>,
}

impl Serialize for Polydisc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let center = if self.is_centered_at_origin() {
            None
        } else {
            Some(self.center.iter().map(|c| [c.re, c.im]).collect())
        };
        PolydiscRepr {
            radii: self.radii.clone(),
            center,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polydisc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PolydiscRepr::deserialize(d)?;
        let center = match r.center {
            Some(c) => c.into_iter().map(|[a, b]| C64::new(a, b)).collect(),
            None => vec![C64::new(0.0, 0.0); r.radii.len()],
        };
        Polydisc::with_center(center, r.radii).map_err(serde::de::Error::custom)
    }
}

/// One summand of a catalog weight.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightTerm {
    Constant { a: f64 },
    Quadratic { c: Vec<f64> },
    LogMonomial { c: Vec<f64> },
    LogDivisor { g: Poly, c: f64 },
    ModulusSquared { h: Poly, c: f64 },
}

/// A catalog weight `ψ(z, w)`; the zero weight has no terms.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    z_arity: usize,
    w_arity: usize,
    terms: Vec<WeightTerm>,
}

impl WeightSpec {
    pub fn zero(z_arity: usize) -> Self {
        WeightSpec {
            z_arity,
            w_arity: 0,
            terms: Vec::new(),
        }
    }

    pub fn new(z_arity: usize, w_arity: usize, terms: Vec<WeightTerm>) -> Result<Self> {
        let spec = WeightSpec {
            z_arity,
            w_arity,
            terms,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fiber(z_arity: usize, terms: Vec<WeightTerm>) -> Result<Self> {
        Self::new(z_arity, 0, terms)
    }

    pub fn z_arity(&self) -> usize {
        self.z_arity
    }

    pub fn w_arity(&self) -> usize {
        self.w_arity
    }

    pub fn terms(&self) -> &[WeightTerm] {
        &self.terms
    }

    fn joint_arity(&self) -> usize {
        self.z_arity + self.w_arity
    }

    /// Checks the parameter constraints that make each term psh.
    pub fn validate(&self) -> Result<()> {
        let k = self.joint_arity();
        if self.z_arity == 0 {
            return Err(Error::invalid("weight needs z arity >= 1"));
        }
        for t in &self.terms {
            match t {
                WeightTerm::Constant { a } => {
                    if a.is_nan() || *a == f64::INFINITY {
                        return Err(Error::invalid("constant term must be finite or -inf"));
                    }
                }
                WeightTerm::Quadratic { c } | WeightTerm::LogMonomial { c } => {
                    if c.len() != k {
                        return Err(Error::ArityMismatch {
                            expected: k,
                            found: c.len(),
                        });
                    }
                    if c.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                        return Err(Error::invalid("coefficients must be finite and >= 0"));
                    }
                }
                WeightTerm::LogDivisor { g, c } => {
                    if g.arity() != k {
                        return Err(Error::ArityMismatch {
                            expected: k,
                            found: g.arity(),
                        });
                    }
                    if !(*c > 0.0) || !c.is_finite() {
                        return Err(Error::invalid("logDivisor needs c > 0"));
                    }
                    if g.is_zero() {
                        return Err(Error::invalid("logDivisor generator is identically zero"));
                    }
                }
                WeightTerm::ModulusSquared { h, c } => {
                    if h.arity() != k {
                        return Err(Error::ArityMismatch {
                            expected: k,
                            found: h.arity(),
                        });
                    }
                    if !(*c >= 0.0) || !c.is_finite() {
                        return Err(Error::invalid("modulusSquared needs c >= 0"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `ψ(z, w)`, possibly `−∞`.
    pub fn eval(&self, z: &[C64], w: &[C64]) -> Result<f64> {
        if z.len() != self.z_arity {
            return Err(Error::ArityMismatch {
                expected: self.z_arity,
                found: z.len(),
            });
        }
        if w.len() != self.w_arity {
            return Err(Error::ArityMismatch {
                expected: self.w_arity,
                found: w.len(),
            });
        }
        let mut x = z.to_vec();
        x.extend_from_slice(w);
        Ok(self.eval_joint(&x))
    }

    pub(crate) fn eval_joint(&self, x: &[C64]) -> f64 {
        self.terms.iter().map(|t| eval_term(t, x)).sum()
    }

    /// True if any term depends on `w`.
    pub fn depends_on_w(&self) -> bool {
        let n = self.z_arity;
        self.terms.iter().any(|t| match t {
            WeightTerm::Constant { .. } => false,
            WeightTerm::Quadratic { c } | WeightTerm::LogMonomial { c } => c[n..].iter().any(|v| *v != 0.0),
            WeightTerm::LogDivisor { g, .. } => g.depends_on_tail(self.w_arity),
            WeightTerm::ModulusSquared { h, .. } => h.depends_on_tail(self.w_arity),
        })
    }

    /// True if the non-constant, non-divisor part of `ψ_w` varies with `w`.
    ///
    /// Quadratic and logMonomial terms split as `a(z) + b(w)`, so their `w`
    /// part only shifts `ψ_w` by a constant; a modulus term changes shape
    /// only when `h` involves both `z` and `w`.
    pub fn regular_part_depends_on_w(&self) -> bool {
        let n = self.z_arity;
        self.terms.iter().any(|t| match t {
            WeightTerm::ModulusSquared { h, .. } => {
                let vars = h.support_vars();
                vars.iter().any(|&v| v < n) && vars.iter().any(|&v| v >= n)
            }
            _ => false,
        })
    }

    /// The fiber weight `ψ_w = ψ(·, w)`.
    pub fn specialize(&self, w: &[C64]) -> Result<WeightSpec> {
        if w.len() != self.w_arity {
            return Err(Error::ArityMismatch {
                expected: self.w_arity,
                found: w.len(),
            });
        }
        let n = self.z_arity;
        let mut terms = Vec::with_capacity(self.terms.len());
        let mut shift = 0.0;
        for t in &self.terms {
            match t {
                WeightTerm::Constant { a } => shift += a,
                WeightTerm::Quadratic { c } => {
                    shift += c[n..].iter().zip(w).map(|(ci, wi)| ci * wi.norm_sqr()).sum::<f64>();
                    if c[..n].iter().any(|v| *v != 0.0) {
                        terms.push(WeightTerm::Quadratic { c: c[..n].to_vec() });
                    }
                }
                WeightTerm::LogMonomial { c } => {
                    for (ci, wi) in c[n..].iter().zip(w) {
                        if *ci != 0.0 {
                            shift += 2.0 * ci * wi.norm().ln();
                        }
                    }
                    if c[..n].iter().any(|v| *v != 0.0) {
                        terms.push(WeightTerm::LogMonomial { c: c[..n].to_vec() });
                    }
                }
                WeightTerm::LogDivisor { g, c } => {
                    let gw = g.specialize_tail(w)?;
                    match gw.degree() {
                        None => shift += f64::NEG_INFINITY,
                        Some(0) => shift += 2.0 * c * gw.coeff(&MultiIndex::zero(n)).norm().ln(),
                        Some(_) => terms.push(WeightTerm::LogDivisor { g: gw, c: *c }),
                    }
                }
                WeightTerm::ModulusSquared { h, c } => {
                    let hw = h.specialize_tail(w)?;
                    match hw.degree() {
                        None => {}
                        Some(0) => shift += c * hw.coeff(&MultiIndex::zero(n)).norm_sqr(),
                        Some(_) => terms.push(WeightTerm::ModulusSquared { h: hw, c: *c }),
                    }
                }
            }
        }
        if shift != 0.0 {
            terms.push(WeightTerm::Constant { a: shift });
        }
        Ok(WeightSpec {
            z_arity: n,
            w_arity: 0,
            terms,
        })
    }

    /// Reinterpret `(z, w)` as one block of `z` variables.
    pub fn flatten(&self) -> WeightSpec {
        WeightSpec {
            z_arity: self.z_arity + self.w_arity,
            w_arity: 0,
            terms: self.terms.clone(),
        }
    }

    /// Add a real constant to the weight.
    pub fn shifted(&self, a: f64) -> WeightSpec {
        let mut out = self.clone();
        out.terms.push(WeightTerm::Constant { a });
        out
    }

    /// Sum of constant terms (`−∞` if the weight is identically `−∞`).
    pub fn constant_shift(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| match t {
                WeightTerm::Constant { a } => *a,
                _ => 0.0,
            })
            .sum()
    }

    /// Split off the constant terms: `ψ = ψ₀ + a`.
    pub fn without_constants(&self) -> (WeightSpec, f64) {
        let a = self.constant_shift();
        let mut out = self.clone();
        out.terms.retain(|t| !matches!(t, WeightTerm::Constant { .. }));
        (out, a)
    }

    pub fn is_identically_neg_inf(&self) -> bool {
        self.constant_shift() == f64::NEG_INFINITY
    }

    /// Product of all divisor generators; requires `c = 1` on each.
    pub(crate) fn divisor_factor(&self) -> Result<Option<Poly>> {
        let mut acc: Option<Poly> = None;
        for t in &self.terms {
            if let WeightTerm::LogDivisor { g, c } = t {
                if *c != 1.0 {
                    return Err(Error::UnsupportedWeight(format!(
                        "logDivisor with c = {c}; the factored model requires c = 1"
                    )));
                }
                acc = Some(match acc {
                    None => g.clone(),
                    Some(p) => &p * g,
                });
            }
        }
        Ok(acc)
    }

    /// Non-divisor terms.
    pub(crate) fn regular_terms(&self) -> impl Iterator<Item = &WeightTerm> {
        self.terms
            .iter()
            .filter(|t| !matches!(t, WeightTerm::LogDivisor { .. }))
    }

    /// Per-variable logMonomial exponents summed over terms.
    pub(crate) fn log_monomial_exponents(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.joint_arity()];
        for t in &self.terms {
            if let WeightTerm::LogMonomial { c: ci } = t {
                for (a, b) in c.iter_mut().zip(ci) {
                    *a += b;
                }
            }
        }
        c
    }

    /// Regular part is constants and logMonomials only.
    pub(crate) fn regular_is_closed_form(&self) -> bool {
        self.regular_terms()
            .all(|t| matches!(t, WeightTerm::Constant { .. } | WeightTerm::LogMonomial { .. }))
    }

    /// If the regular part is a sum of functions of one variable each,
    /// returns `ψ_reg(x) − const = Σᵢ ψᵢ(xᵢ)` as per-variable closures.
    pub(crate) fn separable_regular(&self) -> Option<SeparableWeight> {
        let k = self.joint_arity();
        let mut quad = vec![0.0; k];
        let mut logm = vec![0.0; k];
        let mut moduli: Vec<Vec<(Poly, f64)>> = vec![Vec::new(); k];
        for t in self.regular_terms() {
            match t {
                WeightTerm::Constant { .. } => {}
                WeightTerm::Quadratic { c } => {
                    for (a, b) in quad.iter_mut().zip(c) {
                        *a += b;
                    }
                }
                WeightTerm::LogMonomial { c } => {
                    for (a, b) in logm.iter_mut().zip(c) {
                        *a += b;
                    }
                }
                WeightTerm::ModulusSquared { h, c } => {
                    let vars = h.support_vars();
                    match vars.as_slice() {
                        [] => {}
                        [i] => moduli[*i].push((restrict_to_var(h, *i), *c)),
                        _ => return None,
                    }
                }
                WeightTerm::LogDivisor { .. } => unreachable!(),
            }
        }
        Some(SeparableWeight {
            quad,
            logm,
            moduli,
            constant: self.constant_shift(),
        })
    }
}

/// `ψ_reg(x) = const + Σᵢ ψᵢ(xᵢ)`.
pub(crate) struct SeparableWeight {
    quad: Vec<f64>,
    logm: Vec<f64>,
    moduli: Vec<Vec<(Poly, f64)>>,
    pub constant: f64,
}

impl SeparableWeight {
    pub fn eval_var(&self, i: usize, x: C64) -> f64 {
        let mut v = self.quad[i] * x.norm_sqr();
        if self.logm[i] != 0.0 {
            v += 2.0 * self.logm[i] * x.norm().ln();
        }
        for (h, c) in &self.moduli[i] {
            v += c * h.eval_unchecked(&[x]).norm_sqr();
        }
        v
    }
}

/// Univariate polynomial in `x_i` from a polynomial depending only on `x_i`.
fn restrict_to_var(p: &Poly, i: usize) -> Poly {
    let mut out = Poly::zero(1);
    for (e, c) in p.terms() {
        out.add_term(MultiIndex::new(vec![e.get(i)]), *c);
    }
    out
}

fn eval_term(t: &WeightTerm, x: &[C64]) -> f64 {
    match t {
        WeightTerm::Constant { a } => *a,
        WeightTerm::Quadratic { c } => c.iter().zip(x).map(|(ci, xi)| ci * xi.norm_sqr()).sum(),
        WeightTerm::LogMonomial { c } => c
            .iter()
            .zip(x)
            .filter(|(ci, _)| **ci != 0.0)
            .map(|(ci, xi)| 2.0 * ci * xi.norm().ln())
            .sum(),
        WeightTerm::LogDivisor { g, c } => 2.0 * c * g.eval_unchecked(x).norm().ln(),
        WeightTerm::ModulusSquared { h, c } => c * h.eval_unchecked(x).norm_sqr(),
    }
}

/// `∫_{Δ_R} |z^α|² Π|zᵢ|^{−2cᵢ}` in closed form, or `+∞` when some
/// `αᵢ − cᵢ + 1 ≤ 0`.
///
/// For `c = 0` this is `πⁿ R^{2(|α|+n)} / Π(αᵢ + 1)` on the equal-radius
/// polydisc.
pub fn monomial_moment(radii: &[f64], alpha: &MultiIndex, c: &[f64]) -> f64 {
    let mut acc = 1.0;
    for i in 0..radii.len() {
        let s = f64::from(alpha.get(i)) - c[i] + 1.0;
        if s <= 0.0 {
            return f64::INFINITY;
        }
        acc *= PI * radii[i].powf(2.0 * s) / s;
    }
    acc
}

/// Generators of the multiplier ideal `I(ψ)_o` for the oracle-supported
/// weights: smooth terms plus either logMonomial terms or `c = 1`
/// divisors (not both).
pub fn multiplier_ideal_generators(spec: &WeightSpec) -> Result<Vec<Poly>> {
    if spec.w_arity != 0 {
        return Err(Error::UnsupportedWeight(
            "multiplier oracle needs a fiber weight; specialize first".into(),
        ));
    }
    let n = spec.z_arity;
    if spec.is_identically_neg_inf() {
        return Ok(Vec::new());
    }
    let has_log = spec.terms.iter().any(|t| matches!(t, WeightTerm::LogMonomial { .. }));
    let has_div = spec.terms.iter().any(|t| matches!(t, WeightTerm::LogDivisor { .. }));
    if has_log && has_div {
        return Err(Error::UnsupportedWeight(
            "mixed logMonomial and logDivisor singularities; use the divergence probe".into(),
        ));
    }
    if has_log {
        let c = spec.log_monomial_exponents();
        let exp: Vec<u32> = c.iter().map(|ci| ci.floor().max(0.0) as u32).collect();
        return Ok(vec![Poly::monomial(MultiIndex::new(exp), C64::new(1.0, 0.0))]);
    }
    if has_div {
        // rejects divisor exponents other than 1
        spec.divisor_factor()?;
        let origin = vec![C64::new(0.0, 0.0); n];
        // units at the origin do not change the germ ideal
        let mut local = Poly::one(n);
        for t in &spec.terms {
            if let WeightTerm::LogDivisor { g: gi, .. } = t {
                if gi.eval_unchecked(&origin).norm() < 1e-14 * gi.max_abs().max(1.0) {
                    local = &local * gi;
                }
            }
        }
        return Ok(vec![local]);
    }
    Ok(vec![Poly::one(n)])
}

/// Exact germ membership `f ∈ I(ψ)_o` for the oracle-supported weights.
///
/// logMonomial weights give monomial ideals, so membership is checked term
/// by term. Divisor weights (`c = 1`) give principal ideals `(g)`; membership
/// is polynomial divisibility, which equals germ membership when every
/// component of `{g = 0}` passes through the origin.
pub fn multiplier_membership(spec: &WeightSpec, f: &Poly) -> Result<bool> {
    if f.arity() != spec.z_arity {
        return Err(Error::ArityMismatch {
            expected: spec.z_arity,
            found: f.arity(),
        });
    }
    let gens = multiplier_ideal_generators(spec)?;
    if f.is_zero() {
        return Ok(true);
    }
    let Some(g) = gens.first() else {
        return Ok(false);
    };
    if g.num_terms() == 1 && g.degree().is_some() {
        let (e, _) = g.terms().next().expect("one term");
        if g.degree() == Some(0) {
            return Ok(true);
        }
        let has_div = spec.terms.iter().any(|t| matches!(t, WeightTerm::LogDivisor { .. }));
        if !has_div {
            return Ok(f.terms().all(|(a, _)| a.dominates(e)));
        }
    }
    Ok(divides(g, f))
}

/// Polynomial divisibility `g | f` by least squares on the quotient's
/// coefficients.
pub fn divides(g: &Poly, f: &Poly) -> bool {
    if f.is_zero() {
        return true;
    }
    let (Some(dg), Some(df)) = (g.degree(), f.degree()) else {
        return false;
    };
    if dg == 0 {
        return true;
    }
    if df < dg {
        return false;
    }
    let n = f.arity();
    let quot_basis = MultiIndex::all_up_to(n, df - dg);
    let prod_basis = MultiIndex::all_up_to(n, df);
    let pos = |e: &MultiIndex| prod_basis.binary_search(e).expect("degree bound");
    let mut a = CMat::zeros(prod_basis.len(), quot_basis.len());
    for (j, q) in quot_basis.iter().enumerate() {
        for (e, c) in g.terms() {
            a[(pos(&e.add(q)), j)] += c;
        }
    }
    let mut b = CVec::zeros(prod_basis.len());
    for (e, c) in f.terms() {
        b[pos(e)] = *c;
    }
    let q = column_space(&a, 1e-12);
    let proj = &q * (q.adjoint() * &b);
    let res = (&b - proj).norm();
    res <= 1e-9 * b.norm()
}

/// Outcome of a divergence probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbeVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub verdict: ProbeVerdict,
    pub slope: f64,
    pub cutoffs: Vec<f64>,
    pub integrals: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeSpec {
    /// Outer radius of the polydisc around the origin.
    pub outer_radius: f64,
    /// Gauss–Legendre nodes per radial panel.
    pub panel_nodes: usize,
    pub angular: usize,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            outer_radius: 1.0,
            panel_nodes: 20,
            angular: 24,
        }
    }
}

/// Slope thresholds of the probe classifier.
pub const PROBE_DIVERGENT_SLOPE: f64 = -0.1;
pub const PROBE_FLAT_SLOPE: f64 = 0.02;
pub const PROBE_CAUCHY_REL: f64 = 1e-2;

/// Numerical integrability test for `|f|² e^{−ψ}` near the origin.
///
/// Integrates over the polydisc of radius `outer_radius` with an
/// `ε`-neighborhood of the singular coordinate hyperplanes removed, for each
/// `ε` in `cutoffs`, and fits the slope of `log I` against `log ε`. A
/// logarithmic or power divergence shows a clearly negative slope; a
/// convergent integral flattens out.
///
/// Divisor weights are supported when the divisor is a single linear form;
/// a unitary change of coordinates makes it a coordinate hyperplane.
pub fn divergence_probe(spec: &WeightSpec, f: &Poly, cutoffs: &[f64], probe: &ProbeSpec) -> Result<ProbeReport> {
    if cutoffs.len() < 4 {
        return Err(Error::TooFewLevels {
            found: cutoffs.len(),
            needed: 4,
        });
    }
    if cutoffs.windows(2).any(|w| !(w[1] < w[0])) || cutoffs.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("cutoffs must be positive and strictly decreasing"));
    }
    if cutoffs[0] >= probe.outer_radius {
        return Err(Error::invalid("cutoffs must lie below the outer radius"));
    }
    if spec.w_arity != 0 {
        return Err(Error::UnsupportedWeight("probe needs a fiber weight".into()));
    }
    let n = spec.z_arity;
    if f.arity() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: f.arity(),
        });
    }
    // coordinates u with z = Qᴴ u; singular set is {u_i = 0 for i in singular}
    let mut q = CMat::identity(n, n);
    let mut singular: Vec<bool> = spec.log_monomial_exponents().iter().map(|c| *c > 0.0).collect();
    let divisors: Vec<&Poly> = spec
        .terms
        .iter()
        .filter_map(|t| match t {
            WeightTerm::LogDivisor { g, .. } => Some(g),
            _ => None,
        })
        .collect();
    if !divisors.is_empty() {
        if divisors.len() > 1 || singular.iter().any(|s| *s) {
            return Err(Error::UnsupportedWeight(
                "probe supports a single linear divisor".into(),
            ));
        }
        let g = divisors[0];
        let linear = g.terms().all(|(e, _)| e.order() == 1);
        if !linear {
            return Err(Error::UnsupportedWeight(
                "probe supports homogeneous linear divisors only".into(),
            ));
        }
        let a: Vec<C64> = (0..n).map(|i| g.coeff(&MultiIndex::unit(n, i))).collect();
        q = unitary_with_first_row(&a);
        singular = vec![false; n];
        singular[0] = true;
    }
    let qh = q.adjoint();
    let integrals: Vec<f64> = cutoffs
        .iter()
        .map(|&eps| probe_integral(spec, f, &qh, &singular, eps, probe))
        .collect();
    if integrals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Ok(ProbeReport {
            verdict: ProbeVerdict::Inconclusive,
            slope: f64::NAN,
            cutoffs: cutoffs.to_vec(),
            integrals,
        });
    }
    let xs: Vec<f64> = cutoffs.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let k = integrals.len();
    let cauchy = (integrals[k - 1] - integrals[k - 2]).abs() <= PROBE_CAUCHY_REL * integrals[k - 1].abs();
    let verdict = if slope <= PROBE_DIVERGENT_SLOPE {
        ProbeVerdict::Divergent
    } else if slope.abs() < PROBE_FLAT_SLOPE && cauchy {
        ProbeVerdict::Convergent
    } else {
        ProbeVerdict::Inconclusive
    };
    Ok(ProbeReport {
        verdict,
        slope,
        cutoffs: cutoffs.to_vec(),
        integrals,
    })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Unitary matrix whose first row is `a/|a|` (Gram–Schmidt completion).
fn unitary_with_first_row(a: &[C64]) -> CMat {
    let n = a.len();
    let mut rows: Vec<CVec> = Vec::with_capacity(n);
    let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    rows.push(CVec::from_iterator(n, a.iter().map(|x| x / norm)));
    for i in 0..n {
        if rows.len() == n {
            break;
        }
        let mut v = CVec::zeros(n);
        v[i] = C64::new(1.0, 0.0);
        for r in &rows {
            // rows are orthonormal in the sense Σ r_k conj(s_k) = δ
            let proj: C64 = v.iter().zip(r.iter()).map(|(x, y)| x * y.conj()).sum();
            v -= r * proj;
        }
        let nv = v.norm();
        if nv > 1e-8 {
            rows.push(v / C64::new(nv, 0.0));
        }
    }
    let mut q = CMat::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        for k in 0..n {
            q[(i, k)] = r[k];
        }
    }
    q
}

fn probe_integral(spec: &WeightSpec, f: &Poly, qh: &CMat, singular: &[bool], eps: f64, probe: &ProbeSpec) -> f64 {
    let n = singular.len();
    let big_r = probe.outer_radius;
    let dtheta = 2.0 * PI / probe.angular as f64;
    let per_var: Vec<Vec<(C64, f64)>> = singular
        .iter()
        .map(|&sing| {
            let radial: Vec<(f64, f64)> = if sing {
                // geometric panels [ε, 10ε], [10ε, 100ε], ... up to R
                let mut pts = Vec::new();
                let mut lo = eps;
                while lo < big_r {
                    let hi = (lo * 10.0).min(big_r);
                    pts.extend(gauss_legendre_on(probe.panel_nodes, lo, hi));
                    lo = hi;
                }
                pts
            } else {
                gauss_legendre_on(2 * probe.panel_nodes, 0.0, big_r)
            };
            let mut nodes = Vec::with_capacity(radial.len() * probe.angular);
            for (r, wr) in radial {
                for k in 0..probe.angular {
                    nodes.push((C64::from_polar(r, dtheta * k as f64), wr * r * dtheta));
                }
            }
            nodes
        })
        .collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; n];
    let mut u = vec![C64::new(0.0, 0.0); n];
    let mut z = vec![C64::new(0.0, 0.0); n];
    loop {
        let mut wt = 1.0;
        for i in 0..n {
            let (p, w) = per_var[i][idx[i]];
            u[i] = p;
            wt *= w;
        }
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = (0..n).map(|k| qh[(r, k)] * u[k]).sum();
        }
        let psi = spec.eval_joint(&z);
        total += wt * f.eval_unchecked(&z).norm_sqr() * (-psi).exp();
        let mut i = 0;
        loop {
            if i == n {
                return total;
            }
            idx[i] += 1;
            if idx[i] < per_var[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "camelCase", deny_unknown_fields)]
enum TermRepr {
    Constant { a: f64 },
    Quadratic { c: Vec<f64> },
    LogMonomial { c: Vec<f64> },
    LogDivisor { g: Vec<JointTerm>, c: f64 },
    ModulusSquared { h: Vec<JointTerm>, c: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct WeightRepr {
    z_arity: usize,
    #[serde(default)]
    w_arity: usize,
    #[serde(default)]
    terms: Vec<TermRepr>,
}

impl Serialize for WeightSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.z_arity;
        WeightRepr {
            z_arity: n,
            w_arity: self.w_arity,
            terms: self
                .terms
                .iter()
                .map(|t| match t {
                    WeightTerm::Constant { a } => TermRepr::Constant { a: *a },
                    WeightTerm::Quadratic { c } => TermRepr::Quadratic { c: c.clone() },
                    WeightTerm::LogMonomial { c } => TermRepr::LogMonomial { c: c.clone() },
                    WeightTerm::LogDivisor { g, c } => TermRepr::LogDivisor {
                        g: joint_to_terms(g, n),
                        c: *c,
                    },
                    WeightTerm::ModulusSquared { h, c } => TermRepr::ModulusSquared {
                        h: joint_to_terms(h, n),
                        c: *c,
                    },
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = WeightRepr::deserialize(d)?;
        let (n, m) = (r.z_arity, r.w_arity);
        let terms = r
            .terms
            .into_iter()
            .map(|t| {
                Ok(match t {
                    TermRepr::Constant { a } => WeightTerm::Constant { a },
                    TermRepr::Quadratic { c } => WeightTerm::Quadratic { c },
                    TermRepr::LogMonomial { c } => WeightTerm::LogMonomial { c },
                    TermRepr::LogDivisor { g, c } => WeightTerm::LogDivisor {
                        g: joint_from_terms(n, m, &g)?,
                        c,
                    },
                    TermRepr::ModulusSquared { h, c } => WeightTerm::ModulusSquared {
                        h: joint_from_terms(n, m, &h)?,
                        c,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        WeightSpec::new(n, m, terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn lin(n: usize, coeffs: &[(usize, C64)]) -> Poly {
        Poly::from_terms(n, coeffs.iter().map(|(i, a)| (MultiIndex::unit(n, *i), *a))).unwrap()
    }

    #[test]
    fn eval_examples() {
        let zero = WeightSpec::zero(2);
        assert_eq!(zero.eval(&[c(0.3, 0.1), c(0.0, 0.0)], &[]).unwrap(), 0.0);

        let lm = WeightSpec::fiber(1, vec![WeightTerm::LogMonomial { c: vec![1.0] }]).unwrap();
        let v = lm.eval(&[c(0.5, 0.0)], &[]).unwrap();
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!((v + 1.3863).abs() < 1e-4);

        // g = z₁ − w z₂ on the divisor
        let g = joint_from_terms(
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
        let ld = WeightSpec::new(2, 1, vec![WeightTerm::LogDivisor { g, c: 1.0 }]).unwrap();
        assert_eq!(
            ld.eval(&[c(1.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0)]).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(ld.eval(&[c(1.0, 0.0)], &[c(1.0, 0.0)]).is_err());
        assert!(ld.depends_on_w());
        assert!(!ld.regular_part_depends_on_w());
    }

    #[test]
    fn validation_rejects_non_psh_parameters() {
        assert!(WeightSpec::fiber(1, vec![WeightTerm::Quadratic { c: vec![-1.0] }]).is_err());
        assert!(WeightSpec::fiber(1, vec![WeightTerm::LogMonomial { c: vec![1.0, 1.0] }]).is_err());
        assert!(WeightSpec::fiber(
            1,
            vec![WeightTerm::LogDivisor {
                g: Poly::var(1, 0),
                c: 0.0
            }]
        )
        .is_err());
    }

    #[test]
    fn specialization_moves_w_terms_into_constants() {
        let spec = WeightSpec::new(1, 1, vec![WeightTerm::Quadratic { c: vec![1.0, 1.0] }]).unwrap();
        let fib = spec.specialize(&[c(0.0, 0.5)]).unwrap();
        assert!((fib.constant_shift() - 0.25).abs() < 1e-15);
        let z = [c(0.3, 0.2)];
        let w = [c(0.0, 0.5)];
        assert!((fib.eval(&z, &[]).unwrap() - spec.eval(&z, &w).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn moments() {
        let pi = PI;
        assert!((monomial_moment(&[1.0], &MultiIndex::from([1]), &[0.0]) - pi / 2.0).abs() < 1e-15);
        assert!((monomial_moment(&[1.0, 1.0], &MultiIndex::from([1, 0]), &[0.0, 0.0]) - pi * pi / 2.0).abs() < 1e-14);
        assert!((monomial_moment(&[1.0], &MultiIndex::from([0]), &[0.5]) - 2.0 * pi).abs() < 1e-14);
        assert_eq!(monomial_moment(&[1.0], &MultiIndex::from([0]), &[1.0]), f64::INFINITY);
        // general radius against the moment formula πⁿR^{2(|α|+n)}/Π(αᵢ+1)
        let r: f64 = 0.7;
        let m = monomial_moment(&[r, r], &MultiIndex::from([2, 1]), &[0.0, 0.0]);
        let expect = pi * pi * r.powi(2 * (3 + 2)) / (3.0 * 2.0);
        assert!((m - expect).abs() < 1e-15 * expect.max(1.0));
    }

    #[test]
    fn oracle_log_monomial() {
        let spec = WeightSpec::fiber(1, vec![WeightTerm::LogMonomial { c: vec![1.5] }]).unwrap();
        let z = |k: u32| Poly::monomial(MultiIndex::from([k]), c(1.0, 0.0));
        assert!(!multiplier_membership(&spec, &z(0)).unwrap());
        assert!(multiplier_membership(&spec, &z(1)).unwrap());
        assert!(multiplier_membership(&spec, &z(2)).unwrap());
    }

    #[test]
    fn oracle_divisor() {
        let g = lin(2, &[(0, c(1.0, 0.0)), (1, c(-1.0, 0.0))]);
        let spec = WeightSpec::fiber(2, vec![WeightTerm::LogDivisor { g: g.clone(), c: 1.0 }]).unwrap();
        assert!(multiplier_membership(&spec, &g).unwrap());
        assert!(!multiplier_membership(&spec, &Poly::var(2, 0)).unwrap());
        let prod = &g * &(&Poly::var(2, 1) + &Poly::one(2));
        assert!(multiplier_membership(&spec, &prod).unwrap());
        let bad = WeightSpec::fiber(2, vec![WeightTerm::LogDivisor { g, c: 0.5 }]).unwrap();
        assert!(matches!(
            multiplier_membership(&bad, &Poly::one(2)),
            Err(Error::UnsupportedWeight(_))
        ));
    }

    #[test]
    fn oracle_zero_weight_contains_everything() {
        let spec = WeightSpec::zero(2);
        for f in [Poly::one(2), Poly::var(2, 1), Poly::zero(2)] {
            assert!(multiplier_membership(&spec, &f).unwrap());
        }
    }

    #[test]
    fn probe_examples() {
        let cut = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
        let p = ProbeSpec::default();
        let one = Poly::one(1);
        let z = Poly::var(1, 0);
        let r = divergence_probe(&WeightSpec::zero(1), &one, &cut, &p).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Convergent);
        let lz = WeightSpec::fiber(1, vec![WeightTerm::LogMonomial { c: vec![1.0] }]).unwrap();
        let r = divergence_probe(&lz, &one, &cut, &p).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Divergent, "{r:?}");
        // exact value 2π log(1/ε)
        for (e, v) in r.cutoffs.iter().zip(&r.integrals) {
            assert!((v - 2.0 * PI * (1.0 / e).ln()).abs() < 1e-8 * v);
        }
        let r = divergence_probe(&lz, &z, &cut, &p).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Convergent, "{r:?}");
        assert!(matches!(
            divergence_probe(&lz, &z, &cut[..3], &p),
            Err(Error::TooFewLevels { found: 3, needed: 4 })
        ));
    }

    #[test]
    fn probe_confirms_divisor_oracle() {
        let g = lin(2, &[(0, c(1.0, 0.0)), (1, c(-1.0, 0.0))]);
        let spec = WeightSpec::fiber(2, vec![WeightTerm::LogDivisor { g: g.clone(), c: 1.0 }]).unwrap();
        let cut = [1e-1, 1e-2, 1e-3, 1e-4];
        let p = ProbeSpec {
            panel_nodes: 8,
            angular: 16,
            ..ProbeSpec::default()
        };
        let member = divergence_probe(&spec, &g, &cut, &p).unwrap();
        assert_eq!(member.verdict, ProbeVerdict::Convergent, "{member:?}");
        let non = divergence_probe(&spec, &Poly::var(2, 0), &cut, &p).unwrap();
        assert_eq!(non.verdict, ProbeVerdict::Divergent, "{non:?}");
    }

    #[test]
    fn json_roundtrip() {
        let s = r#"{"zArity":1,"wArity":1,"terms":[{"variant":"quadratic","c":[1.0,1.0]},
            {"variant":"logDivisor","g":[{"alpha":[1],"beta":[0],"re":1.0},{"alpha":[0],"beta":[1],"re":-1.0}],"c":1.0}]}"#;
        let w: WeightSpec = serde_json::from_str(s).unwrap();
        assert_eq!(w.terms().len(), 2);
        let back: WeightSpec = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<WeightSpec>(r#"{"zArity":1,"terms":[{"variant":"bogus"}]}"#).is_err());
        assert!(
            serde_json::from_str::<WeightSpec>(r#"{"zArity":1,"terms":[{"variant":"quadratic","c":[-2.0]}]}"#).is_err()
        );
    }
}
