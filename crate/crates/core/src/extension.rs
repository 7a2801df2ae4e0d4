//! Minimum-norm holomorphic extension from a central fiber, the optimal
//! constant `πr²` check, and the Jensen/Fubini chain diagnostic.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::bergman::{BasisSpec, GramModel, GramOptions};
use crate::error::{Error, Result};
use crate::fiberwise::FamilyProblem;
use crate::linalg::{CMat, CVec};
use crate::multi_index::MultiIndex;
use crate::poly::{Poly, C64};
use crate::quadrature::{DiscRule, QuadSpec};
use crate::weights::{Polydisc, WeightSpec, WeightTerm};

/// Extension from `Ω_{w₀}` to `Ω = D × Δ(w₀, r)` with a joint weight.
#[derive(Clone, Debug)]
pub struct ExtensionProblem {
    pub fiber: Polydisc,
    pub w0: C64,
    pub radius: f64,
    /// Joint weight with `w` arity 1.
    pub weight: WeightSpec,
    pub z_degree: usize,
    pub w_degree: usize,
    pub quad: QuadSpec,
}

impl ExtensionProblem {
    fn validate(&self) -> Result<()> {
        let n = self.fiber.arity();
        if self.weight.z_arity() != n || self.weight.w_arity() != 1 {
            return Err(Error::invalid(
                "extension needs a joint weight with z arity n and w arity 1",
            ));
        }
        if !(self.radius > 0.0) {
            return Err(Error::invalid("base radius must be positive"));
        }
        if self
            .weight
            .terms()
            .iter()
            .any(|t| matches!(t, WeightTerm::LogDivisor { .. }))
        {
            return Err(Error::UnsupportedWeight(
                "extension does not support divisor weights".into(),
            ));
        }
        Ok(())
    }

    pub fn joint_domain(&self) -> Polydisc {
        let base = Polydisc {
            center: vec![self.w0],
            radii: vec![self.radius],
        };
        self.fiber.product(&base)
    }

    fn opts(&self) -> GramOptions {
        GramOptions {
            quad: self.quad,
            force_quadrature: false,
        }
    }

    /// Joint model on the basis `(z − c)^a (w − w₀)^b`, `|a| ≤ d_z`, `b ≤ d_w`.
    pub fn joint_model(&self) -> Result<GramModel> {
        self.validate()?;
        let n = self.fiber.arity();
        let mut exps = Vec::new();
        for a in MultiIndex::all_up_to(n, self.z_degree) {
            for b in 0..=self.w_degree as u32 {
                exps.push(a.concat(&MultiIndex::new(vec![b])));
            }
        }
        GramModel::assemble(
            &self.joint_domain(),
            &self.weight.flatten(),
            &BasisSpec::Explicit(exps),
            &self.opts(),
        )
    }

    /// Fiber model at `w₀` with basis degree `d_z`.
    pub fn fiber_model(&self) -> Result<GramModel> {
        self.validate()?;
        GramModel::assemble(
            &self.fiber,
            &self.weight.specialize(&[self.w0])?,
            &BasisSpec::TotalDegree(self.z_degree),
            &self.opts(),
        )
    }

    /// Coefficients of `f` in powers of `z − c`.
    fn centered(&self, f: &Poly) -> Result<Poly> {
        if f.arity() != self.fiber.arity() {
            return Err(Error::ArityMismatch {
                expected: self.fiber.arity(),
                found: f.arity(),
            });
        }
        let zero = vec![C64::new(0.0, 0.0); f.arity()];
        f.recenter(&zero, &self.fiber.center)
    }
}

/// A minimal extension in the joint basis.
#[derive(Clone, Debug)]
pub struct Extension {
    pub model: GramModel,
    pub coeffs: CVec,
    pub joint_norm: f64,
    /// `‖(Gc)_free‖ / ‖Gc‖`, zero for an exact KKT point.
    pub kkt_residual: f64,
    /// Max deviation of `F(·, w₀)` from `f` in coefficients.
    pub restriction_error: f64,
}

impl Extension {
    /// `F_w` as coefficients over `exponents` (fiber basis order).
    pub fn fiber_coeffs(&self, exponents: &[MultiIndex], w: C64, w0: C64) -> CVec {
        let n = exponents.first().map(|e| e.arity()).unwrap_or(0);
        let pos: HashMap<&MultiIndex, usize> = exponents.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let mut out = CVec::zeros(exponents.len());
        let t = w - w0;
        for (e, c) in self.model.exponents().iter().zip(self.coeffs.iter()) {
            let (a, b) = e.split_at(n);
            if let Some(&i) = pos.get(&a) {
                out[i] += c * t.powu(b.get(0));
            }
        }
        out
    }
}

/// Minimize `cᴴ G c` subject to `F(·, w₀) = f`.
///
/// In orthonormal coordinates `c = T y` the norm is `‖y‖²` and the
/// constraint is `R T y = f`, so the minimizer is the minimum-norm solution.
pub fn minimal_extension(prob: &ExtensionProblem, f: &Poly) -> Result<Extension> {
    let fc = prob.centered(f)?;
    let model = prob.joint_model()?;
    let n = prob.fiber.arity();
    let constrained: Vec<usize> = model
        .exponents()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.get(n) == 0)
        .map(|(i, _)| i)
        .collect();
    let mut target = CVec::zeros(constrained.len());
    let mut seen = 0usize;
    for (k, &i) in constrained.iter().enumerate() {
        let (a, _) = model.exponents()[i].split_at(n);
        let v = fc.coeff(&a);
        if v != C64::new(0.0, 0.0) {
            seen += 1;
        }
        target[k] = v;
    }
    if seen != fc.num_terms() {
        return Err(Error::InconsistentConstraints(
            "fiber datum has terms outside the joint basis".into(),
        ));
    }
    let t = model.transform();
    let rt = CMat::from_fn(constrained.len(), t.ncols(), |k, j| t[(constrained[k], j)]);
    let tn = target.norm();
    let y = if tn == 0.0 {
        CVec::zeros(t.ncols())
    } else {
        let svd = rt.clone().svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let y = svd
            .solve(&target, 1e-12 * smax)
            .map_err(|e| Error::InconsistentConstraints(e.to_string()))?;
        if (&rt * &y - &target).norm() > 1e-10 * tn {
            return Err(Error::InconsistentConstraints(
                "restriction map cannot reach the fiber datum".into(),
            ));
        }
        y
    };
    let coeffs = t * &y;
    let g = model.gram() * &coeffs;
    let gn = g.norm();
    let free: f64 = (0..g.len())
        .filter(|i| !constrained.contains(i))
        .map(|i| g[i].norm_sqr())
        .sum::<f64>()
        .sqrt();
    let kkt_residual = if gn == 0.0 { 0.0 } else { free / gn };
    let restriction_error = constrained
        .iter()
        .enumerate()
        .map(|(k, &i)| (coeffs[i] - target[k]).norm())
        .fold(0.0, f64::max);
    let joint_norm = model.norm_sq(&coeffs);
    Ok(Extension {
        model,
        coeffs,
        joint_norm,
        kkt_residual,
        restriction_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtensionReport {
    pub ratio: f64,
    pub fiber_norm: f64,
    pub joint_norm: f64,
    pub kkt_residual: f64,
    pub restriction_error: f64,
}

/// `(1/(πr²))·‖F‖²_Ω / ‖f‖²_{Ω_{w₀}}`.
pub fn optimal_constant_check(prob: &ExtensionProblem, f: &Poly, ext: &Extension) -> Result<ExtensionReport> {
    let fm = prob.fiber_model()?;
    let fc = prob.centered(f)?;
    let v = CVec::from_iterator(fm.exponents().len(), fm.exponents().iter().map(|a| fc.coeff(a)));
    let fiber_norm = fm.norm_sq(&v);
    if !(fiber_norm > 0.0) {
        return Err(Error::ZeroFiberNorm);
    }
    Ok(ExtensionReport {
        ratio: ext.joint_norm / (PI * prob.radius * prob.radius * fiber_norm),
        fiber_norm,
        joint_norm: ext.joint_norm,
        kkt_residual: ext.kkt_residual,
        restriction_error: ext.restriction_error,
    })
}

/// The four sides of the Jensen/Fubini chain, each `≥` the next.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JensenReport {
    /// `log ‖f‖²` on the central fiber.
    pub l0: f64,
    /// `log((1/πr²)‖F‖²_Ω)`.
    pub l1: f64,
    /// Disc average of `log ‖F_w‖²`.
    pub l2: f64,
    /// Disc average of `log|ξ(w)·F_w(z₀)|² − log K(w)`.
    pub l3: f64,
    /// Relative gap between `‖F‖²_Ω` and the area integral of `‖F_w‖²`.
    pub fubini_gap: f64,
    /// `log K(w₀)` and its disc average.
    pub log_k_center: f64,
    pub log_k_average: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Parameters of the Jensen chain diagnostic.
#[derive(Clone, Copy, Debug)]
pub struct JensenSpec {
    pub radius: f64,
    pub w_degree: usize,
    /// Polar rule for disc averages over `w`.
    pub area: QuadSpec,
    /// Quadrature for the joint Gram matrix.
    pub joint_quad: QuadSpec,
    pub tolerance: f64,
}

impl Default for JensenSpec {
    fn default() -> Self {
        JensenSpec {
            radius: 0.2,
            w_degree: 6,
            area: QuadSpec {
                radial: 8,
                angular: 16,
                inner_cutoff: 0.0,
            },
            joint_quad: QuadSpec {
                radial: 16,
                angular: 32,
                inner_cutoff: 0.0,
            },
            tolerance: 1e-3,
        }
    }
}

/// Evaluate the chain for the extremal function at `(z₀, w₀)`.
///
/// `f` is the extremal function of the fiber at `w₀`, `F` its minimal
/// extension to `Δ(w₀, r)`; disc averages use a polar product rule.
pub fn jensen_chain(problem: &FamilyProblem, z0: &[C64], w0: C64, spec: &JensenSpec) -> Result<JensenReport> {
    let JensenSpec {
        radius,
        w_degree,
        area,
        joint_quad,
        tolerance,
    } = *spec;
    if problem.base().arity() != 1 {
        return Err(Error::invalid("the Jensen chain needs a one-dimensional base"));
    }
    let base_r = problem.base().radii[0];
    if (w0 - problem.base().center[0]).norm() + radius >= base_r {
        return Err(Error::OutsideDomain);
    }
    let (model0, a0) = problem.fiber_model(&[w0])?;
    if model0.factor().is_some() {
        return Err(Error::UnsupportedWeight(
            "extension does not support divisor weights".into(),
        ));
    }
    let xi0 = problem.family().eval(&[w0])?;
    let fco = model0.extremal_function(&xi0, z0)?;
    let f = model0.to_poly(&fco);
    let l0 = (model0.norm_sq(&fco) * (-a0).exp()).ln();
    let ext_prob = ExtensionProblem {
        fiber: problem.fiber().clone(),
        w0,
        radius,
        weight: problem.weight().clone(),
        z_degree: problem.degree(),
        w_degree,
        quad: joint_quad,
    };
    let ext = minimal_extension(&ext_prob, &f)?;
    let l1 = (ext.joint_norm / (PI * radius * radius)).ln();
    let rule = DiscRule::new(w0, radius, &area);
    let mut total_w = 0.0;
    let mut avg_norm = 0.0;
    let mut l2 = 0.0;
    let mut l3 = 0.0;
    let mut avg_logk = 0.0;
    for (w, wt) in rule.points.iter().zip(&rule.weights) {
        let (model, a) = problem.fiber_model(&[*w])?;
        let v = ext.fiber_coeffs(model.exponents(), *w, w0);
        let norm = model.norm_sq(&v) * (-a).exp();
        let xi = problem.family().eval(&[*w])?;
        let xif = model.functional_on_basis(&xi, z0)?.dot(&v);
        let k = model.xi_kernel(&xi, z0)? * a.exp();
        total_w += wt;
        avg_norm += wt * norm;
        l2 += wt * norm.ln();
        l3 += wt * (xif.norm_sqr().ln() - k.ln());
        avg_logk += wt * k.ln();
    }
    l2 /= total_w;
    l3 /= total_w;
    avg_norm /= total_w;
    avg_logk /= total_w;
    let joint_avg = ext.joint_norm / (PI * radius * radius);
    let fubini_gap = (avg_norm - joint_avg).abs() / joint_avg;
    let log_k_center = problem.kernel_on_fiber(&[w0], z0)?.ln();
    let holds = l0 >= l1 - tolerance && l1 >= l2 - tolerance && l2 >= l3 - tolerance;
    Ok(JensenReport {
        l0,
        l1,
        l2,
        l3,
        fubini_gap,
        log_k_center,
        log_k_average: avg_logk,
        tolerance,
        holds,
    })
}
