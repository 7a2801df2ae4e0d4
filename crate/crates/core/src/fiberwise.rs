//! Fiberwise kernels `w ↦ K^{ψ_w}_{ξ(w), Ω_w}(z)` on `Ω = D_z × D_w` and
//! numerical plurisubharmonicity checks of their logarithm.

use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::bergman::{BasisSpec, GramCore, GramModel, GramOptions};
use crate::error::{Error, Result};
use crate::family::FamilySource;
use crate::poly::C64;
use crate::psh::{submean, usc_spot_check, PshReport, UscReport};
use crate::quadrature::QuadSpec;
use crate::weights::{Polydisc, WeightSpec};

/// A fiberwise kernel problem on a product of polydiscs.
#[derive(Debug)]
pub struct FamilyProblem {
    fiber: Polydisc,
    base: Polydisc,
    weight: WeightSpec,
    family: FamilySource,
    degree: usize,
    quad: QuadSpec,
    shared_core: OnceLock<Arc<GramCore>>,
}

impl Clone for FamilyProblem {
    fn clone(&self) -> Self {
        FamilyProblem {
            fiber: self.fiber.clone(),
            base: self.base.clone(),
            weight: self.weight.clone(),
            family: self.family.clone(),
            degree: self.degree,
            quad: self.quad,
            shared_core: OnceLock::new(),
        }
    }
}

impl FamilyProblem {
    pub fn new(
        fiber: Polydisc,
        base: Polydisc,
        weight: WeightSpec,
        family: FamilySource,
        degree: usize,
        quad: QuadSpec,
    ) -> Result<Self> {
        let (n, m) = (fiber.arity(), base.arity());
        if weight.z_arity() != n || weight.w_arity() != m {
            return Err(Error::invalid(format!(
                "weight arity ({}, {}) does not match domains ({n}, {m})",
                weight.z_arity(),
                weight.w_arity()
            )));
        }
        let fam = family.family();
        if fam.z_arity() != n || fam.w_arity() != m {
            return Err(Error::invalid(format!(
                "family arity ({}, {}) does not match domains ({n}, {m})",
                fam.z_arity(),
                fam.w_arity()
            )));
        }
        quad.validate(fiber.min_radius())?;
        Ok(FamilyProblem {
            fiber,
            base,
            weight,
            family,
            degree,
            quad,
            shared_core: OnceLock::new(),
        })
    }

    pub fn fiber(&self) -> &Polydisc {
        &self.fiber
    }

    pub fn base(&self) -> &Polydisc {
        &self.base
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn family(&self) -> &FamilySource {
        &self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn opts(&self) -> GramOptions {
        GramOptions {
            quad: self.quad,
            force_quadrature: false,
        }
    }

    /// The fiber model at `w` and the constant `a` with `ψ_w = ψ₀ + a`.
    ///
    /// When the non-divisor part of `ψ` does not depend on `w`, every fiber
    /// shares one Gram core.
    pub fn fiber_model(&self, w: &[C64]) -> Result<(GramModel, f64)> {
        if !self.base.contains(w) {
            return Err(Error::OutsideDomain);
        }
        let spec = self.weight.specialize(w)?;
        let (bare, a) = spec.without_constants();
        if a == f64::NEG_INFINITY {
            return Err(Error::EmptyModel);
        }
        let basis = BasisSpec::TotalDegree(self.degree);
        let model = if self.weight.regular_part_depends_on_w() {
            GramModel::assemble(&self.fiber, &bare, &basis, &self.opts())?
        } else {
            let core = match self.shared_core.get() {
                Some(c) => c.clone(),
                None => {
                    let c = Arc::new(GramCore::assemble(&self.fiber, &bare, &basis, &self.opts())?);
                    self.shared_core.get_or_init(|| c).clone()
                }
            };
            GramModel::with_core(core, &bare)?
        };
        Ok((model, a))
    }

    /// `K^{ψ_w}_{ξ(w), Ω_w}(z)`; 0 when the fiber space is trivial.
    pub fn kernel_on_fiber(&self, w: &[C64], z: &[C64]) -> Result<f64> {
        if !self.fiber.contains(z) {
            return Err(Error::OutsideDomain);
        }
        let (model, a) = match self.fiber_model(w) {
            Ok(m) => m,
            Err(Error::EmptyModel) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        let xi = self.family.eval(w)?;
        Ok(a.exp() * model.xi_kernel(&xi, z)?)
    }

    /// `log K` at the joint point `(z, w)`.
    pub fn log_kernel(&self, z: &[C64], w: &[C64]) -> Result<f64> {
        Ok(self.kernel_on_fiber(w, z)?.ln())
    }

    fn log_kernel_joint(&self, p: &[C64]) -> Result<f64> {
        let n = self.fiber.arity();
        self.log_kernel(&p[..n], &p[n..])
    }

    /// Submean check of `w ↦ log K(z, w)` on the circle `w₀ + r·e^{iθ}·v`.
    pub fn psh_verify_base(
        &self,
        z: &[C64],
        w0: &[C64],
        direction: &[C64],
        radius: f64,
        samples: usize,
        tolerance: f64,
    ) -> Result<PshReport> {
        if direction.len() != self.base.arity() {
            return Err(Error::ArityMismatch {
                expected: self.base.arity(),
                found: direction.len(),
            });
        }
        let mut p = z.to_vec();
        p.extend_from_slice(w0);
        let mut v = vec![C64::new(0.0, 0.0); z.len()];
        v.extend_from_slice(direction);
        self.psh_verify_joint(&p, &v, radius, samples, tolerance)
    }

    /// Submean check of `log K` on the circle `p₀ + r·e^{iθ}·v` in `ℂ^{n+m}`.
    pub fn psh_verify_joint(
        &self,
        p0: &[C64],
        direction: &[C64],
        radius: f64,
        samples: usize,
        tolerance: f64,
    ) -> Result<PshReport> {
        let k = self.fiber.arity() + self.base.arity();
        if p0.len() != k || direction.len() != k {
            return Err(Error::ArityMismatch {
                expected: k,
                found: p0.len().min(direction.len()),
            });
        }
        if !self.closed_disc_inside(p0, direction, radius) {
            return Err(Error::OutsideDomain);
        }
        submean(p0, direction, radius, samples, tolerance, |p| self.log_kernel_joint(p))
    }

    fn closed_disc_inside(&self, p0: &[C64], v: &[C64], r: f64) -> bool {
        let dom = self.fiber.product(&self.base);
        (0..p0.len()).all(|i| (p0[i] - dom.center[i]).norm() + r * v[i].norm() < dom.radii[i])
    }

    /// Upper-semicontinuity spot check of `w ↦ K(z, w)` at `w₀`.
    pub fn usc_spot_check(
        &self,
        z: &[C64],
        w0: &[C64],
        radii: &[f64],
        samples: usize,
        tolerance: f64,
    ) -> Result<UscReport> {
        usc_spot_check(w0, radii, samples, tolerance, |w| self.kernel_on_fiber(w, z))
    }

    /// `(w_re, w_im, log K)` on a grid of base points varying the first
    /// base coordinate; the others stay at the base center.
    pub fn scan(&self, z: &[C64], grid: &[C64]) -> Result<Vec<ScanRow>> {
        grid.par_iter()
            .map(|w1| {
                let mut w = self.base.center.clone();
                w[0] = *w1;
                Ok(ScanRow {
                    w_re: w1.re,
                    w_im: w1.im,
                    log_k: self.log_kernel(z, &w)?,
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanRow {
    pub w_re: f64,
    pub w_im: f64,
    pub log_k: f64,
}

/// CSV with header `w_re,w_im,logK`; `−∞` is written as `-inf`.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("w_re,w_im,logK\n");
    for r in rows {
        let lk = if r.log_k == f64::NEG_INFINITY {
            "-inf".to_string()
        } else {
            format!("{:.12e}", r.log_k)
        };
        let _ = writeln!(s, "{:.12e},{:.12e},{}", r.w_re, r.w_im, lk);
    }
    s
}

/// Square grid `{x + iy : x, y ∈ {−h·k, …, h·k}}` centered at `c`.
pub fn square_grid(center: C64, half_width: f64, points_per_side: usize) -> Vec<C64> {
    let k = points_per_side.max(1);
    let step = if k == 1 { 0.0 } else { 2.0 * half_width / (k - 1) as f64 };
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            out.push(center + C64::new(-half_width + step * j as f64, -half_width + step * i as f64));
        }
    }
    out
}
