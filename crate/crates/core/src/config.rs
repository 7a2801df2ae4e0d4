//! Run configuration for the command-line front end.
//!
//! Configs are JSON objects tagged by `"command"`. Unknown keys are rejected
//! and every config is validated before anything runs. Complex numbers are
//! written as `[re, im]`.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::family::FunctionalFamily;
use crate::functional::Functional;
use crate::ideal::IdealFamily;
use crate::poly::{Poly, C64};
use crate::quadrature::QuadSpec;
use crate::weights::{Polydisc, WeightSpec};

pub type Cx = [f64; 2];

pub(crate) fn cx(v: Cx) -> C64 {
    C64::new(v[0], v[1])
}

pub(crate) fn cxs(v: &[Cx]) -> Vec<C64> {
    v.iter().copied().map(cx).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunConfig {
    Kernel(KernelConfig),
    ScanPsh(ScanPshConfig),
    Annihilate(AnnihilateConfig),
    Lambda(LambdaConfig),
    Extend(ExtendConfig),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct KernelConfig {
    pub domain: Polydisc,
    pub weight: WeightSpec,
    pub functional: Functional,
    pub degree: usize,
    pub z: Vec<Cx>,
    #[serde(default)]
    pub quadrature: QuadSpec,
    #[serde(default)]
    pub force_quadrature: bool,
}

/// Square grid in the first base coordinate.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub center: Cx,
    pub half_width: f64,
    pub points_per_side: usize,
}

impl GridConfig {
    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || self.points_per_side == 0 {
            return Err(Error::invalid(
                "grid needs a positive half width and at least one point",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CircleConfig {
    pub radius: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Direction in `ℂ^{n+m}` for the joint check; omitted means base only.
    #[serde(default)]
    pub joint_direction: Option<Vec<Cx>>,
}

fn default_samples() -> usize {
    64
}

fn default_tolerance() -> f64 {
    crate::psh::SUBMEAN_TOL
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct UscConfig {
    pub w0: Vec<Cx>,
    pub radii: Vec<f64>,
    #[serde(default = "default_usc_samples")]
    pub samples: usize,
}

fn default_usc_samples() -> usize {
    8
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct JensenConfig {
    pub w0: Cx,
    pub radius: f64,
    #[serde(default = "default_w_degree")]
    pub w_degree: usize,
}

fn default_w_degree() -> usize {
    6
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScanPshConfig {
    pub fiber: Polydisc,
    pub base: Polydisc,
    pub weight: WeightSpec,
    pub family: FunctionalFamily,
    /// Replace the family by its anti-holomorphic control.
    #[serde(default)]
    pub control: bool,
    pub degree: usize,
    pub z: Vec<Cx>,
    pub grid: GridConfig,
    pub circles: CircleConfig,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub usc: Option<UscConfig>,
    #[serde(default)]
    pub jensen: Option<JensenConfig>,
    #[serde(default)]
    pub quadrature: QuadSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AnnihilateConfig {
    pub ideal: IdealFamily,
    pub base: Polydisc,
    pub grid: GridConfig,
    /// Seed for the random rank-search points; `--seed` overrides it.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct KrullConfig {
    pub n_max: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LambdaConfig {
    pub ideal: IdealFamily,
    pub fiber: Polydisc,
    pub base: Polydisc,
    /// Weight `φ(z, w)` whose kernels define `Ψ_N`.
    pub weight: WeightSpec,
    pub degree: usize,
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub krull: Option<KrullConfig>,
    #[serde(default)]
    pub quadrature: QuadSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExtendConfig {
    pub fiber: Polydisc,
    #[serde(default)]
    pub w0: Cx,
    pub radius: f64,
    pub weight: WeightSpec,
    pub z_degree: usize,
    pub w_degree: usize,
    /// Fiber datum `f` in powers of `z`.
    pub datum: Poly,
    #[serde(default = "default_ratio_bound")]
    pub ratio_bound: f64,
    #[serde(default)]
    pub quadrature: QuadSpec,
}

fn default_ratio_bound() -> f64 {
    1.0 + 5e-3
}

fn check_arity(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::invalid(format!(
            "{what}: expected arity {expected}, found {found}"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RunConfig::Kernel(c) => {
                let n = c.domain.arity();
                check_arity("weight z arity", n, c.weight.z_arity())?;
                check_arity("weight w arity", 0, c.weight.w_arity())?;
                check_arity("functional", n, c.functional.arity())?;
                check_arity("point z", n, c.z.len())?;
                c.quadrature.validate(c.domain.min_radius())?;
                if !c.domain.contains(&cxs(&c.z)) {
                    return Err(Error::OutsideDomain);
                }
            }
            RunConfig::ScanPsh(c) => {
                let (n, m) = (c.fiber.arity(), c.base.arity());
                if m == 0 {
                    return Err(Error::invalid("scan-psh needs a base of positive dimension"));
                }
                check_arity("weight z arity", n, c.weight.z_arity())?;
                check_arity("weight w arity", m, c.weight.w_arity())?;
                check_arity("family z arity", n, c.family.z_arity())?;
                check_arity("family w arity", m, c.family.w_arity())?;
                check_arity("point z", n, c.z.len())?;
                c.grid.validate()?;
                c.quadrature.validate(c.fiber.min_radius())?;
                if !c.fiber.contains(&cxs(&c.z)) {
                    return Err(Error::OutsideDomain);
                }
                let r = &c.circles;
                if !(r.radius > 0.0) || r.samples < 16 {
                    return Err(Error::invalid("circles need a positive radius and at least 16 samples"));
                }
                if r.radius >= c.base.radii[0] {
                    return Err(Error::invalid("circle radius exceeds the base domain"));
                }
                if let Some(d) = &r.joint_direction {
                    check_arity("joint direction", n + m, d.len())?;
                }
                if let Some(u) = &c.usc {
                    check_arity("usc w0", m, u.w0.len())?;
                    if !c.base.contains(&cxs(&u.w0)) {
                        return Err(Error::OutsideDomain);
                    }
                }
                if let Some(j) = &c.jensen {
                    if m != 1 {
                        return Err(Error::invalid("the Jensen diagnostic needs a one-dimensional base"));
                    }
                    if !(j.radius > 0.0) {
                        return Err(Error::invalid("Jensen radius must be positive"));
                    }
                }
            }
            RunConfig::Annihilate(c) => {
                if c.base.arity() == 0 {
                    return Err(Error::invalid("the ideal family needs a base of positive dimension"));
                }
                check_arity("base", c.ideal.w_arity(), c.base.arity())?;
                c.grid.validate()?;
            }
            RunConfig::Lambda(c) => {
                if c.base.arity() == 0 {
                    return Err(Error::invalid("the ideal family needs a base of positive dimension"));
                }
                check_arity("base", c.ideal.w_arity(), c.base.arity())?;
                check_arity("fiber", c.ideal.z_arity(), c.fiber.arity())?;
                check_arity("weight z arity", c.fiber.arity(), c.weight.z_arity())?;
                check_arity("weight w arity", c.base.arity(), c.weight.w_arity())?;
                c.grid.validate()?;
                c.quadrature.validate(c.fiber.min_radius())?;
                if let Some(k) = &c.krull {
                    if k.n_max < 2 {
                        return Err(Error::invalid("krull nMax must be at least 2"));
                    }
                }
            }
            RunConfig::Extend(c) => {
                let n = c.fiber.arity();
                check_arity("weight z arity", n, c.weight.z_arity())?;
                check_arity("weight w arity", 1, c.weight.w_arity())?;
                check_arity("datum", n, c.datum.arity())?;
                c.quadrature.validate(c.fiber.min_radius().min(c.radius))?;
                if !(c.radius > 0.0) {
                    return Err(Error::invalid("base radius must be positive"));
                }
                if !(c.ratio_bound > 0.0) {
                    return Err(Error::invalid("ratio bound must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Kernel(_) => "kernel",
            RunConfig::ScanPsh(_) => "scan-psh",
            RunConfig::Annihilate(_) => "annihilate",
            RunConfig::Lambda(_) => "lambda",
            RunConfig::Extend(_) => "extend",
        }
    }
}
