//! Command runners behind the `xikernel` binary.
//!
//! Each runner returns its artifacts in memory; the binary writes them only
//! when the run got that far, so a rejected config leaves no files behind.

use serde::Serialize;
use serde_json::{json, Value};

use crate::bergman::{BasisSpec, GramModel, GramOptions};
use crate::config::{cx, cxs, GridConfig, RunConfig};
use crate::config::{AnnihilateConfig, ExtendConfig, KernelConfig, LambdaConfig, ScanPshConfig};
use crate::error::{Error, Result};
use crate::extension::{jensen_chain, minimal_extension, optimal_constant_check, ExtensionProblem, JensenSpec};
use crate::family::{anti_holomorphic_control, FamilySource};
use crate::fiberwise::{scan_csv, square_grid, FamilyProblem};
use crate::ideal::{krull_stabilize, lambda_scan, FiberParams, JetIdeal, IDENTITY_TOL};
use crate::poly::C64;
use crate::psh::PshReport;
use crate::weights::Polydisc;

/// One output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    /// A verification check failed; maps to exit code 1.
    pub failed: bool,
    pub summary: Vec<String>,
}

impl RunOutput {
    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.artifacts.push(Artifact {
            name: name.into(),
            contents: s,
        });
        Ok(())
    }

    fn text(&mut self, name: &str, contents: String) {
        self.artifacts.push(Artifact {
            name: name.into(),
            contents,
        });
    }
}

/// Run a validated config. `seed` overrides any seed in the config; the
/// fallback is 0.
pub fn run(cfg: &RunConfig, seed: Option<u64>) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg {
        RunConfig::Kernel(c) => run_kernel(c),
        RunConfig::ScanPsh(c) => run_scan_psh(c),
        RunConfig::Annihilate(c) => run_annihilate(c, seed.or(c.seed).unwrap_or(0)),
        RunConfig::Lambda(c) => run_lambda(c, seed.or(c.seed).unwrap_or(0)),
        RunConfig::Extend(c) => run_extend(c),
    }
}

/// `−∞` and other non-finite values become `null` in JSON.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn run_kernel(c: &KernelConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let opts = GramOptions {
        quad: c.quadrature,
        force_quadrature: c.force_quadrature,
    };
    let z = cxs(&c.z);
    let v = match GramModel::assemble(&c.domain, &c.weight, &BasisSpec::TotalDegree(c.degree), &opts) {
        Ok(model) => {
            let k = model.xi_kernel(&c.functional, &z)?;
            json!({
                "K": k,
                "logK": finite(k.ln()),
                "modelRank": model.rank(),
                "path": model.path(),
            })
        }
        Err(Error::EmptyModel) => {
            out.warnings.push("weighted space model is empty; K = 0".into());
            json!({ "K": 0.0, "logK": null, "modelRank": 0, "path": null })
        }
        Err(e) => return Err(e),
    };
    out.summary.push(format!("K = {}", v["K"]));
    out.json("kernel.json", &v)?;
    Ok(out)
}

fn grid_points(base: &Polydisc, g: &GridConfig) -> Vec<Vec<C64>> {
    square_grid(cx(g.center), g.half_width, g.points_per_side)
        .into_iter()
        .map(|w1| {
            let mut w = base.center.clone();
            w[0] = w1;
            w
        })
        .collect()
}

fn disc_fits(base: &Polydisc, w: &[C64], r: f64) -> bool {
    (w[0] - base.center[0]).norm() + r < base.radii[0]
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LabeledReport {
    kind: &'static str,
    #[serde(flatten)]
    report: PshReport,
}

fn run_scan_psh(c: &ScanPshConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let source = if c.control {
        anti_holomorphic_control(c.family.clone())
    } else {
        FamilySource::Holomorphic(c.family.clone())
    };
    let holomorphic = source.is_holomorphic();
    let problem = FamilyProblem::new(
        c.fiber.clone(),
        c.base.clone(),
        c.weight.clone(),
        source,
        c.degree,
        c.quadrature,
    )?;
    let z = cxs(&c.z);
    let grid = grid_points(&c.base, &c.grid);
    let firsts: Vec<C64> = grid.iter().map(|w| w[0]).collect();
    let rows = problem.scan(&z, &firsts)?;
    out.text("scan.csv", scan_csv(&rows));

    let m = c.base.arity();
    let mut base_dir = vec![C64::new(0.0, 0.0); m];
    base_dir[0] = C64::new(1.0, 0.0);
    let joint_dir = c.circles.joint_direction.as_deref().map(cxs);
    let mut reports = Vec::new();
    let mut skipped = 0usize;
    for w in &grid {
        if !disc_fits(&c.base, w, c.circles.radius) {
            skipped += 1;
            continue;
        }
        let r = problem.psh_verify_base(&z, w, &base_dir, c.circles.radius, c.circles.samples, c.tolerance)?;
        reports.push(LabeledReport {
            kind: "base",
            report: r,
        });
        if let Some(d) = &joint_dir {
            let mut p = z.clone();
            p.extend_from_slice(w);
            match problem.psh_verify_joint(&p, d, c.circles.radius, c.circles.samples, c.tolerance) {
                Ok(r) => reports.push(LabeledReport {
                    kind: "joint",
                    report: r,
                }),
                Err(Error::OutsideDomain) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let failures = reports.iter().filter(|r| !r.report.verdict.passed()).count();
    let usc = match &c.usc {
        Some(u) => Some(problem.usc_spot_check(&z, &cxs(&u.w0), &u.radii, u.samples, c.tolerance)?),
        None => None,
    };
    let jensen = match &c.jensen {
        Some(j) => {
            let spec = JensenSpec {
                radius: j.radius,
                w_degree: j.w_degree,
                tolerance: c.tolerance,
                ..JensenSpec::default()
            };
            Some(jensen_chain(&problem, &z, cx(j.w0), &spec)?)
        }
        None => None,
    };
    let usc_fail = usc.as_ref().is_some_and(|u| !u.verdict.passed());
    let jensen_fail = jensen.as_ref().is_some_and(|j| !j.holds);
    if holomorphic {
        out.failed = failures > 0 || usc_fail || jensen_fail;
    } else if failures > 0 {
        out.warnings.push(format!(
            "control family: {failures} submean violations (expected, not a failure)"
        ));
    }
    out.summary.push(format!(
        "{} circles, {} FAIL, {} skipped",
        reports.len(),
        failures,
        skipped
    ));
    out.json(
        "psh_reports.json",
        &json!({
            "holomorphic": holomorphic,
            "reports": reports,
            "failures": failures,
            "skipped": skipped,
            "usc": usc,
            "jensen": jensen,
        }),
    )?;
    Ok(out)
}

fn run_annihilate(c: &AnnihilateConfig, seed: u64) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let grid = grid_points(&c.base, &c.grid);
    let jet = JetIdeal::build(&c.ideal, &grid, &c.base, seed)?;
    let residual = jet.identity_residual()?;
    let mut exactness = Vec::new();
    for w in &grid {
        if jet.in_u(w)? {
            let e = jet.exactness_at(w)?;
            exactness.push(json!({ "w": w.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(), "check": e }));
        }
    }
    let inexact = exactness
        .iter()
        .filter(|e| e["check"]["ok"] != Value::Bool(true))
        .count();
    out.failed = residual > IDENTITY_TOL || inexact > 0;
    out.summary.push(format!(
        "rank {}, {} functionals, identity residual {residual:e}, {inexact} inexact grid points",
        jet.annihilator.rank,
        jet.annihilator.num_functionals()
    ));
    out.json(
        "annihilator.json",
        &json!({
            "annihilator": jet.annihilator,
            "identityResidual": residual,
            "exactness": exactness,
            "functionals": jet.functionals,
        }),
    )?;
    Ok(out)
}

fn run_lambda(c: &LambdaConfig, seed: u64) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let grid = grid_points(&c.base, &c.grid);
    let params = FiberParams {
        fiber: c.fiber.clone(),
        base: c.base.clone(),
        degree: c.degree,
        quad: c.quadrature,
    };
    let jet = JetIdeal::build(&c.ideal, &grid, &c.base, seed)?;
    let scan = lambda_scan(&jet, &c.weight, &grid, &params)?;
    out.failed = !scan.consistent();
    out.summary.push(format!(
        "Lambda_{} grid: {} points, {} oracle disagreements",
        scan.order,
        scan.lambda_grid.len(),
        scan.disagreements.len()
    ));
    out.text("lambda.csv", scan.to_csv());
    out.json("lambda.json", &scan)?;
    if let Some(k) = &c.krull {
        match krull_stabilize(&c.ideal, &c.weight, &grid, &params, k.n_max, seed) {
            Ok(rep) => {
                if rep.levels.iter().any(|l| !l.consistent) {
                    out.failed = true;
                }
                out.summary.push(format!("stabilized at N = {}", rep.stabilized_at));
                out.json("krull.json", &rep)?;
            }
            Err(e @ Error::NonNesting(..)) => {
                out.failed = true;
                out.summary.push(e.to_string());
                out.json("krull.json", &json!({ "error": e.to_string() }))?;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn run_extend(c: &ExtendConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let prob = ExtensionProblem {
        fiber: c.fiber.clone(),
        w0: cx(c.w0),
        radius: c.radius,
        weight: c.weight.clone(),
        z_degree: c.z_degree,
        w_degree: c.w_degree,
        quad: c.quadrature,
    };
    let ext = minimal_extension(&prob, &c.datum)?;
    let rep = optimal_constant_check(&prob, &c.datum, &ext)?;
    out.failed = rep.ratio > c.ratio_bound;
    out.summary
        .push(format!("ratio {:.12} (bound {})", rep.ratio, c.ratio_bound));
    let coeffs: Vec<Value> = ext
        .model
        .exponents()
        .iter()
        .zip(ext.coeffs.iter())
        .map(|(e, v)| json!({ "exp": e, "re": v.re, "im": v.im }))
        .collect();
    out.json(
        "extension.json",
        &json!({
            "report": rep,
            "ratioBound": c.ratio_bound,
            "coefficients": coeffs,
        }),
    )?;
    Ok(out)
}
