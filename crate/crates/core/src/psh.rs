//! Submean-value checks for `log K` on circles in complex lines.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bergman::GramModel;
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::poly::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

fn ser_points<S: Serializer>(p: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    p.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
}

/// Submean report on the circle `{center + r·e^{iθ}·direction}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PshReport {
    #[serde(serialize_with = "ser_points")]
    pub center: Vec<C64>,
    #[serde(serialize_with = "ser_points")]
    pub direction: Vec<C64>,
    pub radius: f64,
    pub samples: usize,
    pub circle_average: f64,
    pub center_value: f64,
    pub max_violation: f64,
    pub infinity_flags: usize,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Default submean tolerance.
pub const SUBMEAN_TOL: f64 = 1e-3;

/// Evaluate `log_f` at the center and at `samples` uniform points on the
/// circle, then apply the submean test.
///
/// A `−∞` center always passes. A `−∞` sample with a finite center fails.
pub fn submean<F>(
    center: &[C64],
    direction: &[C64],
    radius: f64,
    samples: usize,
    tolerance: f64,
    log_f: F,
) -> Result<PshReport>
where
    F: Fn(&[C64]) -> Result<f64> + Sync,
{
    if samples < 16 {
        return Err(Error::invalid("submean check needs at least 16 samples"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("circle radius must be positive"));
    }
    if center.len() != direction.len() {
        return Err(Error::ArityMismatch {
            expected: center.len(),
            found: direction.len(),
        });
    }
    let center_value = log_f(center)?;
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let t = C64::from_polar(radius, 2.0 * PI * k as f64 / samples as f64);
            let p: Vec<C64> = center.iter().zip(direction).map(|(c, d)| c + t * d).collect();
            log_f(&p)
        })
        .collect::<Result<Vec<f64>>>()?;
    let infinity_flags = values.iter().filter(|v| **v == f64::NEG_INFINITY).count();
    let circle_average = values.iter().sum::<f64>() / samples as f64;
    let (max_violation, verdict) = if center_value == f64::NEG_INFINITY {
        (f64::NEG_INFINITY, Verdict::Pass)
    } else if infinity_flags > 0 {
        (f64::INFINITY, Verdict::Fail)
    } else {
        let v = center_value - circle_average;
        (v, if v <= tolerance { Verdict::Pass } else { Verdict::Fail })
    };
    Ok(PshReport {
        center: center.to_vec(),
        direction: direction.to_vec(),
        radius,
        samples,
        circle_average,
        center_value,
        max_violation,
        infinity_flags,
        tolerance,
        verdict,
    })
}

/// Log-psh check of `z ↦ K^ψ_{ξ,D}(z)` along a complex line in `z`.
pub fn kernel_submean_z(
    model: &GramModel,
    xi: &Functional,
    z0: &[C64],
    direction: &[C64],
    radius: f64,
    samples: usize,
    tolerance: f64,
) -> Result<PshReport> {
    submean(z0, direction, radius, samples, tolerance, |z| {
        Ok(model.xi_kernel(xi, z)?.ln())
    })
}

/// One level of an upper-semicontinuity spot check.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UscLevel {
    pub radius: f64,
    pub limsup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UscReport {
    pub center_value: f64,
    pub levels: Vec<UscLevel>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// `limsup_{p → p₀} K(p) ≤ K(p₀)` spot check on kernel values.
///
/// Each level samples `samples` points on circles of radius `ρ` and `ρ/2`
/// around `p₀` in every coordinate direction. PASS requires the sampled
/// maxima to be nonincreasing (up to `tolerance`) and the last one to be at
/// most `K(p₀) + tolerance`.
pub fn usc_spot_check<F>(p0: &[C64], radii: &[f64], samples: usize, tolerance: f64, k: F) -> Result<UscReport>
where
    F: Fn(&[C64]) -> Result<f64> + Sync,
{
    if radii.len() < 3 {
        return Err(Error::TooFewLevels {
            found: radii.len(),
            needed: 3,
        });
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::invalid("neighborhood radii must be positive and decreasing"));
    }
    let center_value = k(p0)?;
    let mut levels = Vec::with_capacity(radii.len());
    for &rho in radii {
        let mut pts = Vec::new();
        for j in 0..p0.len() {
            for s in [rho, 0.5 * rho] {
                for q in 0..samples {
                    let mut p = p0.to_vec();
                    p[j] += C64::from_polar(s, 2.0 * PI * (q as f64 + 0.5) / samples as f64);
                    pts.push(p);
                }
            }
        }
        let vals = pts.par_iter().map(|p| k(p)).collect::<Result<Vec<f64>>>()?;
        let limsup = vals.into_iter().fold(f64::NEG_INFINITY, f64::max);
        levels.push(UscLevel { radius: rho, limsup });
    }
    let monotone = levels.windows(2).all(|w| w[1].limsup <= w[0].limsup + tolerance);
    let last = levels.last().expect("at least three levels").limsup;
    let verdict = if monotone && last <= center_value + tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(UscReport {
        center_value,
        levels,
        tolerance,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::{BasisSpec, GramOptions};
    use crate::weights::{Polydisc, WeightSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn harmonic_function_passes_with_zero_violation() {
        // log|z| is harmonic away from 0
        let r = submean(&[c(0.5, 0.0)], &[c(1.0, 0.0)], 0.2, 64, 1e-3, |z| Ok(z[0].norm().ln())).unwrap();
        assert!(r.max_violation.abs() < 1e-12);
        assert!(r.verdict.passed());
    }

    #[test]
    fn superharmonic_function_fails() {
        let r = submean(&[c(0.0, 0.0)], &[c(1.0, 0.0)], 0.5, 32, 1e-3, |z| Ok(-z[0].norm_sqr())).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn infinity_conventions() {
        let r = submean(&[c(0.0, 0.0)], &[c(1.0, 0.0)], 0.5, 16, 1e-3, |z| Ok(z[0].norm().ln())).unwrap();
        assert!(r.verdict.passed());
        let r = submean(&[c(0.5, 0.0)], &[c(1.0, 0.0)], 0.5, 16, 1e-3, |z| {
            Ok(if z[0].norm() < 1e-12 {
                f64::NEG_INFINITY
            } else {
                z[0].norm().ln()
            })
        })
        .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.infinity_flags, 1);
    }

    #[test]
    fn kernel_is_log_psh_on_the_disc() {
        let m = GramModel::assemble(
            &Polydisc::unit(1),
            &WeightSpec::zero(1),
            &BasisSpec::TotalDegree(30),
            &GramOptions::default(),
        )
        .unwrap();
        let r = kernel_submean_z(&m, &Functional::dirac(1), &[c(0.2, 0.1)], &[c(1.0, 0.0)], 0.2, 64, 1e-3).unwrap();
        assert!(r.verdict.passed(), "{r:?}");
        assert!(r.max_violation < 0.0);
    }

    #[test]
    fn usc_paths() {
        let flat = usc_spot_check(&[c(0.0, 0.0)], &[0.1, 0.01, 0.001], 8, 1e-3, |_| Ok(1.0)).unwrap();
        assert!(flat.verdict.passed());
        // synthetic jump: value 0 at the center, 1 elsewhere
        let jump = usc_spot_check(&[c(0.0, 0.0)], &[0.1, 0.01, 0.001], 8, 1e-3, |p| {
            Ok(if p[0] == c(0.0, 0.0) { 0.0 } else { 1.0 })
        })
        .unwrap();
        assert_eq!(jump.verdict, Verdict::Fail);
        assert!(matches!(
            usc_spot_check(&[c(0.0, 0.0)], &[0.1, 0.01], 8, 1e-3, |_| Ok(1.0)),
            Err(Error::TooFewLevels { found: 2, needed: 3 })
        ));
    }
}
