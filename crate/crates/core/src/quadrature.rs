//! Gauss–Legendre rules and polar product rules on discs.
//!
//! A disc rule is Gauss–Legendre in the radius composed with the uniform
//! trapezoid rule in the angle. The angular rule with `M` nodes integrates
//! `e^{ikθ}` exactly for `|k| < M`, so for monomial integrands the only
//! error is radial.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::C64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    x.into_iter()
        .zip(w)
        .map(|(xi, wi)| (mid + half * xi, half * wi))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct QuadSpec {
    /// Gauss–Legendre nodes in the radius, per disc.
    pub radial: usize,
    /// Uniform nodes in the angle, per disc.
    pub angular: usize,
    /// Radius of a disc around the center excluded from integration.
    #[serde(default)]
    pub inner_cutoff: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            radial: 32,
            angular: 64,
            inner_cutoff: 0.0,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self, min_radius: f64) -> Result<()> {
        if self.radial < 4 || self.angular < 4 {
            return Err(Error::invalid("quadrature node counts must be at least 4"));
        }
        if !(self.inner_cutoff >= 0.0) || self.inner_cutoff >= min_radius / 10.0 {
            return Err(Error::invalid("inner cutoff must lie in [0, min radius / 10)"));
        }
        Ok(())
    }
}

/// Product rule on the disc `|x − center| < radius` with area weights.
#[derive(Clone, Debug)]
pub struct DiscRule {
    pub points: Vec<C64>,
    pub weights: Vec<f64>,
}

impl DiscRule {
    pub fn new(center: C64, radius: f64, spec: &QuadSpec) -> Self {
        let radial = gauss_legendre_on(spec.radial, spec.inner_cutoff, radius);
        let dtheta = 2.0 * PI / spec.angular as f64;
        let mut points = Vec::with_capacity(radial.len() * spec.angular);
        let mut weights = Vec::with_capacity(points.capacity());
        for &(r, wr) in &radial {
            for k in 0..spec.angular {
                let theta = dtheta * k as f64;
                points.push(center + C64::from_polar(r, theta));
                weights.push(wr * r * dtheta);
            }
        }
        DiscRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: Fn(C64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(*p)).sum()
    }
}

/// Uniform points on the circle `center + radius·e^{iθ}`.
pub fn circle_points(center: C64, radius: f64, samples: usize) -> Vec<C64> {
    (0..samples)
        .map(|k| center + C64::from_polar(radius, 2.0 * PI * k as f64 / samples as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [4usize, 9, 20, 41] {
            let rule = gauss_legendre_on(n, 0.0, 1.0);
            for k in 0..(2 * n) {
                let s: f64 = rule.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n} k={k} got {s}");
            }
        }
    }

    #[test]
    fn disc_area_and_moment() {
        let rule = DiscRule::new(C64::new(0.0, 0.0), 1.0, &QuadSpec::default());
        let area = rule.integrate(|_| 1.0);
        assert!((area - PI).abs() < 1e-13);
        let m1 = rule.integrate(|z| z.norm_sqr());
        assert!((m1 - PI / 2.0).abs() < 1e-13);
        let shifted = DiscRule::new(C64::new(0.3, -0.2), 0.5, &QuadSpec::default());
        assert!((shifted.integrate(|_| 1.0) - PI * 0.25).abs() < 1e-13);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadSpec::default().validate(1.0).is_ok());
        let bad = QuadSpec {
            radial: 3,
            ..QuadSpec::default()
        };
        assert!(bad.validate(1.0).is_err());
        let cut = QuadSpec {
            inner_cutoff: 0.2,
            ..QuadSpec::default()
        };
        assert!(cut.validate(1.0).is_err());
    }
}
