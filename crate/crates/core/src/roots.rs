//! All roots of a univariate polynomial by Aberth–Ehrlich simultaneous
//! iteration, started from Newton-polygon circles and finished with Newton
//! polishing.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::ensemble::PolynomialSection;
use crate::error::{Error, Result};

/// Relative residual bound every returned simple root satisfies.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Relaxed bound for roots flagged as clustered.
pub const CLUSTER_RESIDUAL_TOLERANCE: f64 = 1e-7;
/// Roots closer than this (relative to their modulus) are flagged.
const CLUSTER_SEPARATION: f64 = 1e-4;

#[derive(Clone, Copy, Debug)]
pub struct RootConfig {
    pub max_iterations: usize,
    pub polish_steps: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            max_iterations: 500,
            polish_steps: 2,
        }
    }
}

/// Roots with per-root relative residuals
/// `|p(z)| / sum_j |a_j| |z|^j` (a backward error).
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
    /// Roots within a cluster of nearly coincident roots.
    pub clustered: Vec<bool>,
    pub degree: u32,
    pub iterations: usize,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Roots of a one-variable section.
pub fn find_roots(p: &PolynomialSection) -> Result<RootSet> {
    if p.m.get() != 1 {
        return Err(Error::domain("find_roots", format!("sections in {} variables have no isolated roots", p.m)));
    }
    polynomial_roots(&p.coefficients, &RootConfig::default())
}

/// Horner evaluation of `p`, `p'` and `sum |a_j| |z|^j` for ascending
/// coefficients.
#[inline]
fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64, f64) {
    let az = z.norm();
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
        scale = scale * az + c.norm();
    }
    (p, dp, scale)
}

/// Newton correction `p(z)/p'(z)` and relative residual. Points outside the
/// unit disc go through the reversed polynomial to avoid overflow.
#[inline]
fn newton_ratio(coeffs: &[Complex64], reversed: &[Complex64], z: Complex64) -> (Complex64, f64) {
    let n = (coeffs.len() - 1) as f64;
    if z.norm_sqr() <= 1.0 {
        let (p, dp, scale) = horner(coeffs, z);
        let ratio = if p == Complex64::new(0.0, 0.0) {
            p
        } else {
            p / dp
        };
        (ratio, p.norm() / scale)
    } else {
        // p(z) = z^n q(1/z)  =>  p/p' = z / (n - y q'(y) / q(y)), y = 1/z
        let y = z.inv();
        let (q, dq, scale) = horner(reversed, y);
        let ratio = if q == Complex64::new(0.0, 0.0) {
            q
        } else {
            z / (n - y * dq / q)
        };
        (ratio, q.norm() / scale)
    }
}

/// Initial guesses on the circles of the Newton polygon of
/// `(j, log |a_j|)`, one circle per upper-hull edge.
fn initial_guesses(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let pts: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(j, c)| (j as f64, c.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut guesses = Vec::with_capacity(n);
    let sigma = 0.7;
    for (edge, w) in hull.windows(2).enumerate() {
        let count = (w[1].0 - w[0].0).round() as usize;
        let radius = ((w[0].1 - w[1].1) / (w[1].0 - w[0].0)).exp();
        let offset = TAU * edge as f64 / n as f64 + sigma;
        for k in 0..count {
            let angle = TAU * k as f64 / count as f64 + offset;
            guesses.push(Complex64::from_polar(radius, angle));
        }
    }
    guesses
}

/// Roots of `sum_j coeffs[j] z^j`.
pub fn polynomial_roots(coeffs: &[Complex64], config: &RootConfig) -> Result<RootSet> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Err(Error::domain("polynomial_roots", "degree must be >= 1"));
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::domain("polynomial_roots", "coefficients must be finite"));
    }
    let lead = coeffs[degree].norm();
    if !(lead >= f64::MIN_POSITIVE) {
        return Err(Error::DegreeDeflation);
    }
    let zeros_at_origin = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let work = &coeffs[zeros_at_origin..];
    let n = work.len() - 1;

    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    let mut residuals = vec![0.0; zeros_at_origin];
    let mut iterations = 0;

    if n == 1 {
        roots.push(-work[0] / work[1]);
        residuals.push(0.0);
    } else if n > 1 {
        let reversed: Vec<Complex64> = work.iter().rev().copied().collect();
        let stop = 4.0 * f64::EPSILON * n as f64;
        let mut z = initial_guesses(work);
        let mut active = vec![true; n];
        let mut remaining = n;
        while remaining > 0 && iterations < config.max_iterations {
            iterations += 1;
            for i in 0..n {
                if !active[i] {
                    continue;
                }
                let zi = z[i];
                let (ratio, resid) = newton_ratio(work, &reversed, zi);
                let mut s = Complex64::new(0.0, 0.0);
                for zj in z[..i].iter().chain(&z[i + 1..]) {
                    let d = zi - zj;
                    s += d.conj() / d.norm_sqr();
                }
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
                if step.re.is_finite() && step.im.is_finite() {
                    z[i] = zi - step;
                }
                if resid <= stop {
                    active[i] = false;
                    remaining -= 1;
                }
            }
        }
        for zi in z.iter_mut() {
            let mut best = newton_ratio(work, &reversed, *zi).1;
            for _ in 0..config.polish_steps {
                let (ratio, _) = newton_ratio(work, &reversed, *zi);
                let cand = *zi - ratio;
                let resid = newton_ratio(work, &reversed, cand).1;
                if resid < best {
                    best = resid;
                    *zi = cand;
                } else {
                    break;
                }
            }
            residuals.push(best);
        }
        roots.extend(z);
    }

    let clustered: Vec<bool> = roots
        .iter()
        .enumerate()
        .map(|(i, zi)| {
            let tol = CLUSTER_SEPARATION * zi.norm().max(f64::MIN_POSITIVE);
            roots
                .iter()
                .enumerate()
                .any(|(j, zj)| j != i && (zi - zj).norm() < tol)
        })
        .collect();
    let failed = residuals.iter().zip(&clustered).any(|(r, c)| {
        let tol = if *c { CLUSTER_RESIDUAL_TOLERANCE } else { RESIDUAL_TOLERANCE };
        !(*r <= tol)
    });
    if failed {
        let worst_residual = residuals.iter().copied().fold(0.0, f64::max);
        return Err(Error::RootNonConvergence {
            iterations,
            worst_residual,
            residuals,
        });
    }
    Ok(RootSet {
        roots,
        residuals,
        clustered,
        degree: degree as u32,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn difference_of_squares() {
        let rs = polynomial_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], &RootConfig::default()).unwrap();
        let r = sorted_re(rs.roots.clone());
        assert_abs_diff_eq!(r[0].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1].re, 1.0, epsilon = 1e-14);
        assert!(rs.residuals.iter().all(|x| *x < 1e-14));
        assert_eq!(rs.degree, 2);
    }

    #[test]
    fn triple_root() {
        // (z - 2)^3 = z^3 - 6 z^2 + 12 z - 8
        let rs = polynomial_roots(&[c(-8.0, 0.0), c(12.0, 0.0), c(-6.0, 0.0), c(1.0, 0.0)], &RootConfig::default())
            .unwrap();
        assert_eq!(rs.len(), 3);
        for (z, res) in rs.roots.iter().zip(&rs.residuals) {
            assert!(*res < 1e-8, "residual {res}");
            assert!((z - 2.0).norm() < 1e-4, "{z}");
        }
        assert!(rs.clustered.iter().all(|c| *c));
    }

    #[test]
    fn roots_of_unity_and_zero_roots() {
        // z^2 (z^5 - 1)
        let mut coeffs = vec![c(0.0, 0.0); 8];
        coeffs[2] = c(-1.0, 0.0);
        coeffs[7] = c(1.0, 0.0);
        let rs = polynomial_roots(&coeffs, &RootConfig::default()).unwrap();
        assert_eq!(rs.len(), 7);
        assert_eq!(rs.roots.iter().filter(|z| z.norm() == 0.0).count(), 2);
        for z in rs.roots.iter().filter(|z| z.norm() > 0.0) {
            assert_abs_diff_eq!((z.powu(5) - 1.0).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_and_invalid() {
        let rs = polynomial_roots(&[c(3.0, 1.0), c(1.0, 0.0)], &RootConfig::default()).unwrap();
        assert_eq!(rs.roots, vec![c(-3.0, -1.0)]);
        assert!(polynomial_roots(&[c(1.0, 0.0)], &RootConfig::default()).is_err());
        assert!(matches!(
            polynomial_roots(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], &RootConfig::default()),
            Err(Error::DegreeDeflation)
        ));
    }

    #[test]
    fn widely_scaled_roots() {
        // roots 1e-6, 1, 1e6
        let r = [1e-6, 1.0, 1e6];
        let coeffs = vec![
            c(-r[0] * r[1] * r[2], 0.0),
            c(r[0] * r[1] + r[0] * r[2] + r[1] * r[2], 0.0),
            c(-(r[0] + r[1] + r[2]), 0.0),
            c(1.0, 0.0),
        ];
        let rs = polynomial_roots(&coeffs, &RootConfig::default()).unwrap();
        let got = sorted_re(rs.roots);
        for (g, e) in got.iter().zip(r) {
            assert!((g - e).norm() < 1e-9 * e, "{g} vs {e}");
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let cfg = RootConfig {
            max_iterations: 1,
            polish_steps: 0,
        };
        let coeffs: Vec<Complex64> = (0..40).map(|j| c(1.0 + j as f64, (j as f64).sin())).collect();
        assert!(matches!(
            polynomial_roots(&coeffs, &cfg),
            Err(Error::RootNonConvergence { .. })
        ));
    }
}
