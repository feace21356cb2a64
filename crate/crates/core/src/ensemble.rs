//! The projective-space ensemble ("SU(m+1) polynomials").
//!
//! Sections of the `N`-th power of the hyperplane bundle over `CP^m` are
//! polynomials of degree `<= N` in the affine chart `w_0 != 0`. An
//! orthonormal basis for the Fubini–Study inner product is, up to one
//! global constant, `sqrt(multinomial(N; alpha, N - |alpha|)) z^alpha`.
//! Random sections draw i.i.d. standard complex Gaussian coefficients in
//! that basis. Neither zeros nor the normalized kernel depend on the global
//! constant, so weights are normalized to have maximum 1.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulas::{limit_kernel_modulus, Dimension};
use crate::rng::StreamRng;

/// `binomial(N + m, m)`, the number of monomials of degree `<= N` in `m`
/// variables.
pub fn basis_dimension(m: Dimension, degree: u32) -> Result<usize> {
    if degree == 0 {
        return Err(Error::domain("basis_dimension", "degree must be >= 1"));
    }
    let (n, m) = (u128::from(degree), u128::from(m.get()));
    let overflow = || Error::Overflow {
        n_plus_m: (n + m) as u64,
        m: m as u64,
    };
    // C(n + k, k) = C(n + k - 1, k - 1) (n + k) / k, exact at every step
    let mut c: u128 = 1;
    for k in 1..=m {
        c = c.checked_mul(n + k).ok_or_else(overflow)? / k;
        if c > usize::MAX as u128 {
            return Err(overflow());
        }
    }
    usize::try_from(c).map_err(|_| overflow())
}

/// Validated ensemble parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnsembleParams {
    pub m: Dimension,
    pub degree: u32,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn new(m: Dimension, degree: u32, seed: u64) -> Result<Self> {
        basis_dimension(m, degree)?;
        Ok(EnsembleParams { m, degree, seed })
    }
}

/// Exponent vectors `alpha` with `|alpha| <= degree`, ordered by total
/// degree and then lexicographically descending. For `m = 1` entry `j` is
/// the power `z^j`.
pub fn monomials(m: Dimension, degree: u32) -> Vec<Vec<u32>> {
    fn fill(prefix: &mut Vec<u32>, vars: usize, total: u32, out: &mut Vec<Vec<u32>>) {
        if vars == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            fill(prefix, vars - 1, total - first, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        fill(&mut Vec::new(), m.get() as usize, total, &mut out);
    }
    out
}

/// Basis weights `sqrt(multinomial(N; alpha, N - |alpha|))` for the
/// monomials of [`monomials`], divided by their maximum.
pub fn basis_weights(m: Dimension, degree: u32) -> Vec<f64> {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=degree).scan(0.0, |acc, k| {
            *acc += f64::from(k).ln();
            Some(*acc)
        }))
        .collect();
    let logs: Vec<f64> = monomials(m, degree)
        .iter()
        .map(|alpha| {
            let used: u32 = alpha.iter().sum();
            ln_fact[degree as usize]
                - alpha.iter().map(|&a| ln_fact[a as usize]).sum::<f64>()
                - ln_fact[(degree - used) as usize]
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|l| (0.5 * (l - max)).exp()).collect()
}

/// A random section in the affine chart: `sum_alpha coefficients[i] z^alpha_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSection {
    pub m: Dimension,
    pub degree: u32,
    pub coefficients: Vec<Complex64>,
}

impl PolynomialSection {
    /// Evaluates the section at `z`.
    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.m.get() as usize);
        if self.m.get() == 1 {
            return self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z[0] + c);
        }
        monomials(self.m, self.degree)
            .iter()
            .zip(&self.coefficients)
            .map(|(alpha, c)| {
                alpha
                    .iter()
                    .zip(z)
                    .fold(*c, |acc, (&a, zi)| acc * zi.powu(a))
            })
            .sum()
    }

    /// Multiplies every coefficient by `lambda`; the zero set is unchanged.
    pub fn scaled(&self, lambda: Complex64) -> Self {
        PolynomialSection {
            coefficients: self.coefficients.iter().map(|c| c * lambda).collect(),
            ..self.clone()
        }
    }
}

/// Sampler with precomputed basis weights for one `(m, N, seed)`.
#[derive(Clone, Debug)]
pub struct EnsembleSampler {
    params: EnsembleParams,
    weights: Vec<f64>,
}

impl EnsembleSampler {
    pub fn new(params: EnsembleParams) -> Self {
        EnsembleSampler {
            weights: basis_weights(params.m, params.degree),
            params,
        }
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The section for stream `stream`; identical on every call.
    pub fn sample(&self, stream: u64) -> PolynomialSection {
        let mut rng = StreamRng::new(self.params.seed, stream);
        loop {
            let coefficients: Vec<Complex64> = self.weights.iter().map(|w| rng.complex_normal() * w).collect();
            // identically zero has probability zero
            if coefficients.iter().any(|c| *c != Complex64::new(0.0, 0.0)) {
                return PolynomialSection {
                    m: self.params.m,
                    degree: self.params.degree,
                    coefficients,
                };
            }
        }
    }
}

/// One section from stream `stream` of `params.seed`.
pub fn sample_section(params: &EnsembleParams, stream: u64) -> PolynomialSection {
    EnsembleSampler::new(*params).sample(stream)
}

/// Normalized Fubini–Study kernel modulus
/// `(|1 + z.conj(w)|^2 / ((1 + |z|^2)(1 + |w|^2)))^{N/2}`, evaluated in log
/// space.
pub fn fs_cos_theta(degree: u32, z: &[Complex64], w: &[Complex64]) -> f64 {
    assert_eq!(z.len(), w.len(), "points must live in the same C^m");
    let a: Complex64 = z.iter().zip(w).map(|(zi, wi)| zi * wi.conj()).sum();
    let z2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let w2: f64 = w.iter().map(|c| c.norm_sqr()).sum();
    // |1 + a|^2 - 1 = 2 Re a + |a|^2
    let cross = (2.0 * a.re + a.norm_sqr()).ln_1p();
    let log_cos = 0.5 * f64::from(degree) * (cross - (z2.ln_1p() + w2.ln_1p()));
    log_cos.exp().min(1.0)
}

fn lattice(step: f64, radius: f64) -> Vec<f64> {
    let k = (radius / step + 1e-9).floor() as i64;
    (-k..=k).map(|i| i as f64 * step).collect()
}

/// Grid points used by [`szego_scaling_error`].
///
/// For `m = 1` this is the square lattice of spacing `step` in the disc of
/// radius `radius`. For `m > 1`, both kernels are invariant under the
/// unitary group, and every pair `(z, w)` is equivalent to one with
/// `z = (a, 0, ..)`, `a >= 0`, and `w = (w_1, s, 0, ..)`, `s >= 0`; the grid
/// samples those normal forms on the same lattice.
fn scaling_grid(m: Dimension, radius: f64, step: f64) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let axis = lattice(step, radius);
    let zero = Complex64::new(0.0, 0.0);
    let inside = |p: &[Complex64]| p.iter().map(|c| c.norm_sqr()).sum::<f64>() <= radius * radius * (1.0 + 1e-12);
    let md = m.get() as usize;
    if md == 1 {
        let pts: Vec<Vec<Complex64>> = axis
            .iter()
            .flat_map(|&x| axis.iter().map(move |&y| vec![Complex64::new(x, y)]))
            .filter(|p| inside(p))
            .collect();
        return (pts.clone(), pts);
    }
    let mut firsts = Vec::new();
    for &a in axis.iter().filter(|a| **a >= 0.0) {
        let mut p = vec![zero; md];
        p[0] = Complex64::new(a, 0.0);
        firsts.push(p);
    }
    let mut seconds = Vec::new();
    for &x in &axis {
        for &y in &axis {
            for &s in axis.iter().filter(|s| **s >= 0.0) {
                let mut p = vec![zero; md];
                p[0] = Complex64::new(x, y);
                p[1] = Complex64::new(s, 0.0);
                if inside(&p) {
                    seconds.push(p);
                }
            }
        }
    }
    (firsts, seconds)
}

/// Sup over grid pairs with `|z|, |w| <= radius` of
/// `|fs_cos_theta(N, z / sqrt(N), w / sqrt(N)) - exp(-|z - w|^2 / 2)|`.
pub fn szego_scaling_error(m: Dimension, degree: u32, radius: f64, step: f64) -> Result<f64> {
    if degree < 4 {
        return Err(Error::domain("szego_scaling_error", "degree must be >= 4"));
    }
    let limit = 0.5 * f64::from(degree).sqrt();
    if !(radius > 0.0) || radius > limit {
        return Err(Error::domain(
            "szego_scaling_error",
            format!("radius {radius} must lie in (0, sqrt(N)/2 = {limit}]"),
        ));
    }
    if !(step > 0.0) {
        return Err(Error::domain("szego_scaling_error", "grid step must be > 0"));
    }
    let scale = 1.0 / f64::from(degree).sqrt();
    let (zs, ws) = scaling_grid(m, radius, step);
    let scaled = |p: &[Complex64]| p.iter().map(|c| c * scale).collect::<Vec<_>>();
    let ws_scaled: Vec<Vec<Complex64>> = ws.iter().map(|w| scaled(w)).collect();
    let mut worst: f64 = 0.0;
    for z in &zs {
        let zn = scaled(z);
        for (w, wn) in ws.iter().zip(&ws_scaled) {
            let err = (fs_cos_theta(degree, &zn, wn) - limit_kernel_modulus(z, w)).abs();
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Moments;
    use approx::assert_abs_diff_eq;

    fn dim(m: u32) -> Dimension {
        Dimension::new(m).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_dimension_examples() {
        assert_eq!(basis_dimension(dim(1), 5).unwrap(), 6);
        assert_eq!(basis_dimension(dim(2), 3).unwrap(), 10);
        assert_eq!(basis_dimension(dim(3), 10).unwrap(), 286);
        assert!(basis_dimension(dim(1), 0).is_err());
        assert!(matches!(basis_dimension(dim(60), u32::MAX), Err(Error::Overflow { .. })));
    }

    #[test]
    fn monomial_count_matches_dimension() {
        for (m, n) in [(1, 7), (2, 4), (3, 5)] {
            let mons = monomials(dim(m), n);
            assert_eq!(mons.len(), basis_dimension(dim(m), n).unwrap());
            assert!(mons.iter().all(|a| a.iter().sum::<u32>() <= n));
        }
        let ones: Vec<u32> = monomials(dim(1), 4).into_iter().map(|a| a[0]).collect();
        assert_eq!(ones, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn weights_are_normalized_binomial_roots() {
        let w = basis_weights(dim(1), 6);
        let max = 20.0f64; // binomial(6, 3)
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        for (wj, b) in w.iter().zip(binom) {
            assert_abs_diff_eq!(wj * wj, b / max, epsilon = 1e-13);
        }
        // m = 2, N = 2: multinomials 1, 2, 2, 1, 2, 1 (with the N - |alpha| slot)
        let w = basis_weights(dim(2), 2);
        let sq: Vec<f64> = w.iter().map(|x| (x * x * 2.0).round()).collect();
        assert_eq!(sq, vec![1.0, 2.0, 2.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = EnsembleParams::new(dim(1), 12, 99).unwrap();
        assert_eq!(sample_section(&p, 4), sample_section(&p, 4));
        assert_ne!(sample_section(&p, 4), sample_section(&p, 5));
        let q = EnsembleParams::new(dim(2), 3, 99).unwrap();
        assert_eq!(sample_section(&q, 0).coefficients.len(), 10);
    }

    #[test]
    fn coefficient_variances_follow_binomials() {
        let n = 8;
        let sampler = EnsembleSampler::new(EnsembleParams::new(dim(1), n, 2024).unwrap());
        let draws = 100_000;
        let mut moments = vec![Moments::default(); n as usize + 1];
        for s in 0..draws {
            let p = sampler.sample(s);
            for (m, c) in moments.iter_mut().zip(&p.coefficients) {
                m.push(c.norm_sqr());
            }
        }
        let binom = [1.0, 8.0, 28.0, 56.0, 70.0, 56.0, 28.0, 8.0, 1.0];
        for (m, b) in moments.iter().zip(binom) {
            let expected = b / 70.0;
            assert!((m.mean() - expected).abs() < 3.0 * m.stderr(), "{} vs {expected}", m.mean());
        }
    }

    #[test]
    fn degree_one_root_is_fubini_study_uniform() {
        // root -c0/c1 has density 1/(pi (1 + |z|^2)^2); P(|z| <= rho) = rho^2 / (1 + rho^2)
        let sampler = EnsembleSampler::new(EnsembleParams::new(dim(1), 1, 5).unwrap());
        let draws = 50_000u64;
        let radii = [0.25, 0.5, 1.0, 2.0, 4.0];
        let mut counts = [0u64; 5];
        for s in 0..draws {
            let p = sampler.sample(s);
            let root = -(p.coefficients[0] / p.coefficients[1]);
            for (k, rho) in radii.iter().enumerate() {
                if root.norm() <= *rho {
                    counts[k] += 1;
                }
            }
        }
        for (k, rho) in radii.iter().enumerate() {
            let p = rho * rho / (1.0 + rho * rho);
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            let freq = counts[k] as f64 / draws as f64;
            assert!((freq - p).abs() < 3.5 * sd, "rho {rho}: {freq} vs {p}");
        }
    }

    #[test]
    fn cos_theta_examples() {
        let z = [c(0.4, -0.3)];
        assert_abs_diff_eq!(fs_cos_theta(7, &z, &z), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fs_cos_theta(4, &[c(0.0, 0.0)], &[c(1.0, 0.0)]), 0.25, epsilon = 1e-15);
        let v = fs_cos_theta(1, &[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)]);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        // antipodal points: 1 + z conj(w) = 0
        assert_eq!(fs_cos_theta(3, &[c(1.0, 0.0)], &[c(-1.0, 0.0)]), 0.0);
    }

    /// `Pi_N(z, w) = sum_j binomial(N, j) z^j conj(w)^j` from the orthonormal basis.
    fn basis_sum(n: u32, z: Complex64, w: Complex64) -> Complex64 {
        let weights = basis_weights(dim(1), n);
        (0..=n as usize)
            .map(|j| weights[j] * weights[j] * z.powu(j as u32) * w.conj().powu(j as u32))
            .sum()
    }

    #[test]
    fn basis_sum_matches_closed_form() {
        let mut rng = StreamRng::new(1, 1);
        for n in 1..=8 {
            for _ in 0..20 {
                let z = rng.complex_normal() * 1.5;
                let w = rng.complex_normal() * 1.5;
                let oracle = basis_sum(n, z, w).norm() / (basis_sum(n, z, z).re * basis_sum(n, w, w).re).sqrt();
                assert_abs_diff_eq!(fs_cos_theta(n, &[z], &[w]), oracle, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cos_theta_symmetry_and_bound() {
        let mut rng = StreamRng::new(3, 0);
        for _ in 0..200 {
            let z = [rng.complex_normal(), rng.complex_normal()];
            let w = [rng.complex_normal(), rng.complex_normal()];
            let a = fs_cos_theta(9, &z, &w);
            assert_eq!(a, fs_cos_theta(9, &w, &z));
            assert!(a < 1.0);
            let phase = Complex64::from_polar(1.0, rng.uniform() * 6.0);
            let one = fs_cos_theta(9, &[z[0] * phase], &[w[0] * phase]);
            assert_abs_diff_eq!(one, fs_cos_theta(9, &z[..1], &w[..1]), epsilon = 1e-14);
        }
    }

    #[test]
    fn scaling_error_preconditions() {
        assert!(szego_scaling_error(dim(1), 3, 0.5, 0.25).is_err());
        assert!(szego_scaling_error(dim(1), 16, 2.5, 0.25).is_err());
        assert!(szego_scaling_error(dim(1), 16, 2.0, 0.0).is_err());
    }

    #[test]
    fn scaling_error_decreases() {
        let e100 = szego_scaling_error(dim(1), 100, 2.0, 0.25).unwrap();
        let e400 = szego_scaling_error(dim(1), 400, 2.0, 0.25).unwrap();
        assert!(e400 <= 0.7 * e100, "{e400} vs {e100}");
        let e = szego_scaling_error(dim(2), 10_000, 2.0, 0.25).unwrap();
        assert!(e < 5e-3, "{e}");
    }

    #[test]
    fn evaluate_multivariate() {
        let p = PolynomialSection {
            m: dim(2),
            degree: 1,
            // monomials: (0,0), (1,0), (0,1)
            coefficients: vec![c(1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0)],
        };
        let v = p.evaluate(&[c(1.0, 1.0), c(2.0, 0.0)]);
        assert_abs_diff_eq!(v.re, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 8.0, epsilon = 1e-15);
    }
}
