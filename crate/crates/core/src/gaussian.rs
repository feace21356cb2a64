//! Gaussian log-moment integrals and their unitary reduction.
//!
//! For unit vectors `x^1, ..., x^n` in `C^d` the integral
//! `G_n(x) = E[ prod_j log |<c, x^j>| ]` over a standard complex Gaussian
//! `c in C^d` depends only on the Gram matrix `<x^j, x^k>`. Writing the
//! vectors in an adapted orthonormal frame gives a lower-triangular matrix
//! `xi` with `xi xi^* = Gram`, which reduces the integral to `C^n`. For
//! `n = 2` the reduced integral depends only on `cos theta = |<x^1, x^2>|`
//! and is evaluated by quadrature after integrating out the phase with
//! Jensen's formula.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulas::CorrelationCurve;
use crate::quadrature::{integrate, Integral, Tolerance};
use crate::rng::{parallel_moments, StreamRng};

/// Squared diagonal entries of `xi` below this value signal a coincident
/// (rank-deficient) configuration.
pub const RANK_TOLERANCE: f64 = 1e-12;

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const UNIT_NORM_TOLERANCE: f64 = 1e-10;

/// Hermitian, unit-diagonal Gram matrix of unit vectors, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl GramMatrix {
    pub fn from_entries(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::domain("GramMatrix", format!("need {n}x{n} entries, got {}", entries.len())));
        }
        for j in 0..n {
            let d = entries[j * n + j];
            if (d.re - 1.0).abs() > HERMITIAN_TOLERANCE || d.im.abs() > HERMITIAN_TOLERANCE {
                return Err(Error::domain("GramMatrix", format!("diagonal entry {j} is {d}, expected 1")));
            }
            for k in 0..j {
                let (a, b) = (entries[j * n + k], entries[k * n + j]);
                if (a - b.conj()).norm() > HERMITIAN_TOLERANCE {
                    return Err(Error::domain("GramMatrix", format!("not Hermitian at ({j}, {k})")));
                }
                if a.norm() > 1.0 + HERMITIAN_TOLERANCE {
                    return Err(Error::domain("GramMatrix", format!("|g[{j}][{k}]| = {} > 1", a.norm())));
                }
            }
        }
        Ok(GramMatrix { n, entries })
    }

    /// Gram matrix `g_jk = <x^j, x^k> = sum_l x^j_l conj(x^k_l)`.
    pub fn from_vectors(vectors: &[Vec<Complex64>]) -> Result<Self> {
        validate_unit_vectors(vectors)?;
        let n = vectors.len();
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                entries[j * n + k] = inner(&vectors[j], &vectors[k]);
            }
            entries[j * n + j] = Complex64::new(1.0, 0.0);
        }
        Ok(GramMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            entries[j * n + j] = Complex64::new(1.0, 0.0);
        }
        GramMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.n + k]
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &GramMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

fn validate_unit_vectors(vectors: &[Vec<Complex64>]) -> Result<usize> {
    let Some(first) = vectors.first() else {
        return Err(Error::domain("unit vectors", "need at least one vector"));
    };
    let d = first.len();
    for (j, v) in vectors.iter().enumerate() {
        if v.len() != d {
            return Err(Error::domain("unit vectors", format!("vector {j} has length {}, expected {d}", v.len())));
        }
        let norm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::domain("unit vectors", format!("vector {j} has squared norm {norm2}")));
        }
    }
    Ok(d)
}

/// Lower-triangular frame matrix with positive real diagonal and unit rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl XiMatrix {
    /// Validates a row-major lower-triangular matrix.
    pub fn from_entries(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::domain("XiMatrix", "need n x n entries"));
        }
        for j in 0..n {
            for k in j + 1..n {
                if entries[j * n + k] != Complex64::new(0.0, 0.0) {
                    return Err(Error::domain("XiMatrix", format!("entry ({j}, {k}) above the diagonal")));
                }
            }
            let d = entries[j * n + j];
            if d.im != 0.0 || !(d.re > 0.0) {
                return Err(Error::domain("XiMatrix", format!("diagonal entry {j} = {d} must be real and > 0")));
            }
            let row: f64 = entries[j * n..j * n + j + 1].iter().map(|c| c.norm_sqr()).sum();
            if (row - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::domain("XiMatrix", format!("row {j} has squared norm {row}")));
            }
        }
        Ok(XiMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let g = GramMatrix::identity(n);
        XiMatrix {
            n,
            entries: g.entries,
        }
    }

    /// The two-point frame `[[1, 0], [cos theta, sin theta]]`.
    pub fn two_point(cos_theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&cos_theta) {
            return Err(Error::domain("XiMatrix::two_point", format!("cos theta = {cos_theta} must lie in [0, 1)")));
        }
        let sin = ((1.0 - cos_theta) * (1.0 + cos_theta)).sqrt();
        let z = Complex64::new(0.0, 0.0);
        Self::from_entries(
            2,
            vec![Complex64::new(1.0, 0.0), z, Complex64::new(cos_theta, 0.0), Complex64::new(sin, 0.0)],
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * self.n + k]
    }

    /// Row `j` restricted to its nonzero part `xi_j1 .. xi_jj`.
    pub fn row(&self, j: usize) -> &[Complex64] {
        &self.entries[j * self.n..j * self.n + j + 1]
    }

    /// `xi xi^*`.
    pub fn gram(&self) -> GramMatrix {
        let n = self.n;
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                let m = j.min(k);
                entries[j * n + k] = (0..=m).map(|l| self.get(j, l) * self.get(k, l).conj()).sum();
            }
        }
        GramMatrix { n, entries }
    }
}

/// Factors `g = xi xi^*` with `xi` lower triangular and positive diagonal,
/// building the adapted frame one vector at a time.
pub fn gram_to_xi(g: &GramMatrix) -> Result<XiMatrix> {
    let n = g.n;
    let mut xi = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for k in 0..j {
            let mut acc = g.get(j, k);
            for l in 0..k {
                acc -= xi[j * n + l] * xi[k * n + l].conj();
            }
            xi[j * n + k] = acc / xi[k * n + k].re;
        }
        let off: f64 = xi[j * n..j * n + j].iter().map(|c| c.norm_sqr()).sum();
        let diag2 = g.get(j, j).re - off;
        if diag2 < RANK_TOLERANCE {
            return Err(Error::RankDeficient {
                index: j,
                residual: diag2,
                tolerance: RANK_TOLERANCE,
            });
        }
        xi[j * n + j] = Complex64::new(diag2.sqrt(), 0.0);
    }
    Ok(XiMatrix { n, entries: xi })
}

/// A Monte Carlo estimate with its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: Option<u64>,
}

impl MCEstimate {
    /// `|self - other| / sqrt(stderr_a^2 + stderr_b^2)`.
    pub fn z_score(&self, other: &MCEstimate) -> f64 {
        (self.value - other.value).abs() / self.stderr.hypot(other.stderr)
    }

    /// `|self - exact| / stderr`.
    pub fn z_score_exact(&self, exact: f64) -> f64 {
        (self.value - exact).abs() / self.stderr
    }
}

/// Product of `log |dot_j(c)|` for a fresh Gaussian `c`, redrawn in the
/// probability-zero event that some dot product vanishes exactly.
fn log_product(rng: &mut StreamRng, dim: usize, mut dot: impl FnMut(&[Complex64], usize) -> Complex64, n: usize) -> f64 {
    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    'draw: loop {
        for x in c.iter_mut() {
            *x = rng.complex_normal();
        }
        let mut prod = 1.0;
        for j in 0..n {
            let modulus = dot(&c, j).norm();
            if modulus == 0.0 {
                continue 'draw;
            }
            prod *= modulus.ln();
        }
        return prod;
    }
}

/// Monte Carlo estimate of the reduced integral
/// `pi^{-n} int_{C^n} e^{-|c|^2} prod_j log |sum_k xi_jk c_k| dc`.
/// Sample `i` draws from stream `i` of `seed`.
pub fn gn_monte_carlo(xi: &XiMatrix, samples: u64, seed: u64) -> Result<MCEstimate> {
    if samples == 0 {
        return Err(Error::domain("gn_monte_carlo", "samples must be >= 1"));
    }
    let n = xi.n;
    let m = parallel_moments(samples, |i| {
        let mut rng = StreamRng::new(seed, i);
        log_product(
            &mut rng,
            n,
            |c, j| xi.row(j).iter().zip(c).map(|(a, b)| a * b).sum(),
            n,
        )
    });
    Ok(MCEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        samples,
        seed: Some(seed),
    })
}

/// Monte Carlo estimate of the same integral in the ambient dimension `d`,
/// `E[ prod_j log |<c, x^j>| ]` with `c` standard Gaussian in `C^d`.
pub fn g_full_mc(vectors: &[Vec<Complex64>], samples: u64, seed: u64) -> Result<MCEstimate> {
    if samples == 0 {
        return Err(Error::domain("g_full_mc", "samples must be >= 1"));
    }
    let d = validate_unit_vectors(vectors)?;
    let n = vectors.len();
    if d < n {
        return Err(Error::domain("g_full_mc", format!("ambient dimension {d} < number of vectors {n}")));
    }
    let m = parallel_moments(samples, |i| {
        let mut rng = StreamRng::new(seed, i);
        log_product(&mut rng, d, |c, j| inner(c, &vectors[j]), n)
    });
    Ok(MCEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        samples,
        seed: Some(seed),
    })
}

/// Upper cutoff of the radial integrals; the Gaussian weight is below
/// `1e-21` there.
const RADIAL_CUTOFF: f64 = 7.0;

/// Absolute accuracy requested from the two-point quadrature.
pub const G2_TOLERANCE: f64 = 1e-9;

/// `G(cos theta)` by adaptive quadrature of
/// `4 int int r1 r2 e^{-(r1^2 + r2^2)} log r1 log max(r1 cos theta, r2 sin theta) dr1 dr2`.
///
/// The inner integral is split at `r2 = r1 cot theta`, where the maximum
/// switches branch, so both pieces have smooth integrands.
pub fn g2_quadrature(cos_theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&cos_theta) {
        return Err(Error::domain("g2_quadrature", format!("cos theta = {cos_theta} must lie in [0, 1]")));
    }
    let sin_theta = ((1.0 - cos_theta) * (1.0 + cos_theta)).sqrt();
    let integral = g2_cos_sin(cos_theta, sin_theta);
    if !integral.converged || integral.error > G2_TOLERANCE {
        return Err(Error::QuadratureNonConvergence {
            value: integral.value,
            error_estimate: integral.error,
            tolerance: G2_TOLERANCE,
        });
    }
    Ok(integral.value)
}

/// `G(e^{-r^2/2})` with `sin theta = sqrt(1 - e^{-r^2})` formed without
/// cancellation.
pub fn g2_of_separation(r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain("g2_of_separation", format!("r = {r} must be >= 0")));
    }
    let r2 = r * r;
    let integral = g2_cos_sin((-0.5 * r2).exp(), (-(-r2).exp_m1()).sqrt());
    integral.into_result(&Tolerance::new(G2_TOLERANCE, 0.0))
}

/// Raw quadrature result for given `(cos theta, sin theta)`; the reported
/// error adds the outer estimate and the worst inner estimate.
pub fn g2_cos_sin(c: f64, s: f64) -> Integral {
    let inner_tol = Tolerance::new(1e-14, 1e-13);
    let outer_tol = Tolerance::new(1e-13, 1e-13);
    let mut inner_error: f64 = 0.0;
    let mut inner_ok = true;
    let mut inner_evals = 0;

    let outer = integrate(
        |r1: f64| {
            // switch point of the max in the inner variable
            let split = if s > 0.0 { (r1 * c / s).min(RADIAL_CUTOFF) } else { RADIAL_CUTOFF };
            let mut val = 0.0;
            if split > 0.0 {
                let log_first = (r1 * c).ln();
                let low = integrate(|r2| 2.0 * r2 * (-r2 * r2).exp() * log_first, 0.0, split, &inner_tol);
                val += low.value;
                inner_error = inner_error.max(low.error);
                inner_ok &= low.converged;
                inner_evals += low.evaluations;
            }
            if split < RADIAL_CUTOFF {
                let high = integrate(
                    |r2| 2.0 * r2 * (-r2 * r2).exp() * (r2 * s).ln(),
                    split,
                    RADIAL_CUTOFF,
                    &inner_tol,
                );
                val += high.value;
                inner_error = inner_error.max(high.error);
                inner_ok &= high.converged;
                inner_evals += high.evaluations;
            }
            2.0 * r1 * (-r1 * r1).exp() * r1.ln() * val
        },
        0.0,
        RADIAL_CUTOFF,
        &outer_tol,
    );
    Integral {
        value: outer.value,
        error: outer.error + inner_error,
        evaluations: outer.evaluations + inner_evals,
        converged: outer.converged && inner_ok,
    }
}

/// Finite-difference derivative with its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialDerivative {
    pub value: f64,
    pub step: f64,
    pub error_estimate: f64,
}

/// Richardson-extrapolated central difference of `curve` at the grid node
/// `r`, of order 1 or 2. Uses steps `h, 2h, 4h` when the grid allows and
/// `h, 2h` otherwise; the grid must be uniform around `r`.
pub fn numeric_radial_derivative(curve: &CorrelationCurve, order: u8, r: f64) -> Result<RadialDerivative> {
    if order != 1 && order != 2 {
        return Err(Error::domain("numeric_radial_derivative", format!("order {order} not in {{1, 2}}")));
    }
    let grid = curve.grid();
    let values = curve.values();
    let n = grid.len();
    let (first, last) = match (grid.first(), grid.last()) {
        (Some(a), Some(b)) if *a < r && r < *b => (*a, *b),
        _ => {
            return Err(Error::domain("numeric_radial_derivative", format!("r = {r} is not interior to the grid")));
        }
    };
    let i = grid
        .iter()
        .position(|g| (g - r).abs() <= 1e-9 * r.abs().max(1.0))
        .ok_or_else(|| Error::domain("numeric_radial_derivative", format!("r = {r} is not a grid node")))?;
    let reach = i.min(n - 1 - i);
    if reach < 2 {
        return Err(Error::GridTooCoarse {
            order,
            r,
            required_spacing: (r - first).min(last - r) / 2.0,
        });
    }
    let h = grid[i + 1] - grid[i];
    let levels = if reach >= 4 { 3 } else { 2 };
    let span = if levels == 3 { 4 } else { 2 };
    for k in i - span..i + span {
        if ((grid[k + 1] - grid[k]) - h).abs() > 1e-6 * h {
            return Err(Error::domain("numeric_radial_derivative", "grid is not uniform around r"));
        }
    }
    let diff = |k: usize| -> f64 {
        let step = h * k as f64;
        match order {
            1 => (values[i + k] - values[i - k]) / (2.0 * step),
            _ => (values[i + k] - 2.0 * values[i] + values[i - k]) / (step * step),
        }
    };
    let d1 = diff(1);
    let d2 = diff(2);
    let r1 = (4.0 * d1 - d2) / 3.0;
    if levels == 2 {
        return Ok(RadialDerivative {
            value: r1,
            step: h,
            error_estimate: (r1 - d1).abs(),
        });
    }
    let d4 = diff(4);
    let r1_coarse = (4.0 * d2 - d4) / 3.0;
    let r2 = (16.0 * r1 - r1_coarse) / 15.0;
    Ok(RadialDerivative {
        value: r2,
        step: h,
        error_estimate: (r2 - r1).abs(),
    })
}

/// `(d^2/dr^2 + (2m - 1)/r d/dr) f` at a grid node: the Euclidean Laplacian
/// on `C^m` of a radial function.
pub fn numeric_radial_laplacian(curve: &CorrelationCurve, m: u32, r: f64) -> Result<f64> {
    let d1 = numeric_radial_derivative(curve, 1, r)?;
    let d2 = numeric_radial_derivative(curve, 2, r)?;
    Ok(d2.value + f64::from(2 * m - 1) / r * d1.value)
}
