//! Closed-form scaling limits of zero correlations.
//!
//! All radial quantities use the scaled separation `r = |z - w|` and the
//! convention `t = r^2 / 2`. In complex dimension one the normalized pair
//! correlation of the limit zero process is Hannay's function `H(t)` plus a
//! diagonal atom of mass `pi`; in dimension `m > 1` it is `gamma_m(t)`, which
//! has a `1/t` pole at the diagonal but no atom.

use std::f64::consts::PI;
use std::num::NonZeroU32;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `t` the Taylor expansions are used instead of the
/// sinh/cosh closed forms, whose numerators cancel to order `t^4`.
pub const SERIES_CROSSOVER: f64 = 1e-2;

/// Above this value `1/sinh^2` and `coth` are used directly (no overflow of
/// `sinh^3`).
const LARGE_T: f64 = 20.0;

/// Complex dimension `m >= 1` of the underlying manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dimension(NonZeroU32);

impl Dimension {
    pub const ONE: Dimension = Dimension(NonZeroU32::MIN);

    pub fn new(m: u32) -> Result<Self> {
        NonZeroU32::new(m)
            .map(Dimension)
            .ok_or_else(|| Error::domain("Dimension::new", "complex dimension must be >= 1"))
    }

    pub fn get(self) -> u32 {
        self.0.get()
    }

    fn as_f64(self) -> f64 {
        f64::from(self.get())
    }
}

impl TryFrom<u32> for Dimension {
    type Error = Error;
    fn try_from(m: u32) -> Result<Self> {
        Dimension::new(m)
    }
}

impl From<Dimension> for u32 {
    fn from(d: Dimension) -> u32 {
        d.get()
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.get().fmt(f)
    }
}

/// A scaled separation `r >= 0` together with `t = r^2 / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialArgument {
    r: f64,
    t: f64,
}

impl RadialArgument {
    pub fn from_r(r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain("RadialArgument::from_r", format!("r = {r} must be finite and >= 0")));
        }
        Ok(RadialArgument { r, t: 0.5 * r * r })
    }

    pub fn from_t(t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain("RadialArgument::from_t", format!("t = {t} must be finite and >= 0")));
        }
        Ok(RadialArgument { r: (2.0 * t).sqrt(), t })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

/// Radial grid of `(r, value, stderr)` triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    stderr: Vec<f64>,
}

impl CorrelationCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, stderr: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.len() != stderr.len() {
            return Err(Error::domain(
                "CorrelationCurve::new",
                format!(
                    "length mismatch: grid {}, values {}, stderr {}",
                    grid.len(),
                    values.len(),
                    stderr.len()
                ),
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("CorrelationCurve::new", "grid must be strictly ascending"));
        }
        if stderr.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::domain("CorrelationCurve::new", "stderr entries must be >= 0"));
        }
        Ok(CorrelationCurve { grid, values, stderr })
    }

    /// A curve with zero standard errors, for closed-form values.
    pub fn analytic(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let stderr = vec![0.0; grid.len()];
        Self::new(grid, values, stderr)
    }

    /// Tabulates `f` on `grid`.
    pub fn tabulate(grid: Vec<f64>, f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let values = grid.iter().copied().map(f).collect::<Result<Vec<_>>>()?;
        Self::analytic(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.grid
            .iter()
            .zip(&self.values)
            .zip(&self.stderr)
            .map(|((r, v), s)| (*r, *v, *s))
    }
}

/// The self-pair term of the one-dimensional limit: a point mass
/// `mass * delta_0(z - w)` in units of the product of one-point densities.
/// It is never represented on a radial grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagonalAtom {
    pub mass: f64,
}

/// The diagonal atom of the normalized limit pair correlation, if any.
/// Present only in dimension one (mass `pi`).
pub fn diagonal_atom(m: Dimension) -> Option<DiagonalAtom> {
    (m.get() == 1).then_some(DiagonalAtom { mass: PI })
}

/// Coefficients `c_k` of `t^k` (k = -1, 0, 1, 3, 5, 7, 9) in the small-`t`
/// expansion of `gamma_m`.
fn gamma_series_coefficients(m: f64) -> [(i32, f64); 7] {
    let m2 = m * m;
    [
        (-1, (m - 1.0) / (2.0 * m)),
        (0, (m - 1.0) / (2.0 * m)),
        (1, (m + 1.0) * (m + 2.0) / (6.0 * m2)),
        (3, -(m + 3.0) * (m + 4.0) / (90.0 * m2)),
        (5, (m + 5.0) * (m + 6.0) / (945.0 * m2)),
        (7, -(m + 7.0) * (m + 8.0) / (9450.0 * m2)),
        (9, (m + 9.0) * (m + 10.0) / (93555.0 * m2)),
    ]
}

/// Odd part of the expansion, `c_1 t + c_3 t^3 + ... + c_9 t^9`. The
/// higher terms are summed first by Horner in `t^2` and added to `c_1 t`
/// last, so for `m = 1` the result is `t + small` with a single rounding.
fn gamma_series_regular(m: f64, t: f64) -> f64 {
    let c = gamma_series_coefficients(m);
    let t2 = t * t;
    let mut acc = 0.0;
    for &(_, ck) in c[3..].iter().rev() {
        acc = acc * t2 + ck;
    }
    c[2].1 * t + acc * t2 * t
}

/// Hannay's function
/// `H(t) = ((sinh^2 t + t^2) cosh t - 2 t sinh t) / sinh^3 t`,
/// extended continuously by `H(0) = 0`.
///
/// Negative or non-finite arguments return NaN.
pub fn hannay_h(t: f64) -> f64 {
    if !(t >= 0.0) {
        return f64::NAN;
    }
    if t < SERIES_CROSSOVER {
        return gamma_series_regular(1.0, t);
    }
    if t < LARGE_T {
        let (s, c) = (t.sinh(), t.cosh());
        return ((s * s + t * t) * c - 2.0 * t * s) / (s * s * s);
    }
    let coth = 1.0 / t.tanh();
    let csch2 = (1.0 / t.sinh()).powi(2);
    (1.0 + t * t * csch2) * coth - 2.0 * t * csch2
}

/// The limit pair correlation in dimension `m`,
/// `gamma_m(t) = ([ (m^2+m)/2 sinh^2 t + t^2 ] cosh t - (m+1) t sinh t) / (m^2 sinh^3 t) + (m-1)/(2m)`.
///
/// For `m = 1` this coincides with [`hannay_h`] and `t = 0` is allowed; for
/// `m > 1` there is a pole at the origin.
pub fn gamma_m(m: Dimension, t: f64) -> Result<f64> {
    let mf = m.as_f64();
    if !t.is_finite() || t < 0.0 || (t == 0.0 && m.get() > 1) {
        return Err(Error::domain(
            "gamma_m",
            format!("t = {t}: need t > 0 (t = 0 only for m = 1)"),
        ));
    }
    let offset = (mf - 1.0) / (2.0 * mf);
    if t < SERIES_CROSSOVER {
        let pole = if m.get() > 1 { offset / t } else { 0.0 };
        return Ok(pole + offset + gamma_series_regular(mf, t));
    }
    let a = 0.5 * (mf * mf + mf);
    let b = mf + 1.0;
    let value = if t < LARGE_T {
        let (s, c) = (t.sinh(), t.cosh());
        ((a * s * s + t * t) * c - b * t * s) / (mf * mf * s * s * s)
    } else {
        let coth = 1.0 / t.tanh();
        let csch2 = (1.0 / t.sinh()).powi(2);
        ((a + t * t * csch2) * coth - b * t * csch2) / (mf * mf)
    };
    Ok(value + offset)
}

/// Modulus of the universal scaled Szegő kernel, `exp(-|z - w|^2 / 2)`.
///
/// # Panics
/// If `z` and `w` have different lengths.
pub fn limit_kernel_modulus(z: &[Complex64], w: &[Complex64]) -> f64 {
    assert_eq!(z.len(), w.len(), "points must live in the same C^m");
    let d2: f64 = z.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
    (-0.5 * d2).exp()
}

/// Constant-free part of the Laplacian `Delta G(e^{-r^2/2})`,
/// `m log(1 - e^{-r^2}) + r^2 / (e^{r^2} - 1)`.
///
/// The additive constant of the true Laplacian is fixed to zero; only
/// derivatives and differences of this function carry meaning.
pub fn laplacian_g_closed(m: Dimension, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("laplacian_g_closed", format!("r = {r} must be > 0")));
    }
    let r2 = r * r;
    Ok(m.as_f64() * (-(-r2).exp_m1()).ln() + r2 / r2.exp_m1())
}

/// Smooth part (for `r > 0`) of the bi-Laplacian `Delta^2 G(e^{-r^2/2})` in
/// dimension one; the `4 pi delta_0` atom at the origin is excluded.
pub fn bilaplacian_g_closed(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("bilaplacian_g_closed", format!("r = {r} must be > 0")));
    }
    let r2 = r * r;
    if r2 > 700.0 {
        // every term is O(r^4 e^{-r^2}) below double precision
        return Ok(0.0);
    }
    let e = r2.exp();
    let x = r2.exp_m1();
    let num = 8.0 * x * x - 16.0 * r2 * e * x + 4.0 * r2 * r2 * e * (e + 1.0);
    Ok(num / (x * x * x))
}

/// Limit density of zeros per unit Euclidean volume of `C^m`: `m / pi`.
pub fn expected_density(m: Dimension) -> f64 {
    m.as_f64() / PI
}

/// Off-diagonal normalized limit pair correlation `K_2 / (K_1 x K_1)` at
/// separation `r > 0`: `H(r^2/2)` for `m = 1`, `gamma_m(r^2/2)` otherwise.
/// The `m = 1` diagonal atom is reported by [`diagonal_atom`].
pub fn limit_pair_density(m: Dimension, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("limit_pair_density", format!("r = {r} must be > 0")));
    }
    let t = RadialArgument::from_r(r)?.t();
    if m.get() == 1 {
        Ok(hannay_h(t))
    } else {
        gamma_m(m, t)
    }
}
