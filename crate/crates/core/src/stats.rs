//! Empirical zero statistics in dimension one: rescaled zeros, their
//! intensity, and an edge-corrected pair-correlation estimator.
//!
//! Pair convention: every unordered pair at distance `d` in a bin adds 2 to
//! that bin's count, i.e. ordered pairs `i != j`. Self-pairs (the diagonal
//! atom of the limit) never enter.
//!
//! Edge correction is by translation: a pair with offset `h` can be observed
//! only if both ends fall in the disc window `W`, which happens on a set of
//! area `A(|h|) = |W ∩ (W + h)|`. The expected count in an annulus is
//! `lambda^2 int_annulus g(|h|) A(|h|) dh`, so each bin is normalized by
//! `lambda^2 int_annulus A(|h|) dh` and estimates the `s A(s)`-weighted mean
//! of `g` over the bin.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{EnsembleParams, EnsembleSampler};
use crate::error::{Error, Result};
use crate::formulas::{hannay_h, CorrelationCurve, Dimension};
use crate::gaussian::MCEstimate;
use crate::quadrature::{integrate, Tolerance};
use crate::rng::Moments;
use crate::roots::{find_roots, RootSet};

/// Fewest samples for which an across-sample standard error is defined.
pub const MIN_SAMPLES: u64 = 2;

/// Observation disc of radius `radius` centred at the chart origin, in
/// scaled coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledWindow {
    radius: f64,
    degree: Option<u32>,
}

impl ScaledWindow {
    /// Window for degree-`N` zeros; requires `radius <= sqrt(N) / 2`.
    pub fn new(radius: f64, degree: u32) -> Result<Self> {
        let limit = 0.5 * f64::from(degree).sqrt();
        if !(radius > 0.0) || radius > limit {
            return Err(Error::domain(
                "ScaledWindow::new",
                format!("radius {radius} must lie in (0, sqrt(N)/2 = {limit}]"),
            ));
        }
        Ok(ScaledWindow {
            radius,
            degree: Some(degree),
        })
    }

    /// Window for synthetic point patterns with no chart attached.
    pub fn disc(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::domain("ScaledWindow::disc", format!("radius {radius} must be > 0")));
        }
        Ok(ScaledWindow { radius, degree: None })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn degree(&self) -> Option<u32> {
        self.degree
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() <= self.radius
    }

    /// Set covariance `|W ∩ (W + h)|` for `|h| = s`.
    pub fn set_covariance(&self, s: f64) -> f64 {
        let r = self.radius;
        if s >= 2.0 * r {
            return 0.0;
        }
        let s = s.max(0.0);
        2.0 * r * r * (s / (2.0 * r)).acos() - 0.5 * s * (4.0 * r * r - s * s).sqrt()
    }

    /// `int_{lo <= |h| < hi} A(|h|) dh`.
    pub fn annulus_weight(&self, lo: f64, hi: f64) -> f64 {
        self.weighted_annulus_integral(lo, hi, |_| 1.0)
    }

    fn weighted_annulus_integral(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let tol = Tolerance::new(1e-13, 1e-12);
        2.0 * PI * integrate(|s| s * self.set_covariance(s) * f(s), lo, hi, &tol).value
    }
}

/// Scaled zeros `sqrt(N) z` that fall in the window.
pub fn rescale_roots(rs: &RootSet, degree: u32, window: &ScaledWindow) -> Result<Vec<Complex64>> {
    if rs.degree != degree {
        return Err(Error::domain(
            "rescale_roots",
            format!("root set has degree {}, expected {degree}", rs.degree),
        ));
    }
    if let Some(d) = window.degree {
        if d != degree {
            return Err(Error::domain("rescale_roots", format!("window is for degree {d}, got {degree}")));
        }
    }
    let scale = f64::from(degree).sqrt();
    Ok(rs
        .roots
        .iter()
        .map(|z| z * scale)
        .filter(|z| window.contains(*z))
        .collect())
}

fn validate_edges(edges: &[f64], window: &ScaledWindow) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::domain("bin edges", "need at least two edges"));
    }
    if !(edges[0] >= 0.0) || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("bin edges", "edges must be nonnegative and strictly ascending"));
    }
    let r_max = edges[edges.len() - 1];
    if r_max > window.radius * (1.0 + 1e-12) {
        return Err(Error::domain(
            "bin edges",
            format!("largest edge {r_max} exceeds the window radius {}", window.radius),
        ));
    }
    Ok(())
}

/// Edge-correction-weighted pair counts accumulated over samples.
///
/// All stored quantities are sums of integers, so merging histograms is
/// exact and independent of order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairHistogram {
    window: ScaledWindow,
    edges: Vec<f64>,
    counts: Vec<f64>,
    counts_sq: Vec<f64>,
    points: f64,
    samples: u64,
}

impl PairHistogram {
    pub fn new(window: ScaledWindow, edges: Vec<f64>) -> Result<Self> {
        validate_edges(&edges, &window)?;
        let bins = edges.len() - 1;
        Ok(PairHistogram {
            window,
            edges,
            counts: vec![0.0; bins],
            counts_sq: vec![0.0; bins],
            points: 0.0,
            samples: 0,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Adds one sample. Points outside the window are ignored.
    pub fn add_sample(&mut self, points: &[Complex64]) {
        let inside: Vec<Complex64> = points.iter().copied().filter(|z| self.window.contains(*z)).collect();
        let mut local = vec![0u64; self.counts.len()];
        let (lo, hi) = (self.edges[0], self.edges[self.edges.len() - 1]);
        for (i, a) in inside.iter().enumerate() {
            for b in &inside[i + 1..] {
                let d = (a - b).norm();
                if d < lo || d >= hi {
                    continue;
                }
                let bin = self.edges.partition_point(|e| *e <= d) - 1;
                local[bin] += 2;
            }
        }
        for ((c, c2), l) in self.counts.iter_mut().zip(self.counts_sq.iter_mut()).zip(local) {
            let l = l as f64;
            *c += l;
            *c2 += l * l;
        }
        self.points += inside.len() as f64;
        self.samples += 1;
    }

    pub fn merge(mut self, other: &PairHistogram) -> Result<Self> {
        if self.edges != other.edges || self.window != other.window {
            return Err(Error::domain("PairHistogram::merge", "histograms have different bins or windows"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.counts_sq.iter_mut().zip(&other.counts_sq) {
            *a += b;
        }
        self.points += other.points;
        self.samples += other.samples;
        Ok(self)
    }

    /// Pooled intensity estimate, points per unit area.
    pub fn intensity(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.points / (self.samples as f64 * self.window.area())
        }
    }

    /// Normalized pair correlation per bin with across-sample standard
    /// errors. The curve grid holds the bin midpoints.
    pub fn finish(&self) -> Result<PairCorrelation> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                got: self.samples as usize,
                floor: MIN_SAMPLES as usize,
            });
        }
        let n = self.samples as f64;
        let lambda = self.intensity();
        let mut values = Vec::with_capacity(self.counts.len());
        let mut stderr = Vec::with_capacity(self.counts.len());
        let mut empty_bins = Vec::new();
        for (b, w) in self.edges.windows(2).enumerate() {
            let norm = lambda * lambda * self.window.annulus_weight(w[0], w[1]);
            if self.counts[b] == 0.0 {
                empty_bins.push(b);
            }
            if !(norm > 0.0) {
                values.push(0.0);
                stderr.push(0.0);
                continue;
            }
            let mean = self.counts[b] / n;
            let var = ((self.counts_sq[b] - n * mean * mean) / (n - 1.0)).max(0.0);
            values.push(mean / norm);
            stderr.push((var / n).sqrt() / norm);
        }
        let centers: Vec<f64> = self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(PairCorrelation {
            curve: CorrelationCurve::new(centers, values, stderr)?,
            edges: self.edges.clone(),
            empty_bins,
            intensity: lambda,
            samples: self.samples,
        })
    }
}

/// Result of the pair-correlation estimator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub curve: CorrelationCurve,
    pub edges: Vec<f64>,
    /// Bins that received no pairs at all.
    pub empty_bins: Vec<usize>,
    pub intensity: f64,
    pub samples: u64,
}

/// Pair correlation of independent samples of a point process observed in
/// `window`.
pub fn pair_correlation_estimate(
    point_sets: &[Vec<Complex64>],
    window: &ScaledWindow,
    edges: &[f64],
) -> Result<PairCorrelation> {
    let mut hist = PairHistogram::new(*window, edges.to_vec())?;
    for pts in point_sets {
        hist.add_sample(pts);
    }
    hist.finish()
}

/// Mean number of points per unit area, with across-sample standard error.
pub fn density_estimate(point_sets: &[Vec<Complex64>], window: &ScaledWindow) -> MCEstimate {
    let mut m = Moments::default();
    for pts in point_sets {
        m.push(pts.iter().filter(|z| window.contains(**z)).count() as f64);
    }
    let area = window.area();
    MCEstimate {
        value: m.mean() / area,
        stderr: m.stderr() / area,
        samples: m.count,
        seed: None,
    }
}

/// Limit pair correlation averaged over each bin with the estimator's own
/// weight `s A(s)`, i.e. the value the binned estimator converges to.
pub fn binned_limit_curve(m: Dimension, edges: &[f64], window: &ScaledWindow) -> Result<Vec<f64>> {
    if m.get() != 1 {
        return Err(Error::domain("binned_limit_curve", "empirical statistics are implemented for m = 1"));
    }
    validate_edges(edges, window)?;
    Ok(edges
        .windows(2)
        .map(|w| {
            let num = window.weighted_annulus_integral(w[0], w[1], |s| hannay_h(0.5 * s * s));
            num / window.annulus_weight(w[0], w[1])
        })
        .collect())
}

/// Configuration of the sample -> roots -> rescale -> estimate pipeline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalConfig {
    pub degree: u32,
    pub samples: u64,
    pub seed: u64,
    pub radius: f64,
    pub edges: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalResult {
    pub estimate: PairCorrelation,
    pub density: MCEstimate,
    /// Bin-averaged limit curve, see [`binned_limit_curve`].
    pub theory: Vec<f64>,
    pub worst_residual: f64,
}

/// Samples per work item of the empirical pipeline.
const PIPELINE_BLOCK: u64 = 64;

/// Runs the empirical pipeline for SU(2) polynomials on the current rayon
/// pool. Polynomial `i` uses stream `i` of `seed`; blocks of consecutive
/// indices are merged in index order, so the output does not depend on the
/// number of workers. The first failure (by sample index) aborts the run.
pub fn empirical_pair_correlation(cfg: &EmpiricalConfig) -> Result<EmpiricalResult> {
    if cfg.samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: cfg.samples as usize,
            floor: MIN_SAMPLES as usize,
        });
    }
    let window = ScaledWindow::new(cfg.radius, cfg.degree)?;
    let params = EnsembleParams::new(Dimension::ONE, cfg.degree, cfg.seed)?;
    let sampler = EnsembleSampler::new(params);
    let empty = PairHistogram::new(window, cfg.edges.clone())?;
    let theory = binned_limit_curve(Dimension::ONE, &cfg.edges, &window)?;

    struct Block {
        hist: PairHistogram,
        counts: Moments,
        worst: f64,
    }
    let blocks = cfg.samples.div_ceil(PIPELINE_BLOCK);
    let results: Vec<Result<Block>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut block = Block {
                hist: empty.clone(),
                counts: Moments::default(),
                worst: 0.0,
            };
            for i in b * PIPELINE_BLOCK..((b + 1) * PIPELINE_BLOCK).min(cfg.samples) {
                let section = sampler.sample(i);
                let roots = find_roots(&section)?;
                block.worst = block.worst.max(roots.worst_residual());
                let pts = rescale_roots(&roots, cfg.degree, &window)?;
                block.counts.push(pts.len() as f64);
                block.hist.add_sample(&pts);
            }
            Ok(block)
        })
        .collect();

    let mut hist = empty;
    let mut counts = Moments::default();
    let mut worst: f64 = 0.0;
    for r in results {
        let block = r?;
        hist = hist.merge(&block.hist)?;
        counts = counts.merge(block.counts);
        worst = worst.max(block.worst);
    }
    let area = window.area();
    Ok(EmpiricalResult {
        estimate: hist.finish()?,
        density: MCEstimate {
            value: counts.mean() / area,
            stderr: counts.stderr() / area,
            samples: counts.count,
            seed: Some(cfg.seed),
        },
        theory,
        worst_residual: worst,
    })
}

/// Homogeneous Poisson pattern of intensity `lambda` in `window`, drawn from
/// stream `stream` of `seed`.
pub fn poisson_pattern(lambda: f64, window: &ScaledWindow, seed: u64, stream: u64) -> Vec<Complex64> {
    use rand_distr::{Distribution, Poisson};
    let mut rng = crate::rng::StreamRng::new(seed, stream);
    let mean = lambda * window.area();
    let count = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng.inner()) as usize).unwrap_or(0)
    } else {
        0
    };
    let r = window.radius();
    (0..count)
        .map(|_| {
            let rho = r * rng.uniform().sqrt();
            Complex64::from_polar(rho, std::f64::consts::TAU * rng.uniform())
        })
        .collect()
}
