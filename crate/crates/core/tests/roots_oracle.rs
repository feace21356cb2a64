use nalgebra::DMatrix;
use num_complex::Complex64;
use zerocorr::ensemble::{EnsembleParams, EnsembleSampler};
use zerocorr::formulas::Dimension;
use zerocorr::roots::{find_roots, CLUSTER_RESIDUAL_TOLERANCE, RESIDUAL_TOLERANCE};

/// Diagonal similarity by powers of two so that row and column norms of
/// every index are comparable.
fn balance(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].norm()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].norm()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / 2.0 {
                f *= 2.0;
                c *= 4.0;
            }
            while c > r * 2.0 {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

fn companion_roots(coefficients: &[Complex64]) -> Vec<Complex64> {
    let n = coefficients.len() - 1;
    let lead = coefficients[n];
    let mut a = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 1..n {
        a[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        a[(i, n - 1)] = -coefficients[i] / lead;
    }
    balance(&mut a);
    let schur = nalgebra::linalg::Schur::new(a);
    schur.eigenvalues().expect("complex Schur form is triangular").iter().copied().collect()
}

#[test]
fn random_section_matches_companion_eigenvalues() {
    let degree = 200;
    let sampler = EnsembleSampler::new(EnsembleParams::new(Dimension::ONE, degree, 2024).unwrap());
    for stream in 0..3 {
        let section = sampler.sample(stream);
        let ours = find_roots(&section).unwrap();
        let oracle = companion_roots(&section.coefficients);
        assert_eq!(ours.len(), degree as usize);
        let mut used = vec![false; ours.len()];
        let mut worst: f64 = 0.0;
        for z in &oracle {
            let (k, d) = ours
                .roots
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, w)| (k, (w - z).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[k] = true;
            worst = worst.max(d / z.norm().max(1.0));
        }
        assert!(worst < 1e-8, "stream {stream}: worst matched distance {worst:e}");
    }
}

#[test]
fn residuals_meet_tolerance_on_random_sections() {
    for degree in [10, 100, 500] {
        let sampler = EnsembleSampler::new(EnsembleParams::new(Dimension::ONE, degree, 5).unwrap());
        for stream in 0..5 {
            let rs = find_roots(&sampler.sample(stream)).unwrap();
            assert_eq!(rs.len(), degree as usize);
            for (res, clustered) in rs.residuals.iter().zip(&rs.clustered) {
                let tol = if *clustered { CLUSTER_RESIDUAL_TOLERANCE } else { RESIDUAL_TOLERANCE };
                assert!(*res <= tol, "degree {degree} stream {stream}: residual {res:e}");
            }
        }
    }
}

#[test]
fn scaling_coefficients_leaves_roots_unchanged() {
    let sampler = EnsembleSampler::new(EnsembleParams::new(Dimension::ONE, 80, 11).unwrap());
    let section = sampler.sample(0);
    let base = find_roots(&section).unwrap();
    for lambda in [Complex64::new(-3.5, 2.0), Complex64::new(0.0, 1.0), Complex64::new(1e-30, 0.0)] {
        let scaled = find_roots(&section.scaled(lambda)).unwrap();
        for z in &base.roots {
            let d = scaled.roots.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-10 * z.norm().max(1.0), "lambda {lambda}: root {z} moved by {d:e}");
        }
    }
}
