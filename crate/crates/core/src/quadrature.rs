//! Globally adaptive Gauss–Kronrod (10/21-point) integration on finite
//! intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae on [-1, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208880730898,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Stopping rule for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 2000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
        converged: true,
    };

    pub fn into_result(self, tol: &Tolerance) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::QuadratureNonConvergence {
                value: self.value,
                error_estimate: self.error,
                tolerance: tol.target(self.value),
            })
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    // roundoff floor
    error = error.max(50.0 * f64::EPSILON * abs_sum * half.abs());
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, bisecting the segment with the largest error
/// estimate until the summed estimate meets `tol` or the interval budget is
/// spent. Integrable endpoint singularities (e.g. `x log x`) are fine since
/// the integrand is never evaluated at the endpoints.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: &Tolerance) -> Integral {
    if a == b {
        return Integral::ZERO;
    }
    let first = kronrod21(&mut f, a, b);
    let mut evaluations = 21;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    // segments that can no longer be split in floating point
    let mut frozen_error = 0.0;
    let mut frozen_value = 0.0;

    while error > tol.target(value) && heap.len() < tol.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            frozen_error += worst.error;
            frozen_value += worst.value;
            continue;
        }
        let left = kronrod21(&mut f, worst.a, mid);
        let right = kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // resum to shed accumulated update error
    let mut total_value = frozen_value;
    let mut total_error = frozen_error;
    for s in heap.iter() {
        total_value += s.value;
        total_error += s.error;
    }
    Integral {
        value: total_value,
        error: total_error,
        evaluations,
        converged: total_error <= tol.target(total_value) && total_value.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kronrod_weights_are_consistent() {
        let ksum: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert_abs_diff_eq!(ksum, 2.0, epsilon = 1e-15);
        let gsum: f64 = 2.0 * WG.iter().sum::<f64>();
        assert_abs_diff_eq!(gsum, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn single_rule_is_exact_for_high_degree_polynomials() {
        // K21 integrates degree 31 exactly on [-1, 1]
        for deg in [0u32, 2, 10, 20, 30] {
            let mut f = |x: f64| x.powi(deg as i32);
            let s = kronrod21(&mut f, -1.0, 1.0);
            assert_abs_diff_eq!(s.value, 2.0 / f64::from(deg + 1), epsilon = 1e-14);
        }
    }

    #[test]
    fn endpoint_log_singularity() {
        // int_0^1 x^0.5 log x dx = -4/9
        let tol = Tolerance::new(1e-14, 1e-14);
        let r = integrate(|x| x.sqrt() * x.ln(), 0.0, 1.0, &tol);
        assert!(r.converged);
        assert_abs_diff_eq!(r.value, -4.0 / 9.0, epsilon = 1e-13);
        // int_0^1 log x dx = -1
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, &tol);
        assert_abs_diff_eq!(r.value, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_moment() {
        let tol = Tolerance::new(1e-15, 1e-14);
        let r = integrate(|x: f64| 2.0 * x * (-x * x).exp(), 0.0, 8.0, &tol);
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn reversed_and_empty_interval() {
        let tol = Tolerance::new(1e-12, 0.0);
        assert_eq!(integrate(|x| x, 1.0, 1.0, &tol).value, 0.0);
        let r = integrate(|x| x, 1.0, 0.0, &tol);
        assert_abs_diff_eq!(r.value, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tol = Tolerance {
            abs: 1e-300,
            rel: 0.0,
            max_intervals: 4,
        };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, &tol);
        assert!(!r.converged);
        assert!(matches!(r.into_result(&tol), Err(Error::QuadratureNonConvergence { .. })));
    }
}
