//! Reporting helpers shared by the acceptance tests.

use std::sync::{Mutex, MutexGuard};
use std::time::Duration;

static SERIAL: Mutex<()> = Mutex::new(());

/// Held by every check so that runtimes are measured one at a time.
pub fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Prints `criterion N: PASS|FAIL [elapsed of budget] detail`, then asserts
/// both the check and the runtime budget.
pub fn report(n: u32, pass: bool, elapsed: Duration, budget: Duration, detail: String) {
    let within = elapsed <= budget;
    let status = if pass && within { "PASS" } else { "FAIL" };
    println!("criterion {n}: {status} [{elapsed:.2?} of {budget:.0?}] {detail}");
    assert!(pass, "criterion {n} failed: {detail}");
    assert!(within, "criterion {n} exceeded its runtime budget: {elapsed:.2?} > {budget:?}");
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}
