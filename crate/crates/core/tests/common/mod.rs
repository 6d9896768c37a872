//! Shared helpers for the integration suites.
#![allow(dead_code)]

use ndarray::{Array1, Array2};

/// Cyclic coordinate descent for `(1/(2n)) ||y - X b||^2 + lambda ||b||_1`.
/// Independent implementation path used as an oracle for the prox solver.
pub fn lasso_cd(x: &Array2<f64>, y: &Array1<f64>, lambda: f64, sweeps: usize) -> Array1<f64> {
    let (n, p) = x.dim();
    let nf = n as f64;
    let mut beta = Array1::<f64>::zeros(p);
    let mut residual = y.clone();
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).dot(&x.column(j)) / nf).collect();
    for _ in 0..sweeps {
        let mut max_change = 0.0_f64;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho = x.column(j).dot(&residual) / nf + col_sq[j] * beta[j];
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / col_sq[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                residual = &residual - &(&x.column(j) * delta);
                beta[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change < 1e-14 {
            break;
        }
    }
    beta
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Least-squares line fit returning (slope, r_squared).
pub fn line_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

pub fn l2_dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    (a - b).mapv(|v| v * v).sum().sqrt()
}

/// Print the one-line verdict for an acceptance criterion and assert it.
pub fn report(num: u32, name: &str, pass: bool, details: &str) {
    println!(
        "ACCEPTANCE {num:2} ({name}): {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {num} ({name}) failed: {details}");
}
