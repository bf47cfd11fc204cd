// SPDX-License-Identifier: MIT OR Apache-2.0

//! Recovery of the expansion coefficients `beta_i = (psi_i, S)` from the
//! selected step-function estimate.
//!
//! The estimate is piecewise constant, equal to `S_hat(z_l)` on
//! `]z_{l-1}, z_l]` with `z_0 = a`, so every coefficient is a sum of cell
//! integrals of `psi_i`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_sim::Signal;
use crate::numeric::{adaptive_simpson, compensated_sum, CompensatedSum};

/// A family `psi_1, psi_2, ...` on `[a, b]`.
pub trait ProjectionBasis {
    fn interval(&self) -> (f64, f64);

    fn value(&self, i: usize, x: f64) -> f64;

    /// `int_lo^hi psi_i(x) dx`; quadrature unless overridden.
    fn cell_integral(&self, i: usize, lo: f64, hi: f64) -> f64 {
        adaptive_simpson(|x| self.value(i, x), lo, hi, 1e-13 * (hi - lo).max(f64::MIN_POSITIVE), 1)
    }
}

/// The trigonometric basis on `[a, b]`, with cell integrals in closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigPsi {
    pub a: f64,
    pub b: f64,
}

impl ProjectionBasis for TrigPsi {
    fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn value(&self, i: usize, x: f64) -> f64 {
        crate::fourier_basis::basis_function(i, self.a, self.b, x)
    }

    fn cell_integral(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let width = self.b - self.a;
        if i == 1 {
            return (hi - lo) / width.sqrt();
        }
        let omega = 2.0 * PI * (i / 2) as f64 / width;
        let (u_lo, u_hi) = (omega * (lo - self.a), omega * (hi - self.a));
        let amp = (2.0 / width).sqrt() / omega;
        if i.is_multiple_of(2) {
            // sin(u_hi) - sin(u_lo) = 2 cos((u_hi+u_lo)/2) sin((u_hi-u_lo)/2)
            amp * 2.0 * (0.5 * (u_hi + u_lo)).cos() * (0.5 * (u_hi - u_lo)).sin()
        } else {
            // cos(u_lo) - cos(u_hi) = 2 sin((u_hi+u_lo)/2) sin((u_hi-u_lo)/2)
            amp * 2.0 * (0.5 * (u_hi + u_lo)).sin() * (0.5 * (u_hi - u_lo)).sin()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    /// `beta_hat_i` for `i = 1..=i_max`.
    pub coefficients: Vec<f64>,
    pub i_max: usize,
    /// Largest deviation of the Gram matrix from the identity, when checked.
    pub orthonormality_defect: Option<f64>,
}

impl BetaEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,beta_hat_i\n");
        for (i, b) in self.coefficients.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, b);
        }
        out
    }

    /// `sum beta_hat_i^2`.
    pub fn energy(&self) -> f64 {
        compensated_sum(self.coefficients.iter().map(|b| b * b))
    }
}

/// Max `|(psi_i, psi_j) - 1{i=j}|` over `i, j <= count`, by quadrature.
pub fn orthonormality_defect<B: ProjectionBasis>(basis: &B, count: usize) -> f64 {
    let (a, b) = basis.interval();
    let mut worst = 0.0_f64;
    for i in 1..=count {
        for j in i..=count {
            let g = adaptive_simpson(|x| basis.value(i, x) * basis.value(j, x), a, b, 1e-10, 64);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

const ORTHO_TOL: f64 = 1e-6;

/// `beta_hat_i = int psi_i S_hat` for the step function with values
/// `step_values` on the `d` cells of `[a, b]`.
///
/// With `check_basis` the first `min(i_max, 16)` functions are tested for
/// orthonormality and a warning is logged when the check fails; the
/// projection is computed either way.
pub fn project_coefficients<B: ProjectionBasis>(
    step_values: &[f64],
    basis: &B,
    i_max: usize,
    check_basis: bool,
) -> Result<BetaEstimate> {
    if i_max == 0 {
        return Err(Error::Config("i_max must be >= 1".into()));
    }
    if step_values.is_empty() {
        return Err(Error::shape(1, 0));
    }
    let (a, b) = basis.interval();
    let d = step_values.len();
    let edges: Vec<f64> = (0..=d).map(|l| a + (b - a) * l as f64 / d as f64).collect();
    let coefficients = (1..=i_max)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for (l, v) in step_values.iter().enumerate() {
                if *v != 0.0 {
                    acc.add(v * basis.cell_integral(i, edges[l], edges[l + 1]));
                }
            }
            acc.value()
        })
        .collect();
    let orthonormality_defect = check_basis.then(|| orthonormality_defect(basis, i_max.min(16)));
    if let Some(defect) = orthonormality_defect {
        if defect > ORTHO_TOL {
            log::warn!("projection basis is not orthonormal on [{a}, {b}]: Gram defect {defect:.3e}");
        }
    }
    Ok(BetaEstimate { coefficients, i_max, orthonormality_defect })
}

/// `sum_i (beta_hat_i - beta_i)^2` with the shorter vector padded by zeros.
pub fn beta_error(estimate: &BetaEstimate, truth: &[f64]) -> f64 {
    let len = estimate.coefficients.len().max(truth.len());
    compensated_sum((0..len).map(|i| {
        let e = estimate.coefficients.get(i).copied().unwrap_or(0.0);
        let t = truth.get(i).copied().unwrap_or(0.0);
        (e - t) * (e - t)
    }))
}

/// `int_a^b (S_hat(x) - S(x))^2 dx` for the step-function estimate.
pub fn step_l2_error(step_values: &[f64], signal: &Signal) -> f64 {
    let (a, b) = (signal.a(), signal.b());
    let d = step_values.len();
    let mut acc = CompensatedSum::new();
    for (l, &v) in step_values.iter().enumerate() {
        let lo = a + (b - a) * l as f64 / d as f64;
        let hi = a + (b - a) * (l + 1) as f64 / d as f64;
        acc.add(adaptive_simpson(
            |x| {
                let e = v - signal.eval(x.clamp(a, b)).unwrap_or(0.0);
                e * e
            },
            lo,
            hi,
            1e-12 * (hi - lo),
            1,
        ));
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Monomials;

    impl ProjectionBasis for Monomials {
        fn interval(&self) -> (f64, f64) {
            (0.0, 1.0)
        }
        fn value(&self, i: usize, x: f64) -> f64 {
            x.powi(i as i32 - 1)
        }
    }

    #[test]
    fn closed_form_cells_match_quadrature() {
        let psi = TrigPsi { a: -0.5, b: 1.5 };
        for i in 1..12 {
            let exact = psi.cell_integral(i, 0.1, 0.37);
            let quad = adaptive_simpson(|x| psi.value(i, x), 0.1, 0.37, 1e-14, 1);
            assert_abs_diff_eq!(exact, quad, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_step_projects_onto_first_function() {
        let est = project_coefficients(&[0.4; 15], &TrigPsi { a: 0.0, b: 1.0 }, 30, true).unwrap();
        assert_abs_diff_eq!(est.coefficients[0], 0.4, epsilon = 1e-12);
        assert!(est.coefficients[1..].iter().all(|c| c.abs() < 1e-12));
        assert!(est.orthonormality_defect.unwrap() < 1e-8);
        let zero = project_coefficients(&[0.0; 15], &TrigPsi { a: 0.0, b: 1.0 }, 30, false).unwrap();
        assert!(zero.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn non_orthonormal_basis_still_projects() {
        let est = project_coefficients(&[1.0; 4], &Monomials, 3, true).unwrap();
        assert!(est.orthonormality_defect.unwrap() > 0.1);
        assert_abs_diff_eq!(est.coefficients[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(est.coefficients[2], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_error_cases() {
        let est = BetaEstimate { coefficients: vec![0.1, 0.2], i_max: 2, orthonormality_defect: None };
        assert_eq!(beta_error(&est, &[0.1, 0.2]), 0.0);
        assert_abs_diff_eq!(beta_error(&est, &[0.1, 0.1]), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(beta_error(&est, &[0.1, 0.2, 0.3]), 0.09, epsilon = 1e-15);
    }

    #[test]
    fn bessel_inequality_for_step_functions() {
        let values: Vec<f64> = (0..21).map(|l| (l as f64 * 0.7).sin() * 0.4).collect();
        let est = project_coefficients(&values, &TrigPsi { a: 0.0, b: 1.0 }, 21, false).unwrap();
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>() / 21.0;
        assert!(est.energy() <= norm + 1e-9);
    }
}
