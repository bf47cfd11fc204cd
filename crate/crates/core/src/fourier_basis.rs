// SPDX-License-Identifier: MIT OR Apache-2.0

//! Trigonometric basis on `[a, b]` and the empirical inner product on the
//! grid `z_l = a + l (b - a)/d`.
//!
//! `phi_1 = 1/sqrt(b - a)`, and for `j >= 2`
//! `phi_j(x) = sqrt(2/(b - a)) Trg_j(2 pi floor(j/2) (x - a)/(b - a))`
//! with cosine for even `j` and sine for odd `j`. For odd `d` the first `d`
//! functions are exactly orthonormal for `(f, g)_d = (b - a)/d sum f(z_l) g(z_l)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_dot, compensated_sum};
use crate::seq_estimator::RegressionSample;

/// `phi_j(x)` on `[a, b]`, no range checks.
pub fn basis_function(j: usize, a: f64, b: f64, x: f64) -> f64 {
    let width = b - a;
    if j == 1 {
        return 1.0 / width.sqrt();
    }
    let arg = 2.0 * PI * (j / 2) as f64 * (x - a) / width;
    let trg = if j.is_multiple_of(2) { arg.cos() } else { arg.sin() };
    (2.0 / width).sqrt() * trg
}

/// Basis of size `d` with its values at the grid points cached.
#[derive(Clone, Debug)]
pub struct TrigBasis {
    a: f64,
    b: f64,
    d: usize,
    /// Row `j - 1` holds `phi_j(z_1..z_d)`.
    values: Vec<f64>,
}

impl TrigBasis {
    pub fn new(a: f64, b: f64, d: usize) -> Result<Self> {
        if d == 0 || d.is_multiple_of(2) {
            return Err(Error::Config(format!("basis size d = {d} must be odd")));
        }
        if !(a < b) {
            return Err(Error::Config(format!("interval [{a}, {b}] is empty")));
        }
        let mut values = Vec::with_capacity(d * d);
        for j in 1..=d {
            for l in 1..=d {
                values.push(grid_basis_value(j, l, d, b - a));
            }
        }
        Ok(Self { a, b, d, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Grid step `(b - a)/d`.
    pub fn cell(&self) -> f64 {
        (self.b - self.a) / self.d as f64
    }

    pub fn z(&self, l: usize) -> f64 {
        self.a + (self.b - self.a) * l as f64 / self.d as f64
    }

    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        if j == 0 || j > self.d {
            return Err(Error::Index { index: j, max: self.d });
        }
        if !(x >= self.a && x <= self.b) {
            return Err(Error::Domain(format!("x = {x} outside [{}, {}]", self.a, self.b)));
        }
        Ok(basis_function(j, self.a, self.b, x))
    }

    /// `phi_j(z_1..z_d)`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[(j - 1) * self.d..j * self.d]
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.d {
            return Err(Error::shape(self.d, v.len()));
        }
        Ok(())
    }

    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(self.cell() * compensated_dot(f, g))
    }

    /// `(v, phi_j)_d` for `j = 1..=d`.
    pub fn project(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values)?;
        Ok((1..=self.d).map(|j| self.cell() * compensated_dot(values, self.row(j))).collect())
    }

    /// `sum_j c_j phi_j(z_l)` at every grid point.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs)?;
        Ok((0..self.d)
            .map(|l| compensated_sum(coeffs.iter().enumerate().map(|(i, c)| c * self.values[i * self.d + l])))
            .collect())
    }

    /// Gram matrix of the empirical inner product, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.d * self.d];
        for i in 1..=self.d {
            for j in i..=self.d {
                let v = self.cell() * compensated_dot(self.row(i), self.row(j));
                g[(i - 1) * self.d + j - 1] = v;
                g[(j - 1) * self.d + i - 1] = v;
            }
        }
        g
    }
}

/// `phi_j(z_l)` with the phase reduced through integer arithmetic,
/// `floor(j/2) l mod d`, so large `d` keeps full accuracy.
fn grid_basis_value(j: usize, l: usize, d: usize, width: f64) -> f64 {
    if j == 1 {
        return 1.0 / width.sqrt();
    }
    let k = ((j / 2) * l) % d;
    let arg = 2.0 * PI * k as f64 / d as f64;
    let trg = if j.is_multiple_of(2) { arg.cos() } else { arg.sin() };
    (2.0 / width).sqrt() * trg
}

pub fn discrete_inner_product(basis: &TrigBasis, f: &[f64], g: &[f64]) -> Result<f64> {
    basis.inner_product(f, g)
}

/// Empirical Fourier coefficients and their variance functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    pub theta_hat: Vec<f64>,
    /// `s_{j,d} = (b - a)/d sum_l sigma_l^2 phi_j(z_l)^2`.
    pub s_jd: Vec<f64>,
}

impl FourierCoeffs {
    pub fn len(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_hat.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,theta_hat_j,s_jd\n");
        for (j, (t, s)) in self.theta_hat.iter().zip(&self.s_jd).enumerate() {
            let _ = writeln!(out, "{},{},{}", j + 1, t, s);
        }
        out
    }
}

pub fn fourier_coefficients(basis: &TrigBasis, reg: &RegressionSample) -> Result<FourierCoeffs> {
    basis.check_len(&reg.y)?;
    basis.check_len(&reg.sigma2)?;
    let theta_hat = basis.project(&reg.y)?;
    let s_jd = (1..=basis.d)
        .map(|j| {
            let row = basis.row(j);
            basis.cell() * compensated_sum(reg.sigma2.iter().zip(row).map(|(s, p)| s * p * p))
        })
        .collect();
    Ok(FourierCoeffs { theta_hat, s_jd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(y: Vec<f64>, sigma2: Vec<f64>) -> RegressionSample {
        RegressionSample { y, sigma2, gamma_all: true, points: Vec::new() }
    }

    #[test]
    fn basis_values() {
        let basis = TrigBasis::new(0.0, 1.0, 15).unwrap();
        assert_abs_diff_eq!(basis.eval(1, 0.3).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(basis.eval(2, 0.0).unwrap(), 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(basis.eval(3, 0.25).unwrap(), 2.0_f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(basis.eval(16, 0.5), Err(Error::Index { .. })));
        assert!(matches!(basis.eval(0, 0.5), Err(Error::Index { .. })));
        assert!(TrigBasis::new(0.0, 1.0, 14).is_err());
    }

    #[test]
    fn cached_values_match_direct_evaluation() {
        let basis = TrigBasis::new(-1.0, 2.0, 21).unwrap();
        for j in 1..=21 {
            for l in 1..=21 {
                let direct = basis_function(j, -1.0, 2.0, basis.z(l));
                assert_abs_diff_eq!(basis.row(j)[l - 1], direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn inner_product_cases() {
        let basis = TrigBasis::new(0.0, 1.0, 15).unwrap();
        let phi1 = basis.row(1).to_vec();
        assert_abs_diff_eq!(basis.inner_product(&phi1, &phi1).unwrap(), 1.0, epsilon = 1e-14);
        // Direct summation for phi_2 against phi_3.
        let direct: f64 = (1..=15)
            .map(|l| {
                let z = l as f64 / 15.0;
                basis_function(2, 0.0, 1.0, z) * basis_function(3, 0.0, 1.0, z)
            })
            .sum::<f64>()
            / 15.0;
        assert_abs_diff_eq!(direct, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(basis.inner_product(basis.row(2), basis.row(3)).unwrap(), 0.0, epsilon = 1e-10);
        let ones = vec![1.0; 15];
        assert_abs_diff_eq!(basis.inner_product(&ones, &ones).unwrap(), 1.0, epsilon = 1e-14);
        assert!(matches!(basis.inner_product(&ones, &ones[1..]), Err(Error::Shape { .. })));
    }

    #[test]
    fn coefficients_of_simple_samples() {
        let basis = TrigBasis::new(0.0, 1.0, 15).unwrap();
        let c = fourier_coefficients(&basis, &sample(vec![0.7; 15], vec![0.02; 15])).unwrap();
        assert_abs_diff_eq!(c.theta_hat[0], 0.7, epsilon = 1e-14);
        assert!(c.theta_hat[1..].iter().all(|t| t.abs() < 1e-13));
        assert!(c.s_jd.iter().all(|s| (s - 0.02).abs() < 1e-15));

        let c = fourier_coefficients(&basis, &sample(basis.row(2).to_vec(), vec![0.0; 15])).unwrap();
        for (j, t) in c.theta_hat.iter().enumerate() {
            assert_abs_diff_eq!(*t, if j == 1 { 1.0 } else { 0.0 }, epsilon = 1e-13);
        }
    }

    #[test]
    fn s_jd_is_a_convex_combination() {
        let basis = TrigBasis::new(0.0, 2.0, 9).unwrap();
        let sigma2: Vec<f64> = (0..9).map(|i| 0.01 + 0.003 * i as f64).collect();
        let c = fourier_coefficients(&basis, &sample(vec![0.0; 9], sigma2.clone())).unwrap();
        let (lo, hi) = (sigma2[0], sigma2[8]);
        assert!(c.s_jd.iter().all(|&s| s >= lo - 1e-15 && s <= hi + 1e-15));
    }
}
