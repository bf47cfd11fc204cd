// SPDX-License-Identifier: MIT OR Apache-2.0

//! Penalized selection of Pinsker-type shrinkage weights.
//!
//! Each grid element `alpha = (k, t)` defines a weight profile `lambda_alpha`
//! that keeps the leading coefficients, tapers as `1 - (j/omega)^k` and cuts
//! off past `omega_alpha`. The selected profile minimizes
//! `J(lambda) = sum lambda^2 theta_hat^2 - 2 sum lambda theta_tilde + delta P(lambda)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier_basis::{FourierCoeffs, TrigBasis};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Rule for the number `m` of radius levels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusCount {
    /// `m = floor(ln^2 n)`.
    #[default]
    LogSquared,
    /// `m = floor(1/eps^2)`.
    InverseEpsSquared,
}

/// Tuning of the adaptation grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Base smoothness count, `k* = k_base + floor(sqrt(ln n))`.
    pub k_base: u32,
    pub radius_count: RadiusCount,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { k_base: 150, radius_count: RadiusCount::LogSquared }
    }
}

/// One weight profile of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub k: u32,
    /// Radius level index `i` with `t = i eps`.
    pub t_index: u32,
    pub t: f64,
    pub j_star: f64,
    pub omega_star: f64,
    pub omega: f64,
    pub lambda: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightGrid {
    pub k_star: u32,
    pub eps: f64,
    pub m: u32,
    pub entries: Vec<WeightEntry>,
}

impl WeightGrid {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `((k + 1)(2k + 1)/(pi^{2k} k) t n)^{1/(2k+1)}`, evaluated in log space.
fn pinsker_scale(k: u32, t: f64, n: usize) -> f64 {
    let kf = k as f64;
    let log = ((kf + 1.0) * (2.0 * kf + 1.0) / kf).ln() - 2.0 * kf * PI.ln() + (t * n as f64).ln();
    (log / (2.0 * kf + 1.0)).exp()
}

/// Weight profile `1{j < j*} + (1 - (j/omega)^k) 1{j* <= j <= omega}` for `j = 1..=d`.
pub fn weight_profile(k: u32, j_star: f64, omega: f64, d: usize) -> Vec<f64> {
    (1..=d)
        .map(|j| {
            let jf = j as f64;
            if jf < j_star {
                1.0
            } else if jf <= omega {
                1.0 - (jf / omega).powi(k as i32)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn build_weight_grid(n: usize, a: f64, b: f64, d: usize) -> Result<WeightGrid> {
    build_weight_grid_with(n, a, b, d, GridParams::default())
}

pub fn build_weight_grid_with(n: usize, a: f64, b: f64, d: usize, params: GridParams) -> Result<WeightGrid> {
    if n < 100 {
        return Err(Error::Config(format!("n = {n} is too small, need n >= 100")));
    }
    if !(a < b) {
        return Err(Error::Config(format!("interval [{a}, {b}] is empty")));
    }
    let ln_n = (n as f64).ln();
    let k_star = params.k_base + ln_n.sqrt().floor() as u32;
    let eps = 1.0 / ln_n;
    let m = match params.radius_count {
        RadiusCount::LogSquared => (ln_n * ln_n).floor() as u32,
        RadiusCount::InverseEpsSquared => (1.0 / (eps * eps)).floor() as u32,
    };
    if k_star == 0 || m == 0 {
        return Err(Error::Config("adaptation grid is empty".into()));
    }
    let width = b - a;
    let mut entries = Vec::with_capacity((k_star * m) as usize);
    for k in 1..=k_star {
        let kf = k as f64;
        for t_index in 1..=m {
            let t = t_index as f64 * eps;
            let scale = pinsker_scale(k, t, n);
            let omega_low = ln_n + scale;
            let j_star = omega_low / (200.0 + omega_low.ln());
            let omega_star = j_star + ln_n;
            let omega = omega_star + width.powf(2.0 * kf / (2.0 * kf + 1.0)) * scale;
            entries.push(WeightEntry {
                k,
                t_index,
                t,
                j_star,
                omega_star,
                omega,
                lambda: weight_profile(k, j_star, omega, d),
            });
        }
    }
    Ok(WeightGrid { k_star, eps, m, entries })
}

/// `delta_n = min(1/12, 1/(12 + ln n))`.
pub fn default_delta(n: usize) -> f64 {
    (1.0 / 12.0_f64).min(1.0 / (12.0 + (n as f64).ln()))
}

pub fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 / 12.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("penalty coefficient delta = {delta} must lie in (0, 1/12]")))
    }
}

fn check_lambda(lambda: &[f64], coeffs: &FourierCoeffs) -> Result<()> {
    if lambda.len() != coeffs.len() {
        return Err(Error::shape(coeffs.len(), lambda.len()));
    }
    Ok(())
}

/// `P(lambda) = (b - a)/d sum lambda(j)^2 s_{j,d}`.
pub fn penalty(lambda: &[f64], coeffs: &FourierCoeffs, a: f64, b: f64) -> Result<f64> {
    check_lambda(lambda, coeffs)?;
    let cell = (b - a) / coeffs.len() as f64;
    Ok(cell * compensated_sum(lambda.iter().zip(&coeffs.s_jd).map(|(l, s)| l * l * s)))
}

/// `theta_tilde_j = theta_hat_j^2 - (b - a)/d s_{j,d}`.
pub fn theta_tilde(coeffs: &FourierCoeffs, a: f64, b: f64) -> Vec<f64> {
    let cell = (b - a) / coeffs.len() as f64;
    coeffs.theta_hat.iter().zip(&coeffs.s_jd).map(|(t, s)| t * t - cell * s).collect()
}

pub fn criterion(lambda: &[f64], coeffs: &FourierCoeffs, delta: f64, a: f64, b: f64) -> Result<f64> {
    validate_delta(delta)?;
    check_lambda(lambda, coeffs)?;
    Ok(raw_criterion(lambda, coeffs, &theta_tilde(coeffs, a, b), delta, (b - a) / coeffs.len() as f64))
}

fn raw_criterion(lambda: &[f64], coeffs: &FourierCoeffs, tilde: &[f64], delta: f64, cell: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for (j, &l) in lambda.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let th = coeffs.theta_hat[j];
        acc.add(l * l * (th * th + delta * cell * coeffs.s_jd[j]) - 2.0 * l * tilde[j]);
    }
    acc.value()
}

/// Outcome of the penalized selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub alpha_hat: usize,
    pub k_hat: u32,
    pub t_hat: f64,
    pub lambda_hat: Vec<f64>,
    pub j_values: Vec<f64>,
    /// `S_hat_*(z_l)` for `l = 1..=d`.
    pub s_star: Vec<f64>,
    pub delta: f64,
}

impl SelectionResult {
    pub fn criterion_csv(&self, grid: &WeightGrid) -> String {
        let mut out = String::from("alpha,k,t,omega,J\n");
        for (i, (e, j)) in grid.entries.iter().zip(&self.j_values).enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", i, e.k, e.t, e.omega, j);
        }
        out
    }

    pub fn estimate_csv(&self, basis: &TrigBasis) -> String {
        let mut out = String::from("l,z_l,S_hat\n");
        for (l, v) in self.s_star.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", l + 1, basis.z(l + 1), v);
        }
        out
    }
}

/// Index of the smallest value; ties go to the earliest index.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if !(*v < values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// `S_lambda(z_l) = sum_j lambda(j) theta_hat_j phi_j(z_l)`.
pub fn weighted_estimate(basis: &TrigBasis, lambda: &[f64], theta_hat: &[f64]) -> Result<Vec<f64>> {
    let shrunk: Vec<f64> = lambda.iter().zip(theta_hat).map(|(l, t)| l * t).collect();
    basis.synthesize(&shrunk)
}

pub fn select(
    coeffs: &FourierCoeffs,
    grid: &WeightGrid,
    basis: &TrigBasis,
    delta: f64,
    gamma: bool,
) -> Result<SelectionResult> {
    validate_delta(delta)?;
    if grid.is_empty() {
        return Err(Error::Config("adaptation grid is empty".into()));
    }
    for e in &grid.entries {
        check_lambda(&e.lambda, coeffs)?;
    }
    let (a, b) = (basis.a(), basis.b());
    let tilde = theta_tilde(coeffs, a, b);
    let cell = basis.cell();
    let j_values: Vec<f64> =
        grid.entries.par_iter().map(|e| raw_criterion(&e.lambda, coeffs, &tilde, delta, cell)).collect();
    let alpha_hat = argmin(&j_values).expect("grid is not empty");
    let entry = &grid.entries[alpha_hat];
    let s_star = if gamma {
        weighted_estimate(basis, &entry.lambda, &coeffs.theta_hat)?
    } else {
        vec![0.0; basis.d()]
    };
    Ok(SelectionResult {
        alpha_hat,
        k_hat: entry.k,
        t_hat: entry.t,
        lambda_hat: entry.lambda.clone(),
        j_values,
        s_star,
        delta,
    })
}

/// `Er_d = (b - a)/d sum_l (estimate(z_l) - S(z_l))^2`.
pub fn empirical_error(signal: &[f64], estimate: &[f64], a: f64, b: f64) -> Result<f64> {
    if signal.len() != estimate.len() {
        return Err(Error::shape(signal.len(), estimate.len()));
    }
    let cell = (b - a) / signal.len() as f64;
    Ok(cell * compensated_sum(signal.iter().zip(estimate).map(|(s, e)| (e - s) * (e - s))))
}

/// `Er_d(lambda_alpha)` for every grid element, through the coefficient
/// identity `Er_d(lambda) = sum_j (lambda(j) theta_hat_j - theta_j)^2`
/// with `theta_j = (S, phi_j)_d`.
pub fn oracle_errors(theta: &[f64], coeffs: &FourierCoeffs, grid: &WeightGrid) -> Vec<f64> {
    grid.entries
        .par_iter()
        .map(|e| {
            compensated_sum(
                e.lambda
                    .iter()
                    .zip(&coeffs.theta_hat)
                    .zip(theta)
                    .map(|((l, th), t)| (l * th - t) * (l * th - t)),
            )
        })
        .collect()
}
