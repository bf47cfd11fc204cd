// SPDX-License-Identifier: MIT OR Apache-2.0

//! Efficiency constants: the noise-intensity integral `int (1 - S^2)`, the
//! normalization `upsilon(S)`, the Pinsker constant `l_k(r)` and Sobolev
//! ellipsoid membership in the trigonometric basis.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_sim::Signal;
use crate::numeric::{adaptive_simpson, CompensatedSum};

const QUAD_TOL: f64 = 1e-8;
const QUAD_PANELS: usize = 16;

/// `int_a^b (1 - S(u)^2) du`.
pub fn sigma_star(signal: &Signal) -> f64 {
    let (a, b) = (signal.a(), signal.b());
    adaptive_simpson(|u| {
        let s = signal.eval(u.clamp(a, b)).unwrap_or(0.0);
        1.0 - s * s
    }, a, b, QUAD_TOL * (b - a), QUAD_PANELS)
}

/// `l_k(r) = ((1 + 2k) r)^{1/(2k+1)} (k/(pi (k + 1)))^{2k/(2k+1)}`.
pub fn pinsker_constant(k: u32, r: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("smoothness k must be >= 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Config(format!("radius r = {r} must be positive")));
    }
    let kf = k as f64;
    let p = 2.0 * kf + 1.0;
    Ok(((1.0 + 2.0 * kf) * r).powf(1.0 / p) * (kf / (PI * (kf + 1.0))).powf(2.0 * kf / p))
}

/// `((b - a) varsigma_*)^{-2k/(2k+1)}` from a precomputed integral.
pub fn upsilon_from(sigma_star: f64, width: f64, k: u32) -> f64 {
    let kf = k as f64;
    (width * sigma_star).powf(-2.0 * kf / (2.0 * kf + 1.0))
}

pub fn upsilon(signal: &Signal, k: u32) -> f64 {
    upsilon_from(sigma_star(signal), signal.b() - signal.a(), k)
}

/// Sobolev ellipsoid `sum a_j theta_j^2 <= r` in the trigonometric basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub k: u32,
    pub r: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevMembership {
    pub weighted_sum: f64,
    pub member: bool,
    /// Number of coefficients summed before the tail rule stopped.
    pub terms_used: usize,
}

const TAIL_REL: f64 = 1e-14;
const TAIL_RUN: usize = 50;

impl SobolevSpec {
    /// `a_j = sum_{l=0}^{k} (2 pi floor(j/2)/(b - a))^{2l}`.
    pub fn weight(&self, j: usize) -> f64 {
        let w = (2.0 * PI * (j / 2) as f64 / (self.b - self.a)).powi(2);
        let mut term = 1.0;
        let mut total = 1.0;
        for _ in 0..self.k {
            term *= w;
            total += term;
        }
        total
    }

    /// Weighted sum over the coefficient vector, stopping once 50 consecutive
    /// terms fall below `1e-14` of the running sum.
    pub fn membership(&self, theta: &[f64]) -> SobolevMembership {
        let mut acc = CompensatedSum::new();
        let mut small_run = 0;
        let mut used = 0;
        for (i, t) in theta.iter().enumerate() {
            let term = self.weight(i + 1) * t * t;
            acc.add(term);
            used = i + 1;
            let running = acc.value();
            if running > 0.0 && term < TAIL_REL * running {
                small_run += 1;
                if small_run >= TAIL_RUN {
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        let weighted_sum = acc.value();
        SobolevMembership { weighted_sum, member: weighted_sum <= self.r, terms_used: used }
    }
}

pub fn sobolev_membership(theta: &[f64], spec: &SobolevSpec) -> SobolevMembership {
    spec.membership(theta)
}

/// Risk normalized by the minimax rate and compared with `l_k(r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub signal: String,
    pub noise: String,
    pub k: u32,
    pub r: f64,
    pub n: usize,
    pub sigma_star: f64,
    pub upsilon: f64,
    pub pinsker: f64,
    pub rate: f64,
    /// `n^{2k/(2k+1)} upsilon(S) (b - a) R_bar`.
    pub normalized_risk: f64,
    pub ratio: f64,
}

impl EfficiencyReport {
    pub const CSV_HEADER: &'static str = "signal,k,r,n,noise,sigma_star,upsilon,pinsker,rate,normalized_risk,ratio";

    pub fn csv_row(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.signal,
            self.k,
            self.r,
            self.n,
            self.noise,
            self.sigma_star,
            self.upsilon,
            self.pinsker,
            self.rate,
            self.normalized_risk,
            self.ratio
        );
        out
    }
}

/// Efficiency diagnostic for a grid-averaged risk `risk` measured at `n`.
pub fn efficiency_ratio(risk: f64, noise: &str, signal: &Signal, k: u32, r: f64, n: usize) -> Result<EfficiencyReport> {
    let pinsker = pinsker_constant(k, r)?;
    let width = signal.b() - signal.a();
    let ss = sigma_star(signal);
    let ups = upsilon_from(ss, width, k);
    let kf = k as f64;
    let rate = (n as f64).powf(2.0 * kf / (2.0 * kf + 1.0));
    let normalized_risk = rate * ups * risk * width;
    Ok(EfficiencyReport {
        signal: signal.spec().label().to_string(),
        noise: noise.to_string(),
        k,
        r,
        n,
        sigma_star: ss,
        upsilon: ups,
        pinsker,
        rate,
        normalized_risk,
        ratio: normalized_risk / pinsker,
    })
}
