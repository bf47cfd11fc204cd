// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-stage truncated sequential estimation of `S(z_l)` on disjoint windows.
//!
//! For every grid point `z_l` the window `k1..=k2` is split at
//! `iota = k1 + q`. The first block gives a preliminary ratio estimate that is
//! clamped away from +/-1 and turned into a threshold `H`; the second block
//! accumulates `y_{j-1}^2` until the threshold is reached, with a fractional
//! weight on the last observation so that the mass hits `H` exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_sim::Trajectory;
use crate::numeric::CompensatedSum;

/// Observation indices used at one grid point (1-based, as `y[j]` is `y_j`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub l: usize,
    pub k1: usize,
    pub iota: usize,
    pub k2: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPartition {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub d: usize,
    pub z: Vec<f64>,
    pub h: f64,
    pub q_pre: usize,
    pub mu0: f64,
    pub windows: Vec<Window>,
}

/// `d = 2 floor(sqrt(n)/2) + 1`.
pub fn grid_size(n: usize) -> usize {
    2 * ((n as f64).sqrt() / 2.0).floor() as usize + 1
}

/// The clamp margin `1/(2 + ln n)`.
pub fn clamp_margin(n: usize) -> f64 {
    1.0 / (2.0 + (n as f64).ln())
}

pub fn compute_partition(n: usize, a: f64, b: f64, mu0: f64) -> Result<GridPartition> {
    if n < 100 {
        return Err(Error::Config(format!("n = {n} is too small, need n >= 100")));
    }
    if !(mu0 > 0.0 && mu0 < 1.0) {
        return Err(Error::Config(format!("mu0 = {mu0} must lie in (0, 1)")));
    }
    if !(a < b) {
        return Err(Error::Config(format!("interval [{a}, {b}] is empty")));
    }
    let d = grid_size(n);
    let q_pre = ((n as f64 / (2 * d) as f64).powf(mu0)).floor() as usize;
    let mut windows = Vec::with_capacity(d);
    for l in 1..=d {
        // n l/d -/+ n/(2d) in exact integer arithmetic.
        let k1 = n * (2 * l - 1) / (2 * d) + 1;
        let k2 = (n * (2 * l + 1) / (2 * d)).min(n);
        let iota = k1 + q_pre;
        if iota >= k2 {
            return Err(Error::Config(format!(
                "window {l} too short: iota = {iota} >= k2 = {k2} (n = {n}, d = {d}, q = {q_pre})"
            )));
        }
        if let Some(prev) = windows.last() {
            let prev: &Window = prev;
            if prev.k2 >= k1 {
                return Err(Error::Config(format!("windows {} and {l} overlap", l - 1)));
            }
        }
        windows.push(Window { l, k1, iota, k2 });
    }
    let z = (1..=d).map(|l| a + (b - a) * l as f64 / d as f64).collect();
    Ok(GridPartition { n, a, b, d, z, h: (b - a) / (2 * d) as f64, q_pre, mu0, windows })
}

/// Ratio `sum y_{j-1} y_j / sum y_{j-1}^2` over `j = k1..=iota`; zero when the
/// denominator vanishes.
pub fn preliminary_estimate(y: &[f64], k1: usize, iota: usize) -> f64 {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for j in k1..=iota {
        num.add(y[j - 1] * y[j]);
        den.add(y[j - 1] * y[j - 1]);
    }
    let den = den.value();
    if den > 0.0 {
        num.value() / den
    } else {
        0.0
    }
}

/// Clamp into `[-1 + e, 1 - e]` with `e = 1/(2 + ln n)`.
pub fn project_estimate(s_hat: f64, n: usize) -> f64 {
    let e = clamp_margin(n);
    s_hat.clamp(-1.0 + e, 1.0 - e)
}

/// `H = (1 - e)(k2 - iota)/(1 - s^2)`.
pub fn threshold(s_tilde: f64, k2: usize, iota: usize, n: usize) -> f64 {
    let e = clamp_margin(n);
    (1.0 - e) * (k2 - iota) as f64 / (1.0 - s_tilde * s_tilde)
}

/// Result of running the stopping rule on one window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingOutcome {
    pub tau: usize,
    pub kappa: f64,
    pub gamma: bool,
    /// `sum_{j=iota+1}^{tau-1} u_j`.
    pub partial_mass: f64,
    /// `u_tau`.
    pub u_tau: f64,
}

/// First `k` in `(iota, k2]` with `sum_{j=iota+1}^{k} u_j >= H`, where
/// `u_j = y_{j-1}^2` for `j < k2` and `u_{k2} = H`.
pub fn run_stopping_rule(y: &[f64], iota: usize, k2: usize, h: f64) -> StoppingOutcome {
    let mut mass = CompensatedSum::new();
    for j in iota + 1..=k2 {
        let u = if j < k2 { y[j - 1] * y[j - 1] } else { h };
        let before = mass.value();
        mass.add(u);
        if mass.value() >= h {
            let kappa = ((h - before) / u).sqrt().min(1.0);
            return StoppingOutcome { tau: j, kappa, gamma: j < k2, partial_mass: before, u_tau: u };
        }
    }
    unreachable!("u_k2 = H forces a stop at k2")
}

/// `(sum_{j=iota+1}^{tau-1} y_{j-1} y_j + kappa y_{tau-1} y_tau) / H`, before gating.
pub fn sequential_ratio(y: &[f64], iota: usize, h: f64, stop: &StoppingOutcome) -> f64 {
    let mut num = CompensatedSum::new();
    for j in iota + 1..stop.tau {
        num.add(y[j - 1] * y[j]);
    }
    num.add(stop.kappa * y[stop.tau - 1] * y[stop.tau]);
    num.value() / h
}

/// The sequential estimate gated by `{tau < k2}`.
pub fn sequential_estimate(y: &[f64], iota: usize, h: f64, stop: &StoppingOutcome) -> f64 {
    if stop.gamma {
        sequential_ratio(y, iota, h, stop)
    } else {
        0.0
    }
}

/// Per-grid-point output of the two-stage procedure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqPointResult {
    pub l: usize,
    pub s_pre: f64,
    pub h_threshold: f64,
    pub tau: usize,
    pub kappa: f64,
    pub gamma: bool,
    pub s_star: f64,
    pub sigma2: f64,
    pub partial_mass: f64,
    pub u_tau: f64,
}

impl SeqPointResult {
    /// `sum u_j + kappa^2 u_tau`, equal to the threshold by construction.
    pub fn stopped_mass(&self) -> f64 {
        self.partial_mass + self.kappa * self.kappa * self.u_tau
    }
}

pub fn estimate_point(y: &[f64], window: &Window, n: usize) -> SeqPointResult {
    let s_pre = project_estimate(preliminary_estimate(y, window.k1, window.iota), n);
    let h = threshold(s_pre, window.k2, window.iota, n);
    let stop = run_stopping_rule(y, window.iota, window.k2, h);
    SeqPointResult {
        l: window.l,
        s_pre,
        h_threshold: h,
        tau: stop.tau,
        kappa: stop.kappa,
        gamma: stop.gamma,
        s_star: sequential_estimate(y, window.iota, h, &stop),
        sigma2: 1.0 / h,
        partial_mass: stop.partial_mass,
        u_tau: stop.u_tau,
    }
}

/// How the stopping events gate the regression sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaGating {
    /// `Y_l = S*_l`, each point gated by its own event `{tau_l < k2_l}`.
    #[default]
    PerPoint,
    /// `Y_l = S*_l 1_Gamma` with `Gamma` the intersection over all points.
    Global,
}

/// Regression sample `Y_l` at the grid points with its variance proxies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionSample {
    pub y: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub gamma_all: bool,
    /// Empty for samples built without a trajectory.
    pub points: Vec<SeqPointResult>,
}

impl RegressionSample {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Fraction of grid points whose stopping time ended before the window.
    pub fn point_gamma_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 1.0;
        }
        self.points.iter().filter(|p| p.gamma).count() as f64 / self.points.len() as f64
    }

    pub fn to_csv(&self, part: &GridPartition) -> String {
        let mut out = String::from("l,z_l,Y_l,sigma2_l,tau_l,gamma_l\n");
        for (i, (y, s2)) in self.y.iter().zip(&self.sigma2).enumerate() {
            let (tau, gamma) = match self.points.get(i) {
                Some(p) => (p.tau.to_string(), p.gamma),
                None => (String::new(), true),
            };
            let _ = writeln!(out, "{},{},{},{},{},{}", i + 1, part.z[i], y, s2, tau, gamma);
        }
        out
    }
}

pub fn build_regression(traj: &Trajectory, part: &GridPartition, gating: GammaGating) -> RegressionSample {
    let points: Vec<SeqPointResult> = part.windows.iter().map(|w| estimate_point(&traj.y, w, part.n)).collect();
    let gamma_all = points.iter().all(|p| p.gamma);
    let keep = match gating {
        GammaGating::PerPoint => true,
        GammaGating::Global => gamma_all,
    };
    let y = points.iter().map(|p| if keep { p.s_star } else { 0.0 }).collect();
    let sigma2 = points.iter().map(|p| p.sigma2).collect();
    RegressionSample { y, sigma2, gamma_all, points }
}

/// Noiseless sample `Y_l = S(z_l)` with the thresholds the procedure would
/// target when the preliminary estimate is exact.
pub fn noiseless_regression(signal_at_z: &[f64], part: &GridPartition) -> RegressionSample {
    let sigma2 = part
        .windows
        .iter()
        .zip(signal_at_z)
        .map(|(w, &s)| 1.0 / threshold(project_estimate(s, part.n), w.k2, w.iota, part.n))
        .collect();
    RegressionSample { y: signal_at_z.to_vec(), sigma2, gamma_all: true, points: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn partition_for_n_200() {
        let p = compute_partition(200, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(p.d, 15);
        assert_abs_diff_eq!(p.h, 1.0 / 30.0, epsilon = 1e-15);
        assert_eq!((p.windows[0].k1, p.windows[0].k2), (7, 20));
        assert_eq!(p.q_pre, 2);
        assert_eq!(p.windows[0].iota, 9);
        for pair in p.windows.windows(2) {
            assert!(pair[0].k2 < pair[1].k1);
        }
        assert_eq!(p.windows.last().unwrap().k2, 200);
    }

    #[test]
    fn partition_rejects_bad_config() {
        assert!(matches!(compute_partition(50, 0.0, 1.0, 0.5), Err(Error::Config(_))));
        assert!(matches!(compute_partition(200, 0.0, 1.0, 1.0), Err(Error::Config(_))));
        // q = (n/2d)^0.99 eats the whole window.
        assert!(matches!(compute_partition(200, 0.0, 1.0, 0.99), Err(Error::Config(_))));
    }

    #[test]
    fn partition_matches_float_formulas() {
        for n in [100, 200, 500, 1000, 10_000, 70_000] {
            let p = compute_partition(n, 0.0, 1.0, 0.5).unwrap();
            let d = p.d as f64;
            for w in &p.windows {
                let zl = w.l as f64 / d;
                let k1 = (n as f64 * zl - n as f64 / (2.0 * d) + 1e-9).floor() as usize + 1;
                let k2 = ((n as f64 * zl + n as f64 / (2.0 * d) + 1e-9).floor() as usize).min(n);
                assert_eq!((w.k1, w.k2), (k1, k2), "n = {n}, l = {}", w.l);
            }
        }
    }

    #[test]
    fn preliminary_ratio_cases() {
        let y = [0.0, 1.0, 0.3, 0.09];
        assert_abs_diff_eq!(preliminary_estimate(&[1.0, 0.3, 0.3], 1, 1), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(preliminary_estimate(&y, 2, 3), 0.3, epsilon = 1e-15);
        assert_eq!(preliminary_estimate(&[0.0; 5], 1, 4), 0.0);
        assert_abs_diff_eq!(preliminary_estimate(&[1.0, 2.0, 4.0], 1, 2), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_clamps_symmetrically() {
        let bound = 1.0 - 1.0 / (2.0 + 200.0_f64.ln());
        assert_abs_diff_eq!(project_estimate(2.0, 200), bound, epsilon = 1e-15);
        // 1 - 1/(2 + 5.298317) evaluated independently.
        assert_abs_diff_eq!(project_estimate(2.0, 200), 0.862982, epsilon = 1e-6);
        assert_abs_diff_eq!(project_estimate(-5.0, 200), -0.862982, epsilon = 1e-6);
        assert_eq!(project_estimate(0.0, 200), 0.0);
    }

    #[test]
    fn threshold_values() {
        assert_abs_diff_eq!(threshold(0.0, 20, 9, 200), 9.492803, epsilon = 1e-6);
        assert!(threshold(0.5, 20, 9, 200) > threshold(0.2, 20, 9, 200));
        assert!(threshold(-0.5, 20, 9, 200) > threshold(0.0, 20, 9, 200));
    }

    #[test]
    fn stopping_rule_hand_cases() {
        // u_j = y_{j-1}^2 = 4 for every j.
        let y = vec![2.0; 12];
        let stop = run_stopping_rule(&y, 2, 11, 9.0);
        assert_eq!(stop.tau, 5);
        assert_abs_diff_eq!(stop.kappa, 0.5, epsilon = 1e-15);
        assert!(stop.gamma);

        let y = vec![5.0; 12];
        let stop = run_stopping_rule(&y, 2, 11, 9.0);
        assert_eq!(stop.tau, 3);
        assert_abs_diff_eq!(stop.kappa, (9.0_f64 / 25.0).sqrt(), epsilon = 1e-15);

        let y = vec![0.0; 12];
        let stop = run_stopping_rule(&y, 2, 11, 9.0);
        assert_eq!((stop.tau, stop.kappa, stop.gamma), (11, 1.0, false));
        assert_eq!(sequential_estimate(&y, 2, 9.0, &stop), 0.0);
    }

    #[test]
    fn noiseless_stream_oracle() {
        // y_j = c y_{j-1} starting from y_iota = 2; u = 4, 4c^2, 4c^4, ...
        let c: f64 = 0.8;
        let iota = 3;
        let mut y = vec![0.0; 10];
        y[iota] = 2.0;
        for j in iota + 1..10 {
            y[j] = c * y[j - 1];
        }
        let h = 6.0;
        let stop = run_stopping_rule(&y, iota, 9, h);
        // 4 + 2.56 >= 6, so tau = iota + 2 with kappa^2 = (6 - 4)/2.56.
        assert_eq!(stop.tau, iota + 2);
        let kappa = ((h - 4.0) / 2.56_f64).sqrt();
        assert_abs_diff_eq!(stop.kappa, kappa, epsilon = 1e-15);
        let oracle = c * (4.0 + kappa * 2.56) / h;
        let expected = c * (h - kappa * kappa * 2.56 + kappa * 2.56) / h;
        assert_abs_diff_eq!(oracle, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(sequential_estimate(&y, iota, h, &stop), oracle, epsilon = 1e-14);
    }

    #[test]
    fn global_gating_zeroes_everything() {
        let part = compute_partition(200, 0.0, 1.0, 0.5).unwrap();
        let mut y = vec![0.0; 201];
        y[0] = 1.0;
        let traj = Trajectory { n: 200, a: 0.0, b: 1.0, y0: 1.0, x: vec![0.0; 201], y, seed: 0 };
        let reg = build_regression(&traj, &part, GammaGating::Global);
        assert!(!reg.gamma_all);
        assert!(reg.y.iter().all(|&v| v == 0.0));
    }
}
