// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo evaluation of the full pipeline.
//!
//! A cell fixes (signal, noise, n) and averages the squared grid error over
//! `M` replications; replication `r` is seeded from `(base_seed, r)`, so a
//! cell can be computed in parallel and still fold to identical numbers.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier_basis::{fourier_coefficients, FourierCoeffs, TrigBasis};
use crate::model_select::{
    build_weight_grid_with, default_delta, empirical_error, oracle_errors, select, validate_delta, GridParams,
    SelectionResult, WeightGrid,
};
use crate::model_sim::{replication_seed, NoiseInjection, NoiseSampler, NoiseSpec, Signal, SignalSpec, Trajectory};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::seq_estimator::{build_regression, compute_partition, noiseless_regression, GammaGating, GridPartition, RegressionSample};

/// Tuning shared by every replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mu0: f64,
    /// Penalty coefficient; `None` selects `min(1/12, 1/(12 + ln n))`.
    pub delta: Option<f64>,
    pub gating: GammaGating,
    pub y0: f64,
    /// Replace the sequential stage by the exact sample `Y_l = S(z_l)`.
    pub noiseless: bool,
    pub grid: GridParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { mu0: 0.5, delta: None, gating: GammaGating::PerPoint, y0: 0.0, noiseless: false, grid: GridParams::default() }
    }
}

/// Everything that does not change between replications of a cell.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub signal: Signal,
    pub noise: NoiseSpec,
    sampler: NoiseSampler,
    pub n: usize,
    pub config: PipelineConfig,
    pub partition: GridPartition,
    pub basis: TrigBasis,
    pub grid: WeightGrid,
    pub delta: f64,
    /// `S(x_j)`, `j = 0..=n`.
    pub signal_x: Vec<f64>,
    /// `S(z_l)`, `l = 1..=d`.
    pub signal_z: Vec<f64>,
    /// `theta_{j,d} = (S, phi_j)_d`.
    pub theta: Vec<f64>,
    /// `(1/n) sum_{j=1}^{n} S(x_j)^2`.
    pub signal_norm_sq: f64,
}

/// Output of one pass through the pipeline.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub seed: u64,
    /// `None` in noiseless mode.
    pub trajectory: Option<Trajectory>,
    pub regression: RegressionSample,
    pub coeffs: FourierCoeffs,
    pub selection: SelectionResult,
    /// `Er_d` of the selected estimate.
    pub error: f64,
    /// `min_alpha Er_d(lambda_alpha)`.
    pub oracle_error: f64,
}

impl Experiment {
    pub fn new(spec: &SignalSpec, noise: &NoiseSpec, n: usize, config: PipelineConfig) -> Result<Self> {
        let signal = spec.compile()?;
        signal.validate_stability(n)?;
        let sampler = noise.sampler()?;
        let delta = config.delta.unwrap_or_else(|| default_delta(n));
        validate_delta(delta)?;
        let partition = compute_partition(n, spec.a, spec.b, config.mu0)?;
        let d = partition.d;
        let basis = TrigBasis::new(spec.a, spec.b, d)?;
        let grid = build_weight_grid_with(n, spec.a, spec.b, d, config.grid)?;
        let signal_x = signal.design_values(n);
        let signal_z = signal.eval_uniform_grid(d)[1..].to_vec();
        let theta = basis.project(&signal_z)?;
        let signal_norm_sq = compensated_sum(signal_x[1..].iter().map(|s| s * s)) / n as f64;
        if !(signal_norm_sq > 0.0) {
            return Err(Error::Validation("signal has zero design norm".into()));
        }
        Ok(Self {
            signal,
            noise: *noise,
            sampler,
            n,
            config,
            partition,
            basis,
            grid,
            delta,
            signal_x,
            signal_z,
            theta,
            signal_norm_sq,
        })
    }

    pub fn d(&self) -> usize {
        self.partition.d
    }

    pub fn trajectory(&self, seed: u64) -> Trajectory {
        Trajectory::simulate(
            &self.signal_x,
            self.signal.a(),
            self.signal.b(),
            self.config.y0,
            &self.sampler,
            NoiseInjection::Random,
            seed,
        )
    }

    pub fn run(&self, seed: u64) -> Result<PipelineRun> {
        let (trajectory, regression) = if self.config.noiseless {
            (None, noiseless_regression(&self.signal_z, &self.partition))
        } else {
            let traj = self.trajectory(seed);
            let reg = build_regression(&traj, &self.partition, self.config.gating);
            (Some(traj), reg)
        };
        self.finish(seed, trajectory, regression)
    }

    /// Runs coefficient estimation and selection on a given sample.
    pub fn finish(&self, seed: u64, trajectory: Option<Trajectory>, regression: RegressionSample) -> Result<PipelineRun> {
        let coeffs = fourier_coefficients(&self.basis, &regression)?;
        let gate = match self.config.gating {
            GammaGating::Global => regression.gamma_all,
            GammaGating::PerPoint => true,
        };
        let selection = select(&coeffs, &self.grid, &self.basis, self.delta, gate)?;
        let (a, b) = (self.signal.a(), self.signal.b());
        let error = empirical_error(&self.signal_z, &selection.s_star, a, b)?;
        let oracle_error = if gate {
            oracle_errors(&self.theta, &coeffs, &self.grid).into_iter().fold(f64::INFINITY, f64::min)
        } else {
            // Every candidate is gated to zero.
            empirical_error(&self.signal_z, &vec![0.0; self.d()], a, b)?
        };
        Ok(PipelineRun { seed, trajectory, regression, coeffs, selection, error, oracle_error })
    }
}

/// One row of a risk table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub signal: String,
    pub n: usize,
    pub noise: String,
    pub replications: usize,
    pub d: usize,
    /// `(1/d) sum_l (1/M) sum_r (S_hat(z_l) - S(z_l))^2`.
    pub risk: f64,
    /// `risk / ||S||_n^2`.
    pub relative_risk: f64,
    pub signal_norm_sq: f64,
    /// Fraction of replications where every stopping time ended early.
    pub gamma_frequency: f64,
    /// Average fraction of grid points whose stopping time ended early.
    pub point_gamma_frequency: f64,
    pub mean_k: f64,
    pub mean_t: f64,
    pub mean_selected_error: f64,
    pub mean_oracle_error: f64,
    pub delta: f64,
    /// `(1/M) sum_r S_hat^{(r)}(z_l)`.
    pub mean_estimate: Vec<f64>,
    pub z: Vec<f64>,
    pub signal_at_z: Vec<f64>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl CellResult {
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("l,z_l,S_z_l,mean_S_hat\n");
        for (l, ((z, s), m)) in self.z.iter().zip(&self.signal_at_z).zip(&self.mean_estimate).enumerate() {
            let _ = writeln!(out, "{},{},{},{}", l + 1, z, s, m);
        }
        out
    }
}

struct ReplicationSummary {
    sq_err: Vec<f64>,
    estimate: Vec<f64>,
    gamma_all: bool,
    point_gamma: f64,
    k_hat: u32,
    t_hat: f64,
    error: f64,
    oracle_error: f64,
}

fn summarize(run: PipelineRun, signal_z: &[f64]) -> ReplicationSummary {
    let sq_err = run.selection.s_star.iter().zip(signal_z).map(|(e, s)| (e - s) * (e - s)).collect();
    ReplicationSummary {
        sq_err,
        gamma_all: run.regression.gamma_all,
        point_gamma: run.regression.point_gamma_fraction(),
        k_hat: run.selection.k_hat,
        t_hat: run.selection.t_hat,
        error: run.error,
        oracle_error: run.oracle_error,
        estimate: run.selection.s_star,
    }
}

/// Monte-Carlo cell for an already prepared experiment.
pub fn run_experiment(exp: &Experiment, replications: usize, base_seed: u64) -> Result<CellResult> {
    if replications == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let start = Instant::now();
    let summaries: Vec<ReplicationSummary> = (0..replications as u64)
        .into_par_iter()
        .map(|r| exp.run(replication_seed(base_seed, r)).map(|run| summarize(run, &exp.signal_z)))
        .collect::<Result<_>>()?;
    let d = exp.d();
    let m = replications as f64;
    // Fold in replication order.
    let mut sq = vec![CompensatedSum::new(); d];
    let mut est = vec![CompensatedSum::new(); d];
    for s in &summaries {
        for l in 0..d {
            sq[l].add(s.sq_err[l]);
            est[l].add(s.estimate[l]);
        }
    }
    let risk = compensated_sum(sq.iter().map(|c| c.value() / m)) / d as f64;
    let mean = |f: &dyn Fn(&ReplicationSummary) -> f64| compensated_sum(summaries.iter().map(f)) / m;
    Ok(CellResult {
        signal: exp.signal.spec().label().to_string(),
        n: exp.n,
        noise: exp.noise.label(),
        replications,
        d,
        risk,
        relative_risk: risk / exp.signal_norm_sq,
        signal_norm_sq: exp.signal_norm_sq,
        gamma_frequency: mean(&|s| if s.gamma_all { 1.0 } else { 0.0 }),
        point_gamma_frequency: mean(&|s| s.point_gamma),
        mean_k: mean(&|s| s.k_hat as f64),
        mean_t: mean(&|s| s.t_hat),
        mean_selected_error: mean(&|s| s.error),
        mean_oracle_error: mean(&|s| s.oracle_error),
        delta: exp.delta,
        mean_estimate: est.iter().map(|c| c.value() / m).collect(),
        z: exp.partition.z.clone(),
        signal_at_z: exp.signal_z.clone(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

pub fn run_cell(
    signal: &SignalSpec,
    noise: &NoiseSpec,
    n: usize,
    replications: usize,
    base_seed: u64,
    config: &PipelineConfig,
) -> Result<CellResult> {
    let exp = Experiment::new(signal, noise, n, config.clone())?;
    let cell = run_experiment(&exp, replications, base_seed)?;
    log::info!(
        "cell {} n={} noise={} M={}: risk {:.5} ({:.2}s)",
        cell.signal,
        n,
        cell.noise,
        replications,
        cell.risk,
        cell.wall_time_secs
    );
    Ok(cell)
}

/// Worst case over the configured noise families at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustRow {
    pub n: usize,
    pub risk: f64,
    pub relative_risk: f64,
    pub worst_noise: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub signal: SignalSpec,
    pub noises: Vec<NoiseSpec>,
    pub replications: usize,
    pub base_seed: u64,
    pub config: PipelineConfig,
    pub cells: Vec<CellResult>,
    /// Max over the finite noise set, standing in for the sup over the class.
    pub robust: Vec<RobustRow>,
}

impl RiskReport {
    pub const CSV_HEADER: &'static str = "signal,n,noise,M,d,risk,relative_risk,signal_norm_sq,gamma_frequency,\
point_gamma_frequency,mean_k,mean_t,mean_selected_error,mean_oracle_error,delta,robust_risk,robust_relative_risk";

    pub fn cell(&self, n: usize, noise: &str) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.n == n && c.noise == noise)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let robust = self.robust.iter().find(|r| r.n == c.n).expect("robust row per n");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.signal,
                c.n,
                c.noise,
                c.replications,
                c.d,
                c.risk,
                c.relative_risk,
                c.signal_norm_sq,
                c.gamma_frequency,
                c.point_gamma_frequency,
                c.mean_k,
                c.mean_t,
                c.mean_selected_error,
                c.mean_oracle_error,
                c.delta,
                robust.risk,
                robust.relative_risk
            );
        }
        out
    }
}

pub fn run_table(
    signal: &SignalSpec,
    noises: &[NoiseSpec],
    n_list: &[usize],
    replications: usize,
    base_seed: u64,
    config: &PipelineConfig,
) -> Result<RiskReport> {
    if noises.is_empty() || n_list.is_empty() {
        return Err(Error::Config("risk table needs at least one noise family and one n".into()));
    }
    let mut cells = Vec::with_capacity(noises.len() * n_list.len());
    let mut robust = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut worst: Option<RobustRow> = None;
        for noise in noises {
            let cell = run_cell(signal, noise, n, replications, base_seed, config)?;
            if worst.as_ref().is_none_or(|w| cell.risk > w.risk) {
                worst = Some(RobustRow {
                    n,
                    risk: cell.risk,
                    relative_risk: cell.relative_risk,
                    worst_noise: cell.noise.clone(),
                });
            }
            cells.push(cell);
        }
        robust.extend(worst);
    }
    Ok(RiskReport {
        signal: signal.clone(),
        noises: noises.to_vec(),
        replications,
        base_seed,
        config: config.clone(),
        cells,
        robust,
    })
}
