// SPDX-License-Identifier: MIT OR Apache-2.0

//! Adaptive sequential estimation for autoregressive models with a varying
//! coefficient, `y_j = S(x_j) y_{j-1} + xi_j`.
//!
//! The pipeline turns one trajectory into a regression sample on `d ~ sqrt n`
//! grid points through truncated sequential estimators
//! ([`seq_estimator`]), expands it in the trigonometric basis
//! ([`fourier_basis`]), picks shrinkage weights by a penalized criterion
//! ([`model_select`]) and optionally maps the estimate back to expansion
//! coefficients ([`beta_recovery`]). [`mc_harness`] runs the whole thing over
//! replications and [`theory`] holds the efficiency constants.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks.

pub mod beta_recovery;
pub mod error;
pub mod fourier_basis;
pub mod mc_harness;
pub mod model_select;
pub mod model_sim;
pub mod numeric;
pub mod seq_estimator;
pub mod theory;

pub use beta_recovery::{beta_error, project_coefficients, step_l2_error, BetaEstimate, ProjectionBasis, TrigPsi};
pub use error::{Error, Result};
pub use fourier_basis::{discrete_inner_product, fourier_coefficients, FourierCoeffs, TrigBasis};
pub use mc_harness::{run_cell, run_experiment, run_table, CellResult, Experiment, PipelineConfig, PipelineRun, RiskReport};
pub use model_select::{
    build_weight_grid, criterion, default_delta, empirical_error, penalty, select, GridParams, RadiusCount,
    SelectionResult, WeightGrid,
};
pub use model_sim::{
    evaluate_signal, generate_trajectory, NoiseFamily, NoiseInjection, NoiseSpec, Signal, SignalKind, SignalSpec,
    Trajectory,
};
pub use seq_estimator::{
    build_regression, compute_partition, GammaGating, GridPartition, RegressionSample, SeqPointResult,
};
pub use theory::{efficiency_ratio, pinsker_constant, sigma_star, upsilon, EfficiencyReport, SobolevSpec};
