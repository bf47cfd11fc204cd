// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared fixtures for the pipeline benchmarks in `benches/`.

use seqar_core::mc_harness::{Experiment, PipelineConfig};
use seqar_core::{NoiseSpec, SignalSpec, Trajectory};

/// A prepared experiment together with one trajectory drawn from it.
pub fn fixture(signal: &SignalSpec, n: usize, seed: u64) -> (Experiment, Trajectory) {
    let exp = Experiment::new(signal, &NoiseSpec::gaussian(), n, PipelineConfig::default()).expect("valid fixture");
    let traj = exp.trajectory(seed);
    (exp, traj)
}
